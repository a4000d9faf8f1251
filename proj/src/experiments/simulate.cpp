#include <algorithm>

#include "common.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"

namespace mobnet {

namespace {

Table sampled(std::string name, const StatePath& path, const std::vector<double>& grid) {
  std::vector<std::string> cols{"t"};
  for (int k = 0; k < path.dim(); ++k) cols.push_back(fmt::format("x{}", k + 1));
  Table t(std::move(name), cols);
  for (double s : grid) {
    std::vector<double> row{s};
    const auto x = path.at(s);
    row.insert(row.end(), x.begin(), x.end());
    t.add(row);
  }
  return t;
}

}  // namespace

ExperimentReport run_simulate(const NetworkParams& params, const SimulateSettings& s, const RunOptions& opt) {
  if (static_cast<int>(s.initial.size()) != params.K()) throw Error(ErrorCode::Config, "initial state has the wrong length");
  std::vector<double> grid = s.grid;
  if (grid.empty())
    for (int i = 0; i <= 100; ++i) grid.push_back(s.horizon * i / 100.0);
  for (double t : grid)
    if (!(t >= 0.0 && t <= s.horizon)) throw Error(ErrorCode::Config, "grid outside [0, horizon]");
  const Stream root = detail::experiment_stream(opt.seed, detail::ExperimentTag::Simulate);
  ExperimentReport rep;
  rep.id = "simulate";
  rep.seed = opt.seed;

  if (s.coupled) {
    const auto b = simulate_coupled(params, s.initial, s.horizon, root.child(0));
    const auto check = check_coupling(b, params.mobility.pi);
    rep.tables.push_back(sampled("open_path", b.open_path, grid));
    rep.tables.push_back(sampled("closed_path", b.closed_path, grid));
    rep.tables.push_back(sampled("mm1_path", b.mm1_path, grid));
    auto& c = rep.add_table("coupling", {"events", "assertions", "violations"});
    c.add({double(b.event_count), double(check.assertions), double(check.violations)});
    rep.add_verdict("coupling_violations", double(check.violations), 0.0, 0.0, check.assertions,
                    check.ok() && check.assertions > 0);
  }
  if (s.event_log || !s.coupled) {
    SimOptions so;
    so.record_events = s.event_log;
    const auto run = simulate_open_run(params, s.initial, s.horizon, root.child(1), so);
    rep.tables.push_back(sampled("path", run.path, grid));
    if (s.event_log) {
      std::vector<std::string> cols{"t", "type", "from", "to"};
      Table& ev = rep.add_table("events", cols);
      for (const auto& e : run.events) {
        ev.add_cells({detail::num(e.t), to_string(e.type), std::to_string(e.from + 1), std::to_string(e.to + 1)});
      }
    }
  }
  return rep;
}

}  // namespace mobnet
