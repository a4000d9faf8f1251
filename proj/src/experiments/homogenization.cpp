#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "mobnet/diffusion.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"
#include "mobnet/parallel.hpp"
#include "mobnet/stats.hpp"

namespace mobnet {

namespace {

struct Times {
  std::vector<double> closed, open;
  double horizon = 0.0;
};

Times evaluation_times(const NetworkParams& params, const std::vector<double>& eps_grid) {
  const double K = params.K();
  Times t;
  for (double eps : eps_grid) {
    t.closed.push_back(mixing_time_tau(params.mobility, eps / (2.0 * K)));
    t.open.push_back(mixing_time_tau(params.mobility, eps / (4.0 * K)));
    t.horizon = std::max({t.horizon, t.closed.back(), t.open.back()});
  }
  t.horizon = std::max(t.horizon, 1e-9);
  return t;
}

std::int64_t size_of(const State& y) {
  std::int64_t s = 0;
  for (auto v : y) s += v;
  return s;
}

}  // namespace

ExperimentReport run_homogenization(const NetworkParams& params, const HomogenizationSettings& s,
                                    const RunOptions& opt) {
  if (s.initial_states.empty()) throw Error(ErrorCode::Config, "no initial states");
  if (s.eps_grid.empty()) throw Error(ErrorCode::Config, "empty eps grid");
  for (const auto& y : s.initial_states) {
    if (static_cast<int>(y.size()) != params.K()) throw Error(ErrorCode::Config, "initial state has the wrong length");
  }
  const Times times = evaluation_times(params, s.eps_grid);
  const Stream root = detail::experiment_stream(opt.seed, detail::ExperimentTag::Homogenization);
  const std::size_t E = s.eps_grid.size();
  const std::size_t total = s.initial_states.size() * s.reps;

  // One coupled run per (state, rep) serves every eps and both systems.
  auto rows = replicate(total, opt.threads, [&](std::size_t i) {
    const std::size_t yi = i / s.reps;
    const std::size_t r = i % s.reps;
    const auto b = simulate_coupled(params, s.initial_states[yi], times.horizon, root.child(yi).child(r));
    std::vector<std::vector<double>> out;
    for (std::size_t e = 0; e < E; ++e) {
      out.push_back({static_cast<double>(yi), static_cast<double>(e), static_cast<double>(r),
                     rho_metric(b.closed_path.at(times.closed[e]), params.mobility.pi),
                     rho_metric(b.open_path.at(times.open[e]), params.mobility.pi)});
    }
    return out;
  });
  Table table("replications", {"state", "eps_index", "rep", "closed_rho", "open_rho"});
  for (const auto& block : rows)
    for (const auto& row : block) table.add(row);
  return reduce_homogenization(params, s, table, opt.seed);
}

ExperimentReport reduce_homogenization(const NetworkParams& params, const HomogenizationSettings& s,
                                       const Table& replications, std::uint64_t seed) {
  const Times times = evaluation_times(params, s.eps_grid);
  const double K = params.K();
  ExperimentReport rep;
  rep.id = "homogenize";
  rep.seed = seed;
  auto& out = rep.add_table("homogenization", {"state", "size", "eps", "system", "time", "rho_t0",
                                               "p_hat", "se", "wilson_lo", "wilson_hi", "bound"});
  const auto st = replications.column("state");
  const auto ei = replications.column("eps_index");
  const auto closed = replications.column("closed_rho");
  const auto open = replications.column("open_rho");

  for (std::size_t yi = 0; yi < s.initial_states.size(); ++yi) {
    const State& y = s.initial_states[yi];
    const double size = static_cast<double>(size_of(y));
    const double rho0 = rho_metric(y, params.mobility.pi);
    for (std::size_t e = 0; e < s.eps_grid.size(); ++e) {
      const double eps = s.eps_grid[e];
      std::uint64_t n = 0, hit_closed = 0, hit_open = 0;
      for (std::size_t i = 0; i < st.size(); ++i) {
        if (st[i] != static_cast<double>(yi) || ei[i] != static_cast<double>(e)) continue;
        ++n;
        // An empty closed system is homogenized by convention.
        if (size > 0 && closed[i] >= eps) ++hit_closed;
        if (open[i] >= eps) ++hit_open;
      }
      if (n == 0) throw Error(ErrorCode::InsufficientCycles, "no replications for a state");
      const double bound_closed = size > 0 ? std::min(1.0, 2.0 * K * std::exp(-eps * eps * size / (4.0 * K * K))) : 0.0;
      const double u = params.kappa_bound * times.open[e];
      const double v = eps * size / (4.0 * K);
      const double poisson = v <= u ? 1.0 : poisson_tail_exact(u, v);
      const double bound_open = std::min(1.0, poisson + 2.0 * K * std::exp(-eps * eps * size / (16.0 * K * K)));

      const auto wc = wilson_interval(hit_closed, n);
      const double sec = binomial_se(hit_closed, n);
      out.add_cells({detail::num(double(yi)), detail::num(size), detail::num(eps), "closed",
                     detail::num(times.closed[e]), detail::num(rho0), detail::num(wc.estimate),
                     detail::num(sec), detail::num(wc.lo), detail::num(wc.hi), detail::num(bound_closed)});
      rep.add_verdict(fmt::format("closed_state{}_eps{}", yi, detail::num(eps)), wc.estimate, sec,
                      bound_closed, n, wc.estimate <= bound_closed + 3.0 * sec);

      const auto wo = wilson_interval(hit_open, n);
      const double seo = binomial_se(hit_open, n);
      out.add_cells({detail::num(double(yi)), detail::num(size), detail::num(eps), "open",
                     detail::num(times.open[e]), detail::num(rho0), detail::num(wo.estimate),
                     detail::num(seo), detail::num(wo.lo), detail::num(wo.hi), detail::num(bound_open)});
      rep.add_verdict(fmt::format("open_state{}_eps{}", yi, detail::num(eps)), wo.estimate, seo,
                      bound_open, n, wo.estimate <= bound_open + 3.0 * seo);
    }
  }
  rep.tables.push_back(replications);
  return rep;
}

}  // namespace mobnet
