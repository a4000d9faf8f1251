#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"
#include "mobnet/parallel.hpp"
#include "mobnet/stats.hpp"

namespace mobnet {

namespace {

double deviation(std::span<const double> x, const Vector& pi) {
  double total = 0.0;
  for (double v : x) total += v;
  if (total <= 0.0) return 0.0;
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) d += std::abs(x[k] / total - pi(static_cast<Eigen::Index>(k)));
  return d;
}

// 1 when the ratio leaves the delta-ball no later than t and no later than the
// population first drops to phi.
bool deviates_first(const StatePath& path, const Vector& pi, double delta, double phi, double t) {
  for (std::size_t i = 0; i < path.size() && path.time(i) <= t; ++i) {
    if (deviation(path.state(i), pi) >= delta) return true;
    if (path.norm(i) <= phi) return false;
  }
  return false;
}

}  // namespace

ExperimentReport run_hitting(const NetworkParams& params, const HittingSettings& s, const RunOptions& opt) {
  if (s.phi_grid.size() < 2) throw Error(ErrorCode::Config, "need at least two phi values");
  if (!(s.t > 0.0) || !(s.delta > 0.0) || !(s.start_multiple > 1.0)) {
    throw Error(ErrorCode::Config, "need t > 0, delta > 0 and start_multiple > 1");
  }
  using detail::num;
  const Vector& pi = params.mobility.pi;
  const int K = params.K();
  const Stream root = detail::experiment_stream(opt.seed, detail::ExperimentTag::Hitting);
  const std::size_t P = s.phi_grid.size();

  auto rows = replicate(P * s.reps, opt.threads, [&](std::size_t i) {
    const std::size_t pi_idx = i / s.reps;
    const std::size_t r = i % s.reps;
    const double phi = s.phi_grid[pi_idx];
    const State y = proportional_state(pi, std::llround(s.start_multiple * phi));
    const auto b = simulate_coupled(params, y, s.t, root.child(pi_idx).child(r));
    return std::vector<double>{phi, static_cast<double>(r),
                               deviates_first(b.open_path, pi, s.delta, phi, s.t) ? 1.0 : 0.0,
                               deviates_first(b.closed_path, pi, s.delta, -1.0, s.t) ? 1.0 : 0.0};
  });
  ExperimentReport rep;
  rep.id = "hitting";
  rep.seed = opt.seed;
  Table table("replications", {"phi", "rep", "open_hit", "closed_hit"});
  for (const auto& row : rows) table.add(row);

  auto& out = rep.add_table("hitting", {"phi", "size", "rho_start", "open_hits", "open_p", "open_lo", "open_hi",
                                        "closed_hits", "closed_p", "closed_overlay"});
  const auto phi_col = table.column("phi");
  const auto open = table.column("open_hit");
  const auto closed = table.column("closed_hit");
  std::vector<double> xs, ys, ws;
  for (std::size_t j = 0; j < P; ++j) {
    const double phi = s.phi_grid[j];
    const State y = proportional_state(pi, std::llround(s.start_multiple * phi));
    const double size = std::llround(s.start_multiple * phi);
    std::uint64_t n = 0, ho = 0, hc = 0;
    for (std::size_t i = 0; i < phi_col.size(); ++i) {
      if (phi_col[i] != phi) continue;
      ++n;
      ho += open[i] > 0.5;
      hc += closed[i] > 0.5;
    }
    const auto w = wilson_interval(ho, n);
    const double overlay = std::exp(K * std::log(s.t) - s.delta * s.delta * size / 8.0);
    out.add({phi, size, rho_metric(y, pi), double(ho), w.estimate, w.lo, w.hi, double(hc),
             double(hc) / double(n), overlay});
    // Continuity-corrected frequency keeps the log finite at zero hits.
    const double p = (double(ho) + 0.5) / (double(n) + 1.0);
    xs.push_back(phi);
    ys.push_back(std::log(p));
    ws.push_back(double(n) * p / (1.0 - p));
  }
  const auto fit = weighted_linear_fit(xs, ys, ws);
  auto& f = rep.add_table("decay_fit", {"intercept", "slope", "slope_se"});
  f.add({fit.intercept, fit.slope, fit.slope_se});
  rep.add_verdict("log_p_slope", fit.slope, fit.slope_se, 0.0, s.reps * P, fit.slope + 1.96 * fit.slope_se < 0.0);
  rep.tables.push_back(std::move(table));
  return rep;
}

}  // namespace mobnet
