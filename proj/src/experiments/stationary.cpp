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

int max_level_of(const StationarySettings& s) {
  return std::max({s.balance_max_level, s.geometric_q_max, 24}) + 8;
}

std::vector<std::string> batch_columns(int K, int r_max, int max_level) {
  std::vector<std::string> c{"n", "batch", "cycles", "length"};
  for (int r = 0; r <= r_max; ++r) c.push_back(fmt::format("moment{}", r));
  for (int m = 0; m <= max_level; ++m) c.push_back(fmt::format("level{}", m));
  for (int m = 0; m <= max_level; ++m)
    for (int k = 0; k < K; ++k) c.push_back(fmt::format("boundary{}_{}", m, k + 1));
  c.push_back("overflow");
  return c;
}

void append_batches(Table& t, int n, const StationarySample& s) {
  for (std::size_t i = 0; i < s.batches.size(); ++i) {
    const auto& b = s.batches[i];
    std::vector<double> row{static_cast<double>(n), static_cast<double>(i), static_cast<double>(b.cycles), b.length};
    row.insert(row.end(), b.moment_time.begin(), b.moment_time.end());
    row.insert(row.end(), b.level_time.begin(), b.level_time.end());
    row.insert(row.end(), b.boundary_time.begin(), b.boundary_time.end());
    row.push_back(b.overflow_time);
    t.add(row);
  }
}

StationarySample sample_from_table(const Table& t, int n, int K, int r_max, int max_level) {
  StationarySample s;
  s.K = K;
  s.r_max = r_max;
  s.max_level = max_level;
  const std::size_t width = t.columns().size();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    if (std::stod(t.cell(i, 0)) != static_cast<double>(n)) continue;
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) row[j] = std::stod(t.cell(i, j));
    CycleBatch b;
    std::size_t j = 2;
    b.cycles = static_cast<std::uint64_t>(row[j++]);
    b.length = row[j++];
    for (int r = 0; r <= r_max; ++r) b.moment_time.push_back(row[j++]);
    for (int m = 0; m <= max_level; ++m) b.level_time.push_back(row[j++]);
    for (int m = 0; m < (max_level + 1) * K; ++m) b.boundary_time.push_back(row[j++]);
    b.overflow_time = row[j++];
    s.batches.push_back(std::move(b));
  }
  return s;
}

}  // namespace

ExperimentReport run_stationary(const HeavyTrafficLadder& ladder, const StationarySettings& s,
                                const RunOptions& opt) {
  if (!(ladder.alpha > 0.0)) throw Error(ErrorCode::UnstableParams, "stationary experiment needs alpha > 0");
  if (s.cycles < 2 * s.batch_cycles) throw Error(ErrorCode::Config, "need at least two batches of cycles");
  using detail::num;
  const int K = ladder.mobility.K;
  const int max_level = max_level_of(s);
  const Stream root = detail::experiment_stream(opt.seed, detail::ExperimentTag::Stationary);
  const std::size_t N = ladder.n_values.size();
  StationaryOptions so;
  so.batch_cycles = s.batch_cycles;
  so.max_level = max_level;
  so.r_max = s.r_max;
  so.threads = opt.threads;

  ExperimentReport rep;
  rep.id = "stationary";
  rep.seed = opt.seed;
  Table batches("replications", batch_columns(K, s.r_max, max_level));
  for (std::size_t ni = 0; ni < N; ++ni) {
    append_batches(batches, ladder.n_values[ni], sample_stationary(ladder.at(ni), s.cycles, root.child(ni), so));
  }

  auto& moments = rep.add_table("moments", {"n", "r", "estimate", "se", "target", "rel_error"});
  auto& geometric = rep.add_table("geometric_dominance", {"n", "q", "p_hat", "se", "rho_q"});
  auto& balance = rep.add_table("balance", {"n", "level", "residual", "se", "insufficient"});
  auto& boundary = rep.add_table("boundary_decay", {"n", "node", "slope", "slope_se", "levels"});
  auto& homog = rep.add_table("stationary_homogenization", {"n", "snapshots", "mean_rho", "se"});

  std::vector<MeanSe> rho_means;
  for (std::size_t ni = 0; ni < N; ++ni) {
    const int n = ladder.n_values[ni];
    const double nd = n;
    const auto& params = ladder.at(ni);
    const bool final_n = ni + 1 == N;
    const auto sample = sample_from_table(batches, n, K, s.r_max, max_level);
    const auto cycles = sample.total_cycles();

    for (int r = 0; r <= s.r_max; ++r) {
      const auto e = stationary_moment(sample, r);
      const double scale = std::pow(nd, r);
      const double target = exponential_moment(ladder.alpha, r);
      const double est = e.value / scale;
      const double se = e.se / scale;
      moments.add({nd, static_cast<double>(r), est, se, target, est / target - 1.0});
      if (final_n && std::find(s.moment_orders.begin(), s.moment_orders.end(), r) != s.moment_orders.end()) {
        const double rel = std::abs(est / target - 1.0);
        rep.add_verdict(fmt::format("moment_r{}_n{}", r, n), est, se, s.moment_rel_tol, cycles,
                        rel <= s.moment_rel_tol);
      }
    }

    for (int q = 1; q <= s.geometric_q_max; ++q) {
      const auto e = tail_probability(sample, q);
      const double bound = geometric_tail(params.rho, q);
      geometric.add({nd, static_cast<double>(q), e.value, e.se, bound});
      if (final_n) {
        rep.add_verdict(fmt::format("geometric_q{}_n{}", q, n), e.value, e.se, bound, cycles,
                        e.value >= bound - 3.0 * e.se);
      }
    }

    for (int m = 1; m <= s.balance_max_level; ++m) {
      const auto b = check_balance_identity(sample, params, m);
      balance.add({nd, static_cast<double>(m), b.residual, b.se, b.insufficient ? 1.0 : 0.0});
      rep.add_verdict(fmt::format("balance_m{}_n{}", m, n), b.residual, b.se, 3.0 * b.se, cycles,
                      !b.insufficient && std::abs(b.residual) <= 3.0 * b.se);
    }

    // log P(|x| >= q, x_k = 0) against q, weighted by the delta-method variance.
    for (int k = 0; k < K; ++k) {
      std::vector<double> qs, ys, ws;
      for (int q = 1; q <= max_level; ++q) {
        const auto e = boundary_tail_probability(sample, q, k);
        if (!(e.value > 0.0) || !(e.se > 0.0)) continue;
        qs.push_back(q);
        ys.push_back(std::log(e.value));
        ws.push_back(e.value * e.value / (e.se * e.se));
      }
      if (qs.size() < 3) {
        boundary.add({nd, static_cast<double>(k + 1), 0.0, 0.0, static_cast<double>(qs.size())});
        rep.add_verdict(fmt::format("boundary_decay_node{}_n{}", k + 1, n), 0.0, 0.0, 0.0, cycles, false);
        continue;
      }
      const auto fit = weighted_linear_fit(qs, ys, ws);
      boundary.add({nd, static_cast<double>(k + 1), fit.slope, fit.slope_se, static_cast<double>(qs.size())});
      rep.add_verdict(fmt::format("boundary_decay_node{}_n{}", k + 1, n), fit.slope, fit.slope_se, 0.0, cycles,
                      fit.slope + 1.96 * fit.slope_se < 0.0);
    }

    const double spacing = s.snapshot_spacing * nd * nd;
    const auto snaps = stationary_snapshots(params, s.snapshots, spacing, spacing, root.child(1000 + ni));
    std::vector<double> rho;
    for (const auto& y : snaps) rho.push_back(rho_metric(y, ladder.mobility.pi));
    rho_means.push_back(mean_se(rho));
    homog.add({nd, static_cast<double>(snaps.size()), rho_means.back().mean, rho_means.back().se});
    if (ni > 0) {
      const auto& a = rho_means[ni - 1];
      const auto& b = rho_means[ni];
      const double band = 1.96 * std::sqrt(a.se * a.se + b.se * b.se);
      rep.add_verdict(fmt::format("stationary_rho_monotone_n{}", n), b.mean, b.se, a.mean + band, b.n,
                      b.mean <= a.mean + band);
    }
  }

  // Far from heavy traffic the empty-state mass sits just below the M/M/1 value.
  {
    const auto& base = ladder.at(0);
    std::vector<double> lk(base.lambda_k);
    for (double& v : lk) v *= s.light_traffic_factor;
    const auto light = NetworkParams::make(ladder.mobility, lk, base.mu_k);
    StationaryOptions lo = so;
    lo.max_level = 4;
    const auto sample = sample_stationary(light, s.cycles, root.child(2000), lo);
    const auto p0 = level_probability(sample, 0);
    auto& t = rep.add_table("light_traffic", {"rho", "p0", "se", "mm1_p0"});
    t.add({light.rho, p0.value, p0.se, 1.0 - light.rho});
    rep.add_verdict("light_traffic_p0", p0.value, p0.se, 1.0 - light.rho, sample.total_cycles(),
                    p0.value <= 1.0 - light.rho + 3.0 * p0.se);
  }

  rep.tables.push_back(std::move(batches));
  return rep;
}

}  // namespace mobnet
