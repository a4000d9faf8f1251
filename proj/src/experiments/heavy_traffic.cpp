#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"
#include "mobnet/diffusion.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"
#include "mobnet/parallel.hpp"
#include "mobnet/stats.hpp"

namespace mobnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> collapse_grid_of(const HeavyTrafficSettings& s) {
  if (!s.collapse_grid.empty()) return s.collapse_grid;
  std::vector<double> g;
  for (int i = 0; i <= 16; ++i) g.push_back(0.2 + 0.05 * i);
  return g;
}

double rbm_step_of(const HeavyTrafficSettings& s) { return s.rbm_step > 0 ? s.rbm_step : s.t_max / 4096.0; }

void validate(const HeavyTrafficSettings& s) {
  if (!(s.t_max > 0.0)) throw Error(ErrorCode::Config, "t_max must be > 0");
  if (s.reps < 2) throw Error(ErrorCode::Config, "need at least 2 replications");
  for (double t : s.t_grid)
    if (!(t > 0.0 && t <= s.t_max)) throw Error(ErrorCode::Config, "t_grid must lie in (0, t_max]");
  for (double t : collapse_grid_of(s))
    if (!(t >= 0.0 && t <= s.t_max)) throw Error(ErrorCode::Config, "collapse grid must lie in [0, t_max]");
}

std::vector<std::string> replication_columns(const HeavyTrafficSettings& s) {
  std::vector<std::string> c{"n", "rep", "events", "assertions", "violations"};
  for (std::size_t j = 0; j < s.t_grid.size(); ++j) c.push_back(fmt::format("norm_t{}", j));
  for (const char* name : {"collapse", "ratio_dev", "g", "dur", "height", "reached", "g_ref", "reached_ref",
                           "g_order_violation"})
    c.push_back(name);
  return c;
}

std::vector<double> finite_only(const std::vector<double>& x) {
  std::vector<double> out;
  for (double v : x)
    if (std::isfinite(v)) out.push_back(v);
  return out;
}

}  // namespace

ExperimentReport run_heavy_traffic(const HeavyTrafficLadder& ladder, const HeavyTrafficSettings& s,
                                   const RunOptions& opt) {
  validate(s);
  const auto grid = collapse_grid_of(s);
  const Stream root = detail::experiment_stream(opt.seed, detail::ExperimentTag::HeavyTraffic);
  const std::size_t N = ladder.n_values.size();
  const int K = ladder.mobility.K;

  auto rows = replicate(N * s.reps, opt.threads, [&](std::size_t i) {
    const std::size_t ni = i / s.reps;
    const std::size_t r = i % s.reps;
    const int n = ladder.n_values[ni];
    const auto& params = ladder.at(ni);
    const double horizon = static_cast<double>(n) * n * s.t_max;
    const auto b = simulate_coupled(params, State(static_cast<std::size_t>(K), 0), horizon,
                                    root.child(ni).child(r));
    const auto check = check_coupling(b, ladder.mobility.pi);

    std::vector<double> row{static_cast<double>(n), static_cast<double>(r), static_cast<double>(b.event_count),
                            static_cast<double>(check.assertions), static_cast<double>(check.violations)};
    const auto X = rescale(b.open_path, n);
    for (double t : s.t_grid) row.push_back(X.norm_at(t));
    row.push_back(collapse_gap(X, ladder.mobility.pi, grid));

    const auto Xm = X.materialize();
    double ratio_dev = kInf;
    if (const auto up = first_hit_above_index(Xm, s.eps_excursion)) {
      const auto st = Xm.state(*up);
      const double norm = Xm.norm(*up);
      ratio_dev = 0.0;
      for (int k = 0; k < K; ++k) ratio_dev += std::abs(st[k] / norm - ladder.mobility.pi(k));
    }
    row.push_back(ratio_dev);
    const auto ex = rbm_excursion_stats(Xm, s.eps_excursion);
    row.push_back(ex.g_eps);
    row.push_back(ex.t0_after_t_up);
    row.push_back(ex.max_height);
    row.push_back(ex.reached ? 1.0 : 0.0);

    const auto L = rescale(b.mm1_path, n).materialize();
    const auto exl = rbm_excursion_stats(L, s.eps_excursion);
    row.push_back(exl.g_eps);
    row.push_back(exl.reached ? 1.0 : 0.0);
    // |x| >= l pathwise, so x reaches the level first and every zero of x is a zero of l.
    row.push_back(ex.reached && exl.reached && ex.g_eps > exl.g_eps ? 1.0 : 0.0);
    return row;
  });
  Table table("replications", replication_columns(s));
  for (const auto& row : rows) table.add(row);

  const Stream ref_root = detail::experiment_stream(opt.seed, detail::ExperimentTag::HeavyTrafficReference);
  const auto rbm = RbmParams::make(ladder.lambda_limit, ladder.alpha);
  const double step = rbm_step_of(s);
  auto ref_rows = replicate(s.reps, opt.threads, [&](std::size_t r) {
    const auto path = rbm_sample_path(rbm, s.t_max, step, ref_root.child(r));
    const auto ex = rbm_excursion_stats(path, s.eps_excursion);
    return std::vector<double>{static_cast<double>(r), ex.g_eps, ex.t0_after_t_up, ex.max_height,
                               ex.reached ? 1.0 : 0.0};
  });
  Table reference("rbm_reference", {"rep", "g", "dur", "height", "reached"});
  for (const auto& row : ref_rows) reference.add(row);

  return reduce_heavy_traffic(ladder, s, table, reference, opt.seed);
}

ExperimentReport reduce_heavy_traffic(const HeavyTrafficLadder& ladder, const HeavyTrafficSettings& s,
                                      const Table& replications, const Table& reference,
                                      std::uint64_t seed) {
  validate(s);
  using detail::num;
  ExperimentReport rep;
  rep.id = "heavy-traffic";
  rep.seed = seed;
  const auto rbm = RbmParams::make(ladder.lambda_limit, ladder.alpha);
  const std::size_t N = ladder.n_values.size();

  const auto n_col = replications.column("n");
  auto select = [&](std::size_t ni, const std::string& col) {
    const auto all = replications.column(col);
    std::vector<double> out;
    for (std::size_t i = 0; i < all.size(); ++i)
      if (n_col[i] == static_cast<double>(ladder.n_values[ni])) out.push_back(all[i]);
    if (out.empty()) throw Error(ErrorCode::InsufficientCycles, "no replications for some n");
    return out;
  };

  // Coupling and pathwise order.
  auto& coupling = rep.add_table("coupling", {"n", "replications", "assertions", "violations", "g_order_violations"});
  double assertions = 0, violations = 0, g_order = 0, total = 0;
  for (std::size_t ni = 0; ni < N; ++ni) {
    const auto a = select(ni, "assertions");
    const auto v = select(ni, "violations");
    const auto g = select(ni, "g_order_violation");
    double sa = 0, sv = 0, sg = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sa += a[i], sv += v[i], sg += g[i];
    coupling.add({static_cast<double>(ladder.n_values[ni]), static_cast<double>(a.size()), sa, sv, sg});
    assertions += sa, violations += sv, g_order += sg, total += static_cast<double>(a.size());
  }
  rep.add_verdict("coupling_violations", violations, 0.0, 0.0, static_cast<std::uint64_t>(assertions),
                  violations == 0.0 && assertions > 0.0);
  rep.add_verdict("g_order_violations", g_order, 0.0, 0.0, static_cast<std::uint64_t>(total), g_order == 0.0);

  // Marginal KS against the reflected Brownian motion.
  auto& ks = rep.add_table("marginal_ks", {"n", "t", "ks", "se", "p_value", "replications"});
  std::vector<std::vector<double>> ks_values(s.t_grid.size());
  std::vector<std::size_t> counts(N);
  for (std::size_t ni = 0; ni < N; ++ni) {
    for (std::size_t j = 0; j < s.t_grid.size(); ++j) {
      const auto x = select(ni, fmt::format("norm_t{}", j));
      const double t = s.t_grid[j];
      const double d = ks_one_sample(x, [&](double v) { return rbm_marginal_cdf(rbm, t, v); });
      ks.add({static_cast<double>(ladder.n_values[ni]), t, d, detail::ks_se(double(x.size())),
              ks_pvalue_one_sample(d, x.size()), static_cast<double>(x.size())});
      ks_values[j].push_back(d);
      counts[ni] = x.size();
    }
  }
  for (std::size_t j = 0; j < s.t_grid.size(); ++j) {
    for (std::size_t ni = 1; ni < N; ++ni) {
      const double band = detail::ks_band(double(counts[ni]));
      rep.add_verdict(fmt::format("ks_monotone_t{}_n{}", num(s.t_grid[j]), ladder.n_values[ni]),
                      ks_values[j][ni], detail::ks_se(double(counts[ni])), ks_values[j][ni - 1] + band,
                      counts[ni], ks_values[j][ni] <= ks_values[j][ni - 1] + band);
    }
    if (s.t_grid[j] == s.ks_time) {
      rep.add_verdict(fmt::format("ks_final_t{}", num(s.ks_time)), ks_values[j].back(),
                      detail::ks_se(double(counts.back())), s.ks_threshold, counts.back(),
                      ks_values[j].back() <= s.ks_threshold);
    }
  }

  // Median-based diagnostics: collapse gap and ratio deviation at the up-crossing.
  auto median_block = [&](const std::string& table_name, const std::string& col, const std::string& metric,
                          std::optional<double> final_threshold) {
    auto& t = rep.add_table(table_name, {"n", "count", "median", "lo", "hi", "q90"});
    std::vector<Interval> meds;
    std::vector<std::size_t> ns;
    for (std::size_t ni = 0; ni < N; ++ni) {
      const auto x = finite_only(select(ni, col));
      if (x.empty()) {
        t.add({static_cast<double>(ladder.n_values[ni]), 0.0, kInf, kInf, kInf, kInf});
        meds.push_back({kInf, kInf, kInf});
        ns.push_back(0);
        continue;
      }
      const auto m = median_interval(x);
      t.add({static_cast<double>(ladder.n_values[ni]), static_cast<double>(x.size()), m.estimate, m.lo, m.hi,
             quantile(x, 0.9)});
      meds.push_back(m);
      ns.push_back(x.size());
    }
    for (std::size_t ni = 1; ni < N; ++ni) {
      const double se = (meds[ni].hi - meds[ni].lo) / (2.0 * 1.96);
      rep.add_verdict(fmt::format("{}_monotone_n{}", metric, ladder.n_values[ni]), meds[ni].estimate, se,
                      meds[ni - 1].hi, ns[ni], meds[ni].estimate <= meds[ni - 1].hi);
    }
    if (final_threshold) {
      const double se = (meds.back().hi - meds.back().lo) / (2.0 * 1.96);
      rep.add_verdict(fmt::format("{}_final", metric), meds.back().estimate, se, *final_threshold, ns.back(),
                      meds.back().estimate <= *final_threshold);
    }
  };
  median_block("collapse", "collapse", "collapse_median", s.collapse_threshold);
  median_block("ratio_at_t_up", "ratio_dev", "ratio_median", std::nullopt);

  // Excursion functionals against the reflected Brownian motion sample.
  auto& exc = rep.add_table("excursions", {"n", "metric", "ks", "p_value", "reached_fraction", "reference_reached_fraction"});
  const auto ref_reached = reference.column("reached");
  double ref_frac = 0;
  for (double v : ref_reached) ref_frac += v;
  ref_frac /= static_cast<double>(ref_reached.size());
  for (const char* metric : {"g", "dur", "height"}) {
    const auto ref = reference.column(metric);
    std::vector<double> d;
    for (std::size_t ni = 0; ni < N; ++ni) {
      const auto x = select(ni, metric);
      const auto reached = select(ni, "reached");
      double frac = 0;
      for (double v : reached) frac += v;
      frac /= static_cast<double>(reached.size());
      d.push_back(ks_two_sample(x, ref));
      exc.add_cells({num(double(ladder.n_values[ni])), metric, num(d.back()),
                     num(ks_pvalue_two_sample(d.back(), x.size(), ref.size())), num(frac), num(ref_frac)});
    }
    for (std::size_t ni = 1; ni < N; ++ni) {
      const double m = static_cast<double>(counts[ni]);
      const double r = static_cast<double>(ref.size());
      const double band = 1.36 * std::sqrt((m + r) / (m * r));
      rep.add_verdict(fmt::format("excursion_{}_ks_monotone_n{}", metric, ladder.n_values[ni]), d[ni],
                      0.2603 * std::sqrt((m + r) / (m * r)), d[ni - 1] + band, counts[ni], d[ni] <= d[ni - 1] + band);
    }
  }

  rep.tables.push_back(replications);
  rep.tables.push_back(reference);
  return rep;
}

}  // namespace mobnet
