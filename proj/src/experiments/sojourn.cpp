#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"
#include "mobnet/parallel.hpp"
#include "mobnet/stats.hpp"

namespace mobnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int uniform_user_node(const State& y, Stream& rng) {
  std::int64_t total = 0;
  for (auto v : y) total += v;
  if (total <= 0) throw Error(ErrorCode::TagUnavailable, "no user to tag");
  auto u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (u < y[k]) return static_cast<int>(k);
    u -= y[k];
  }
  return static_cast<int>(y.size()) - 1;
}

struct TagOutcome {
  double chi_scaled = kInf;
  double service_dev = 0.0;
  double start_size = 0.0;
};

TagOutcome run_tag(const NetworkParams& params, const State& y, int n, double b, double lambda,
                   double horizon_factor, const std::vector<double>& s_grid, Stream stream) {
  Stream pick = stream.child(Primitive::Sampling);
  const int node = uniform_user_node(y, pick);
  const double nd = n;
  std::int64_t size = 0;
  for (auto v : y) size += v;
  const double horizon = nd * horizon_factor * std::max(b, static_cast<double>(size) / nd) / lambda;
  const auto run = simulate_tagged(params, y, node, horizon, stream);
  TagOutcome out;
  out.start_size = static_cast<double>(size);
  if (run.record.sojourn) out.chi_scaled = *run.record.sojourn / nd;
  // Attained service on the n time scale against the fluid line lambda t / b.
  const double scale_b = static_cast<double>(size) / nd;
  for (double t : s_grid) {
    const double base_t = nd * t;
    if (run.record.sojourn && base_t >= *run.record.sojourn) break;
    out.service_dev = std::max(out.service_dev, std::abs(run.record.service_at(base_t) - lambda * t / scale_b));
  }
  return out;
}

}  // namespace

ExperimentReport run_sojourn(const HeavyTrafficLadder& ladder, const SojournSettings& s, const RunOptions& opt) {
  if (!(s.b > 0.0)) throw Error(ErrorCode::Config, "b must be > 0");
  if (s.tags < 2) throw Error(ErrorCode::Config, "need at least 2 tags");
  using detail::num;
  const Stream root = detail::experiment_stream(opt.seed, detail::ExperimentTag::Sojourn);
  const std::size_t N = ladder.n_values.size();
  const double lambda = ladder.lambda_limit;
  const bool stationary = s.stationary_mode && ladder.alpha > 0.0;

  ExperimentReport rep;
  rep.id = "sojourn";
  rep.seed = opt.seed;
  Table reps("replications", {"n", "mode", "tag", "start_size", "chi_scaled", "service_dev"});

  for (std::size_t ni = 0; ni < N; ++ni) {
    const int n = ladder.n_values[ni];
    const auto& params = ladder.at(ni);
    const State y = proportional_state(ladder.mobility.pi, std::llround(n * s.b));
    auto fixed = replicate(s.tags, opt.threads, [&](std::size_t i) {
      return run_tag(params, y, n, s.b, lambda, s.horizon_factor, s.s_grid, root.child(0).child(ni).child(i));
    });
    for (std::size_t i = 0; i < fixed.size(); ++i)
      reps.add({double(n), 0.0, double(i), fixed[i].start_size, fixed[i].chi_scaled, fixed[i].service_dev});

    if (!stationary) continue;
    // Stationary starts: snapshots of independent long chains; empty states are skipped.
    const std::size_t chains = std::max<std::size_t>(1, s.chains);
    const std::size_t per_chain = (s.tags + chains - 1) / chains;
    const double nd2 = double(n) * n;
    auto pools = replicate(chains, opt.threads, [&](std::size_t c) {
      std::vector<State> kept;
      for (std::uint64_t round = 0; kept.size() < per_chain; ++round) {
        if (round > 64) throw Error(ErrorCode::TagUnavailable, "stationary chain keeps returning empty states");
        const auto snaps = stationary_snapshots(params, per_chain + per_chain / 4 + 1, s.warmup * nd2,
                                                s.spacing * nd2, root.child(1).child(ni).child(c).child(round));
        for (const auto& st : snaps) {
          std::int64_t size = 0;
          for (auto v : st) size += v;
          if (size > 0 && kept.size() < per_chain) kept.push_back(st);
        }
      }
      return kept;
    });
    std::vector<State> starts;
    for (std::size_t i = 0; i < s.tags; ++i) starts.push_back(pools[i % chains][i / chains]);
    auto tagged = replicate(s.tags, opt.threads, [&](std::size_t i) {
      return run_tag(params, starts[i], n, s.b, lambda, s.horizon_factor, {}, root.child(2).child(ni).child(i));
    });
    for (std::size_t i = 0; i < tagged.size(); ++i)
      reps.add({double(n), 1.0, double(i), tagged[i].start_size, tagged[i].chi_scaled, 0.0});
  }

  // Direct sampler of E' E / lambda with E' ~ Exp(alpha), E ~ Exp(1).
  Table product("product_reference", {"rep", "value"});
  if (stationary) {
    Stream rng = root.child(3);
    for (std::size_t i = 0; i < s.tags; ++i) {
      const double e1 = rng.exponential(ladder.alpha);
      const double e2 = rng.exponential(1.0);
      product.add({double(i), e1 * e2 / lambda});
    }
  }

  // Reduction.
  const auto n_col = reps.column("n");
  const auto mode_col = reps.column("mode");
  const auto chi_col = reps.column("chi_scaled");
  const auto dev_col = reps.column("service_dev");
  auto select = [&](int n, double mode, const std::vector<double>& col) {
    std::vector<double> out;
    for (std::size_t i = 0; i < col.size(); ++i)
      if (n_col[i] == n && mode_col[i] == mode) out.push_back(col[i]);
    return out;
  };
  const double mean_b = s.b / lambda;
  auto& fixed_t = rep.add_table("fixed_start", {"n", "tags", "ks", "se", "p_value", "mean", "mean_se", "target_mean",
                                                "censored", "service_dev_mean", "service_dev_se"});
  std::vector<double> ks_fixed;
  std::vector<MeanSe> devs;
  for (std::size_t ni = 0; ni < N; ++ni) {
    const int n = ladder.n_values[ni];
    const auto chi = select(n, 0.0, chi_col);
    const auto dev = select(n, 0.0, dev_col);
    const double d = ks_one_sample(chi, [&](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x / mean_b); });
    std::vector<double> finite;
    for (double v : chi)
      if (std::isfinite(v)) finite.push_back(v);
    const auto m = mean_se(finite);
    devs.push_back(mean_se(dev));
    ks_fixed.push_back(d);
    fixed_t.add({double(n), double(chi.size()), d, detail::ks_se(double(chi.size())),
                 ks_pvalue_one_sample(d, chi.size()), m.mean, m.se, mean_b, double(chi.size() - finite.size()),
                 devs.back().mean, devs.back().se});
    if (ni > 0) {
      const auto& a = devs[ni - 1];
      const auto& b = devs[ni];
      const double band = 1.96 * std::sqrt(a.se * a.se + b.se * b.se);
      rep.add_verdict(fmt::format("service_dev_monotone_n{}", n), b.mean, b.se, a.mean + band, b.n,
                      b.mean <= a.mean + band);
    }
    if (ni + 1 == N) {
      rep.add_verdict(fmt::format("fixed_ks_n{}", n), d, detail::ks_se(double(chi.size())), s.ks_threshold,
                      chi.size(), d <= s.ks_threshold);
    }
  }

  if (stationary) {
    const auto ref = product.column("value");
    auto& st = rep.add_table("stationary_start", {"n", "tags", "ks", "p_value", "mean", "mean_se", "target_mean",
                                                  "mean_start_size_scaled"});
    for (std::size_t ni = 0; ni < N; ++ni) {
      const int n = ladder.n_values[ni];
      const auto chi = select(n, 1.0, chi_col);
      const auto size = select(n, 1.0, reps.column("start_size"));
      const double d = ks_two_sample(chi, ref);
      std::vector<double> finite;
      for (double v : chi)
        if (std::isfinite(v)) finite.push_back(v);
      const auto m = mean_se(finite);
      double mean_size = 0;
      for (double v : size) mean_size += v / n;
      mean_size /= static_cast<double>(size.size());
      const double target = 1.0 / (ladder.alpha * lambda);
      st.add({double(n), double(chi.size()), d, ks_pvalue_two_sample(d, chi.size(), ref.size()), m.mean, m.se,
              target, mean_size});
      if (ni + 1 == N) {
        const double nn = double(chi.size()), rr = double(ref.size());
        rep.add_verdict(fmt::format("stationary_ks_n{}", n), d, 0.2603 * std::sqrt((nn + rr) / (nn * rr)),
                        s.ks_threshold_stationary, chi.size(), d <= s.ks_threshold_stationary);
        rep.add_verdict(fmt::format("stationary_mean_n{}", n), m.mean, m.se, target, finite.size(),
                        std::abs(m.mean - target) <= 3.0 * m.se);
      }
    }
  }

  rep.tables.push_back(std::move(reps));
  if (stationary) rep.tables.push_back(std::move(product));
  return rep;
}

}  // namespace mobnet
