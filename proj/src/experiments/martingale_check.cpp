#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "common.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"
#include "mobnet/martingale.hpp"
#include "mobnet/parallel.hpp"
#include "mobnet/stats.hpp"

namespace mobnet {

namespace {

void compositions(int K, std::int64_t total, State& cur, int k, std::vector<State>& out) {
  if (k == K - 1) {
    cur[k] = total;
    out.push_back(cur);
    return;
  }
  for (std::int64_t v = 0; v <= total; ++v) {
    cur[k] = v;
    compositions(K, total - v, cur, k + 1, out);
  }
}

// Law of the closed system at time t: independent users moved by e^{tQ}.
std::map<State, double> closed_law(const MobilityProfile& p, const State& y, double t) {
  const Matrix P = transition_matrix(p, t, 1e-15);
  std::map<State, double> law{{State(static_cast<std::size_t>(p.K), 0), 1.0}};
  for (int k = 0; k < p.K; ++k) {
    for (std::int64_t u = 0; u < y[k]; ++u) {
      std::map<State, double> next;
      for (const auto& [x, w] : law) {
        for (int l = 0; l < p.K; ++l) {
          State z = x;
          ++z[l];
          next[z] += w * P(k, l);
        }
      }
      law = std::move(next);
    }
  }
  return law;
}

Matrix random_generator(int K, Stream& rng) {
  Matrix Q = Matrix::Zero(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i != j) Q(i, j) = 0.1 + 2.0 * rng.uniform();
    }
    Q(i, i) = -Q.row(i).sum();
  }
  return Q;
}

}  // namespace

ExperimentReport run_martingale_check(const MartingaleSettings& s, const RunOptions& opt) {
  if (s.generators.empty()) throw Error(ErrorCode::Config, "no generators");
  if (s.users < 1) throw Error(ErrorCode::Config, "users must be >= 1");
  using detail::num;
  const Stream root = detail::experiment_stream(opt.seed, detail::ExperimentTag::Martingale);
  ExperimentReport rep;
  rep.id = "martingale-check";
  rep.seed = opt.seed;
  const double t_max = *std::max_element(s.t_grid.begin(), s.t_grid.end());

  std::vector<std::string> cols{"generator", "rep"};
  for (double c : s.c_grid)
    for (double t : s.t_grid) cols.push_back(fmt::format("drift_c{}_t{}", num(c), num(t)));
  for (double c : s.c_grid) cols.push_back(fmt::format("sup_c{}", num(c)));
  Table table("replications", cols);

  auto& drift = rep.add_table("drift", {"generator", "c", "t", "mean_drift", "se", "n_reps", "exact_drift", "M0"});
  auto& bounded = rep.add_table("boundedness", {"generator", "c", "sup_Mc", "bound"});
  auto& integ = rep.add_table("integrability", {"generator", "c", "c_pow_K_integral"});

  for (std::size_t g = 0; g < s.generators.size(); ++g) {
    const auto& mob = s.generators[g];
    const int K = mob.K;
    if (K != 2 && K != 3) throw Error(ErrorCode::DimensionUnsupported, "martingale check needs K = 2 or 3");
    const auto spec = spectral_decomposition(mob);
    const SimplexGeometry geom(mob);
    const State y = proportional_state(mob.pi, s.users);
    const auto params = NetworkParams::make(mob, std::vector<double>(K, 0.0), std::vector<double>(K, 0.0));

    // I_c on every state the closed system can visit, evaluated once.
    std::vector<State> states;
    State cur(static_cast<std::size_t>(K), 0);
    compositions(K, s.users, cur, 0, states);
    std::vector<std::map<State, double>> tables;
    std::vector<double> empty_integral;
    for (double c : s.c_grid) {
      ClosedSystemIntegral I(spec, geom, c, s.quad_tol);
      std::map<State, double> m;
      for (const auto& x : states) m[x] = I(std::span<const std::int64_t>(x));
      tables.push_back(std::move(m));
      empty_integral.push_back(I(std::span<const std::int64_t>(State(static_cast<std::size_t>(K), 0))));
    }

    auto rows = replicate(s.reps, opt.threads, [&](std::size_t r) {
      const auto b = simulate_coupled(params, y, t_max, root.child(g).child(r));
      std::vector<double> row{static_cast<double>(g), static_cast<double>(r)};
      std::vector<double> sups;
      for (std::size_t ci = 0; ci < s.c_grid.size(); ++ci) {
        const double c = s.c_grid[ci];
        const double m0 = tables[ci].at(y);
        for (double t : s.t_grid) {
          const auto x = b.closed_path.at(t);
          State xs(x.size());
          for (std::size_t k = 0; k < x.size(); ++k) xs[k] = std::llround(x[k]);
          row.push_back(std::exp(-c * spec.gamma * t) * tables[ci].at(xs) - m0);
        }
        // Sup over event times of M_c, which only decays between jumps.
        double sup = 0.0;
        for (std::size_t i = 0; i < b.closed_path.size(); ++i) {
          const auto x = b.closed_path.state(i);
          State xs(x.size());
          for (std::size_t k = 0; k < x.size(); ++k) xs[k] = std::llround(x[k]);
          sup = std::max(sup, std::exp(-c * spec.gamma * b.closed_path.time(i)) * tables[ci].at(xs));
        }
        sups.push_back(sup);
      }
      row.insert(row.end(), sups.begin(), sups.end());
      return row;
    });
    for (const auto& row : rows) table.add(row);

    for (std::size_t ci = 0; ci < s.c_grid.size(); ++ci) {
      const double c = s.c_grid[ci];
      const double m0 = tables[ci].at(y);
      for (double t : s.t_grid) {
        const auto d = table.column(fmt::format("drift_c{}_t{}", num(c), num(t)));
        std::vector<double> mine;
        for (std::size_t i = g * s.reps; i < (g + 1) * s.reps; ++i) mine.push_back(d[i]);
        const auto ms = mean_se(mine);
        double expected = 0.0;
        for (const auto& [x, w] : closed_law(mob, y, t)) expected += w * tables[ci].at(x);
        const double exact = std::exp(-c * spec.gamma * t) * expected - m0;
        drift.add({double(g), c, t, ms.mean, ms.se, double(ms.n), exact, m0});
        rep.add_verdict(fmt::format("drift_g{}_c{}_t{}", g, num(c), num(t)), ms.mean, ms.se, 3.0 * ms.se, ms.n,
                        std::abs(ms.mean) <= 3.0 * ms.se);
      }
      const auto sup_col = table.column(fmt::format("sup_c{}", num(c)));
      double sup = 0.0;
      for (std::size_t i = g * s.reps; i < (g + 1) * s.reps; ++i) sup = std::max(sup, sup_col[i]);
      const double bound = std::pow(mob.pi_min, -static_cast<double>(s.users)) * empty_integral[ci];
      bounded.add({double(g), c, sup, bound});
      rep.add_verdict(fmt::format("bounded_g{}_c{}", g, num(c)), sup, 0.0, bound, s.reps,
                      sup <= bound * (1.0 + 1e-8));
    }

    double worst = 0.0;
    bool finite = true;
    for (double c : s.integrability_c_grid) {
      double v = std::numeric_limits<double>::infinity();
      try {
        ClosedSystemIntegral I(spec, geom, c, s.quad_tol);
        v = std::pow(c, K) * I(std::span<const std::int64_t>(State(static_cast<std::size_t>(K), 0)));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::QuadratureFailure) throw;
      }
      integ.add({double(g), c, v});
      finite = finite && std::isfinite(v);
      worst = std::max(worst, v);
    }
    rep.add_verdict(fmt::format("integrability_g{}", g), worst, 0.0, std::numeric_limits<double>::infinity(),
                    s.integrability_c_grid.size(), finite);
  }

  // F(e^{tQ}u) e^{gamma t} = F(u) on random generators.
  {
    Stream rng = root.child(100000);
    auto& h = rep.add_table("homogeneity", {"draw", "K", "gamma", "max_rel_error"});
    double worst = 0.0;
    std::size_t used = 0;
    for (std::size_t d = 0; d < s.homogeneity_draws; ++d) {
      const int K = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, s.homogeneity_max_K - 1))));
      const auto p = validate_generator(random_generator(K, rng));
      Vector u(K);
      for (int k = 0; k < K; ++k) u(k) = rng.uniform();
      u /= u.sum();
      std::vector<double> grid;
      for (int i = 0; i <= 50; ++i) grid.push_back(5.0 / p.gamma * i / 50.0);
      const auto spec = spectral_decomposition(p);
      const double e = check_homogeneity(spec, p, u, grid);
      h.add({double(d), double(K), p.gamma, e});
      worst = std::max(worst, e);
      ++used;
    }
    rep.add_verdict("homogeneity_max_error", worst, 0.0, 1e-8, used, worst <= 1e-8);
  }

  {
    Stream rng = root.child(200000);
    std::uint64_t bad = 0;
    for (std::size_t d = 0; d < s.entropy_draws; ++d) {
      const int K = 2 + static_cast<int>(rng.below(5));
      std::vector<double> u(K), v(K);
      double su = 0, sv = 0;
      for (int k = 0; k < K; ++k) {
        u[k] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
        v[k] = 0.01 + rng.uniform();
        su += u[k];
        sv += v[k];
      }
      if (su == 0.0) u[0] = su = 1.0;
      for (int k = 0; k < K; ++k) u[k] /= su, v[k] /= sv;
      const auto b = check_entropy_bounds(u, v);
      if (!b.lower_ok || !b.upper_ok || b.entropy < 0.0) ++bad;
    }
    rep.add_verdict("entropy_bound_violations", double(bad), 0.0, 0.0, s.entropy_draws, bad == 0);
  }

  rep.tables.push_back(std::move(table));
  return rep;
}

}  // namespace mobnet
