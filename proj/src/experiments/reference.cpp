#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "mobnet/diffusion.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"
#include "mobnet/parallel.hpp"

namespace mobnet {

ExperimentReport run_reference_laws(const ReferenceSettings& s, const RunOptions& opt) {
  if (s.t_grid.empty() || s.x_grid.empty()) throw Error(ErrorCode::Config, "empty reference grid");
  if (s.paths < 2) throw Error(ErrorCode::Config, "need at least 2 paths");
  using detail::num;
  const Stream root = detail::experiment_stream(opt.seed, detail::ExperimentTag::Reference);
  const double horizon = *std::max_element(s.t_grid.begin(), s.t_grid.end());
  const double step = horizon / 1024.0;
  ExperimentReport rep;
  rep.id = "reference";
  rep.seed = opt.seed;
  auto& cdf = rep.add_table("rbm_marginal", {"alpha", "t", "x", "empirical", "closed_form", "se", "paths"});

  for (std::size_t a = 0; a < s.alphas.size(); ++a) {
    const auto params = RbmParams::make(s.lambda_limit, s.alphas[a]);
    auto values = replicate(s.paths, opt.threads, [&](std::size_t i) {
      const auto path = rbm_sample_path(params, horizon, step, root.child(a).child(i));
      std::vector<double> v;
      for (double t : s.t_grid) v.push_back(path.value(path.index_at(t)));
      return v;
    });
    for (std::size_t j = 0; j < s.t_grid.size(); ++j) {
      const double t = s.t_grid[j];
      for (double x : s.x_grid) {
        std::uint64_t below = 0;
        for (const auto& v : values) below += v[j] <= x;
        const double p = double(below) / double(s.paths);
        const double F = rbm_marginal_cdf(params, t, x);
        const double se = std::sqrt(F * (1.0 - F) / double(s.paths));
        cdf.add({s.alphas[a], t, x, p, F, se, double(s.paths)});
        rep.add_verdict(fmt::format("rbm_cdf_a{}_t{}_x{}", num(s.alphas[a]), num(t), num(x)), p, se,
                        3.0 * se + s.abs_slack, s.paths, std::abs(p - F) <= 3.0 * se + s.abs_slack);
      }
    }
  }

  auto& poisson = rep.add_table("poisson_tail", {"u", "v", "exact", "chernoff"});
  for (double u : s.poisson_u) {
    for (double ratio : s.poisson_ratio) {
      const double v = ratio * u;
      const double exact = poisson_tail_exact(u, v);
      const double bound = poisson_tail_bound(u, v);
      poisson.add({u, v, exact, bound});
      rep.add_verdict(fmt::format("poisson_u{}_v{}", num(u), num(v)), exact, 0.0, bound, 1,
                      exact <= bound * (1.0 + 1e-12));
    }
  }
  return rep;
}

}  // namespace mobnet
