#pragma once

// Reference laws for the heavy-traffic limit: the one-sided reflected
// Brownian motion with drift -lambda*alpha and variance 2*lambda, its
// exponential stationary law, and the geometric / Poisson tail references
// used by the coupling and homogenization checks.

#include <cstdint>

#include "mobnet/path.hpp"
#include "mobnet/rng.hpp"

namespace mobnet {

struct RbmParams {
  double lambda_limit = 1.0;
  double alpha = 0.0;

  double drift() const { return -lambda_limit * alpha; }
  double variance() const { return 2.0 * lambda_limit; }

  // Throws InvalidParams unless lambda > 0 and alpha >= 0.
  static RbmParams make(double lambda_limit, double alpha);
};

double normal_cdf(double x);

// P(RBM(t) <= x) for the reflected process started at 0. Negative x gives 0.
double rbm_marginal_cdf(const RbmParams& params, double t, double x);

// 1 - exp(-alpha x). Throws ZeroAlpha when alpha == 0.
double rbm_stationary_cdf(const RbmParams& params, double x);

// r! / alpha^r.
double exponential_moment(double alpha, int r);

// Reflected path on a uniform grid. Each step draws the Gaussian increment
// and the minimum of the Brownian bridge across the step, so the running
// infimum, and hence the grid marginals, are exact. A step during which the
// reflected path touches 0 records a zero at the step midpoint.
// Throws StepTooCoarse when step > horizon / 2^10.
StatePath rbm_sample_path(const RbmParams& params, double horizon, double step, Stream stream);

struct RbmExcursionStats {
  double g_eps = 0.0;
  double t0_after_t_up = 0.0;  // duration of the stopped excursion, inf if censored
  double max_height = 0.0;
  bool reached = false;
  bool complete = false;
};

// First excursion of the path above eps: its left endpoint, its length after
// the up-crossing, and its height.
RbmExcursionStats rbm_excursion_stats(const StatePath& path, double eps);

// rho^q. Throws RhoOutOfRange unless 0 < rho < 1.
double geometric_tail(double rho, std::int64_t q);

// exp(-u h(v/u)) with h(x) = x log x + 1 - x. Throws VLessThanU.
double poisson_tail_bound(double u, double v);

// Exact P(Poisson(u) >= v).
double poisson_tail_exact(double u, double v);

}  // namespace mobnet
