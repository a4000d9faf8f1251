#include "mobnet/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mobnet/error.hpp"

namespace mobnet {

RbmParams RbmParams::make(double lambda_limit, double alpha) {
  if (!(lambda_limit > 0.0) || !(alpha >= 0.0) || !std::isfinite(lambda_limit) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidParams, "RBM needs lambda > 0 and alpha >= 0");
  }
  return RbmParams{lambda_limit, alpha};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double rbm_marginal_cdf(const RbmParams& params, double t, double x) {
  if (std::isnan(t) || std::isnan(x)) throw Error(ErrorCode::NanInput, "NaN argument");
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be > 0");
  if (x < 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double m = params.drift();
  const double s2 = params.variance();
  const double sd = std::sqrt(s2 * t);
  const double first = normal_cdf((x - m * t) / sd);
  // exp(2mx/s2) * Phi(.) evaluated in log space to avoid overflow for m > 0.
  const double tail = normal_cdf((-x - m * t) / sd);
  double second = 0.0;
  if (tail > 0.0) second = std::exp(2.0 * m * x / s2 + std::log(tail));
  return std::clamp(first - second, 0.0, 1.0);
}

double rbm_stationary_cdf(const RbmParams& params, double x) {
  if (std::isnan(x)) throw Error(ErrorCode::NanInput, "NaN argument");
  if (params.alpha == 0.0) throw Error(ErrorCode::ZeroAlpha, "no stationary law for alpha = 0");
  if (x <= 0.0) return 0.0;
  return -std::expm1(-params.alpha * x);
}

double exponential_moment(double alpha, int r) {
  if (alpha <= 0.0) throw Error(ErrorCode::ZeroAlpha, "alpha must be > 0");
  return std::tgamma(r + 1.0) / std::pow(alpha, r);
}

StatePath rbm_sample_path(const RbmParams& params, double horizon, double step, Stream stream) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::ZeroHorizon, "horizon must be > 0");
  if (!(step > 0.0) || step > horizon / 1024.0) {
    throw Error(ErrorCode::StepTooCoarse, "step must be <= horizon / 2^10");
  }
  const double m = params.drift();
  const double s2 = params.variance();
  const double sd_step = std::sqrt(s2 * step);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));

  StatePath path(1, horizon);
  path.reserve(steps + steps / 8 + 2);
  path.push_scalar(0.0, 0.0);
  double w = 0.0;    // free Brownian motion
  double inf = 0.0;  // running infimum of w, capped at 0
  for (std::size_t i = 0; i < steps; ++i) {
    const double t0 = static_cast<double>(i) * step;
    const double t1 = std::min(horizon, t0 + step);
    const double h = t1 - t0;
    const double sd = h == step ? sd_step : std::sqrt(s2 * h);
    const double next = w + m * h + sd * stream.normal();
    // P(bridge min <= inf) = exp(-2 (w - inf)(next - inf) / (s2 h)).
    const double exponent = 2.0 * (w - inf) * (next - inf) / (s2 * h);
    bool touched = false;
    if (next <= inf) {
      touched = true;
      const double u = stream.uniform();
      const double diff = next - w;
      inf = std::min(inf, 0.5 * (w + next - std::sqrt(diff * diff - 2.0 * s2 * h * std::log(u))));
    } else if (exponent < 40.0) {
      const double u = stream.uniform();
      const double diff = next - w;
      const double bridge_min = 0.5 * (w + next - std::sqrt(diff * diff - 2.0 * s2 * h * std::log(u)));
      if (bridge_min < inf) {
        touched = true;
        inf = bridge_min;
      }
    }
    if (touched) path.push_scalar(t0 + 0.5 * h, 0.0);
    w = next;
    path.push_scalar(t1, w - inf);
  }
  return path;
}

RbmExcursionStats rbm_excursion_stats(const StatePath& path, double eps) {
  RbmExcursionStats out;
  const auto records = excursion_inventory(path, eps);
  if (records.empty()) {
    out.t0_after_t_up = std::numeric_limits<double>::infinity();
    out.g_eps = std::numeric_limits<double>::infinity();
    return out;
  }
  const auto& first = records.front();
  out.reached = true;
  out.complete = first.complete;
  out.g_eps = first.g_eps;
  out.max_height = first.max_height;
  out.t0_after_t_up = first.complete ? first.t0_after - first.t_up
                                     : std::numeric_limits<double>::infinity();
  return out;
}

double geometric_tail(double rho, std::int64_t q) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::RhoOutOfRange, "rho must lie in (0,1)");
  if (q < 0) throw Error(ErrorCode::InvalidArgument, "q must be >= 0");
  return std::pow(rho, static_cast<double>(q));
}

double poisson_tail_bound(double u, double v) {
  if (!(u > 0.0)) throw Error(ErrorCode::InvalidArgument, "u must be > 0");
  if (v < u) throw Error(ErrorCode::VLessThanU, "bound needs v >= u");
  const double x = v / u;
  const double h = x * std::log(x) + 1.0 - x;
  return std::exp(-u * h);
}

double poisson_tail_exact(double u, double v) {
  if (!(u >= 0.0)) throw Error(ErrorCode::InvalidArgument, "u must be >= 0");
  if (v <= 0.0) return 1.0;
  if (u == 0.0) return 0.0;
  const auto kmin = static_cast<std::int64_t>(std::ceil(v));
  // Sum whichever side is shorter in log space.
  if (static_cast<double>(kmin) > u) {
    double total = 0.0;
    for (std::int64_t k = kmin;; ++k) {
      const double lp = -u + static_cast<double>(k) * std::log(u) - std::lgamma(static_cast<double>(k) + 1.0);
      const double p = std::exp(lp);
      total += p;
      if (static_cast<double>(k) > u && p < 1e-18 * total) break;
      if (p == 0.0 && static_cast<double>(k) > u) break;
    }
    return std::min(1.0, total);
  }
  double below = 0.0;
  for (std::int64_t k = 0; k < kmin; ++k) {
    below += std::exp(-u + static_cast<double>(k) * std::log(u) - std::lgamma(static_cast<double>(k) + 1.0));
  }
  return std::clamp(1.0 - below, 0.0, 1.0);
}

}  // namespace mobnet
