#include "mobnet/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mobnet/error.hpp"

namespace mobnet {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;
constexpr long kUniformizationBudget = 50'000'000;

std::vector<int> reachable(const Matrix& Q, bool transpose) {
  const int K = static_cast<int>(Q.rows());
  std::vector<int> seen(K, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    for (int l = 0; l < K; ++l) {
      const double rate = transpose ? Q(l, k) : Q(k, l);
      if (l != k && rate > 0.0 && !seen[l]) {
        seen[l] = 1;
        stack.push_back(l);
      }
    }
  }
  return seen;
}

}  // namespace

MobilityProfile validate_generator(const Matrix& Q) {
  const int K = static_cast<int>(Q.rows());
  if (Q.cols() != K) throw Error(ErrorCode::DimensionMismatch, "Q must be square");
  if (K < 2) throw Error(ErrorCode::DimensionMismatch, "need K >= 2 nodes");
  if (!Q.allFinite()) throw Error(ErrorCode::InvalidArgument, "Q has non-finite entries");

  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (l != k && Q(k, l) < 0.0) {
        throw Error(ErrorCode::NegativeOffDiagonal,
                    "q[" + std::to_string(k) + "][" + std::to_string(l) + "] < 0");
      }
    }
    const double sum = Q.row(k).sum();
    if (std::abs(sum) > kRowSumTol) {
      throw Error(ErrorCode::RowSumViolation,
                  "row " + std::to_string(k) + " sums to " + std::to_string(sum));
    }
  }

  // Strongly connected iff every node is reachable from node 0 in the rate
  // digraph and in its transpose.
  const auto fwd = reachable(Q, false);
  const auto bwd = reachable(Q, true);
  for (int k = 0; k < K; ++k) {
    if (!fwd[k] || !bwd[k]) {
      throw Error(ErrorCode::Reducible, "node " + std::to_string(k) + " not strongly connected");
    }
  }

  // Augmented balance system: Q^T pi = 0 with the last equation replaced by
  // the normalization.
  Matrix A = Q.transpose();
  A.row(K - 1).setOnes();
  Vector rhs = Vector::Zero(K);
  rhs(K - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularSolve, "balance system is singular");
  Vector pi = lu.solve(rhs);
  if (!pi.allFinite() || (pi.transpose() * Q).cwiseAbs().maxCoeff() > kStationaryTol * (1.0 + Q.cwiseAbs().maxCoeff()) ||
      std::abs(pi.sum() - 1.0) > kStationaryTol || pi.minCoeff() <= 0.0) {
    throw Error(ErrorCode::SingularSolve, "stationary solve inaccurate");
  }

  MobilityProfile p;
  p.K = K;
  p.Q = Q;
  p.pi = pi;
  p.gamma = -Q.trace();
  p.pi_min = pi.minCoeff();
  p.pi_max = pi.maxCoeff();
  return p;
}

MobilityProfile validate_generator(std::span<const double> row_major, int K) {
  if (K < 0 || row_major.size() != static_cast<std::size_t>(K) * K) {
    throw Error(ErrorCode::DimensionMismatch, "expected K*K entries");
  }
  Matrix Q(K, K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) Q(k, l) = row_major[static_cast<std::size_t>(k) * K + l];
  return validate_generator(Q);
}

Matrix transition_matrix(const MobilityProfile& profile, double t, double tol) {
  const int K = profile.K;
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "t must be >= 0");
  if (!(tol >= 1e-15)) throw Error(ErrorCode::TolTooSmall, "tol below double resolution");
  if (t == 0.0) return Matrix::Identity(K, K);

  const double rate = profile.max_exit_rate();
  const Matrix P = Matrix::Identity(K, K) + profile.Q / rate;
  const double a = rate * t;
  const double log_a = std::log(a);

  Matrix power = Matrix::Identity(K, K);
  Matrix result = Matrix::Zero(K, K);
  for (long j = 0;; ++j) {
    if (j > kUniformizationBudget) {
      throw Error(ErrorCode::TolTooSmall, "uniformization exceeded term budget");
    }
    const double jd = static_cast<double>(j);
    const double w = std::exp(-a + jd * log_a - std::lgamma(jd + 1.0));
    result.noalias() += w * power;
    if (jd + 2.0 > a) {
      // Poisson right tail beyond j: sum_{i>j} w_i <= w_{j+1} / (1 - a/(j+2)).
      const double next = std::exp(-a + (jd + 1.0) * log_a - std::lgamma(jd + 2.0));
      const double tail = next / (1.0 - a / (jd + 2.0));
      if (tail <= tol) break;
    }
    power = power * P;
  }
  return result;
}

double delta_of_matrix(const MobilityProfile& profile, const Matrix& P) {
  double d = 0.0;
  for (int k = 0; k < profile.K; ++k)
    for (int l = 0; l < profile.K; ++l) d = std::max(d, std::abs(P(k, l) - profile.pi(l)));
  return std::min(d, 1.0);
}

double delta_of_t(const MobilityProfile& profile, double t, double tol) {
  return delta_of_matrix(profile, transition_matrix(profile, t, tol));
}

MixingProfile mixing_profile(const MobilityProfile& profile, std::span<const double> times,
                             double tol) {
  MixingProfile out;
  out.tolerance = tol;
  double prev = -1.0;
  for (double t : times) {
    if (t < prev) throw Error(ErrorCode::InvalidArgument, "mixing grid must be increasing");
    prev = t;
    out.times.push_back(t);
    out.delta_values.push_back(delta_of_t(profile, t, tol));
  }
  return out;
}

double mixing_time_tau(const MobilityProfile& profile, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::EpsOutOfRange, "eps must lie in (0,1)");
  constexpr double kTol = 1e-14;
  constexpr int kSteps = 2000;
  const double step = 1.0 / (10.0 * profile.gamma);

  const Matrix step_matrix = transition_matrix(profile, step, kTol);
  Matrix P = Matrix::Identity(profile.K, profile.K);
  int last_above = delta_of_matrix(profile, P) >= eps ? 0 : -1;
  Matrix at_last = P;
  for (int i = 1; i <= kSteps; ++i) {
    P = P * step_matrix;
    if (delta_of_matrix(profile, P) >= eps) {
      last_above = i;
      at_last = P;
    }
  }
  if (last_above == kSteps) {
    throw Error(ErrorCode::HorizonExceeded, "Delta(t) still >= eps at t = 200/gamma");
  }
  if (last_above < 0) return 0.0;

  // Bisection inside (t_i, t_i + step): lo keeps Delta >= eps.
  const double base = last_above * step;
  double lo = 0.0;
  double hi = step;
  for (int it = 0; it < 60 && hi - lo > 1e-15 * (base + step); ++it) {
    const double mid = 0.5 * (lo + hi);
    const Matrix Pm = at_last * transition_matrix(profile, mid, kTol);
    if (delta_of_matrix(profile, Pm) >= eps)
      lo = mid;
    else
      hi = mid;
  }
  return base + lo;
}

namespace {

template <class T>
double rho_impl(std::span<const T> y, const Vector& pi) {
  if (static_cast<Eigen::Index>(y.size()) != pi.size()) {
    throw Error(ErrorCode::DimensionMismatch, "state and pi lengths differ");
  }
  double total = 0.0;
  for (T v : y) total += static_cast<double>(v);
  if (total == 0.0) return 0.0;
  double d = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k)
    d += std::abs(static_cast<double>(y[k]) / total - pi(static_cast<Eigen::Index>(k)));
  return d;
}

}  // namespace

double rho_metric(std::span<const std::int64_t> y, const Vector& pi) { return rho_impl(y, pi); }
double rho_metric(std::span<const double> y, const Vector& pi) { return rho_impl(y, pi); }

}  // namespace mobnet
