#pragma once

// Single-user mobility: the generator Q, its stationary law, transient
// transition probabilities, the worst-case mixing profile Delta(t), the
// mixing time tau(eps) and the homogenization distance rho(y).

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace mobnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A validated, irreducible mobility generator. Immutable after construction.
struct MobilityProfile {
  int K = 0;
  Matrix Q;
  Vector pi;
  double gamma = 0.0;  // trace of -Q
  double pi_min = 0.0;
  double pi_max = 0.0;

  // Uniformization rate: max_k |q_kk|.
  double max_exit_rate() const { return (-Q.diagonal()).maxCoeff(); }
  double exit_rate(int k) const { return -Q(k, k); }
};

// Checks the generator and solves pi Q = 0 with sum(pi) = 1.
// Throws RowSumViolation, NegativeOffDiagonal, Reducible, SingularSolve.
MobilityProfile validate_generator(const Matrix& Q);

// Row-major convenience overload (K*K entries).
MobilityProfile validate_generator(std::span<const double> row_major, int K);

// exp(tQ) by uniformization; each entry is within `tol` of the exact value.
Matrix transition_matrix(const MobilityProfile& profile, double t, double tol = 1e-13);

// Delta(t) = max_{k,l} |P_k(xi(t) = l) - pi_l|.
double delta_of_t(const MobilityProfile& profile, double t, double tol = 1e-13);

// Delta(t) from an already computed transition matrix.
double delta_of_matrix(const MobilityProfile& profile, const Matrix& P);

struct MixingProfile {
  std::vector<double> times;
  std::vector<double> delta_values;
  double tolerance = 0.0;
};

MixingProfile mixing_profile(const MobilityProfile& profile, std::span<const double> times,
                             double tol = 1e-13);

// tau(eps) = sup{t >= 0 : Delta(t) >= eps}, by a forward scan for the last
// up-crossing on [0, 200/gamma] with step 1/(10 gamma), then bisection.
double mixing_time_tau(const MobilityProfile& profile, double eps);

// rho(y) = || y/|y| - pi ||_1, and 0 for the empty state.
double rho_metric(std::span<const std::int64_t> y, const Vector& pi);
double rho_metric(std::span<const double> y, const Vector& pi);

}  // namespace mobnet
