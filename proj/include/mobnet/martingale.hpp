#pragma once

// Spectral functional of the mobility generator and the closed-system
// martingale built from it.
//
// With omega the matrix whose rows are left eigenvectors of Q, F(u) is the
// product over the nonzero eigenvalues of |(omega u)_row|^multiplicity. F
// decays exactly like exp(-gamma t) along the flow u -> exp(tQ) u, and
//   M_c(t) = exp(-c gamma t) I_c(x'(t)),
//   I_c(x) = int_S prod_k ((Lu)_k / pi_k)^{x_k} F(Pi^{-1} L u)^{c-1} du,
// is a martingale for the closed system x'.

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "mobnet/mobility.hpp"
#include "mobnet/path.hpp"

namespace mobnet {

using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

struct SpectralDecomposition {
  int K = 0;
  std::vector<Complex> eigenvalues;  // one per row of omega
  ComplexMatrix omega;               // rows: left eigenvectors, unit inf-norm, first nonzero entry > 0
  std::vector<int> factor_rows;      // one row per distinct nonzero eigenvalue
  std::vector<int> multiplicities;   // algebraic multiplicity of each factor row's eigenvalue
  int zero_row = -1;
  double gamma = 0.0;  // -sum of the nonzero eigenvalues with multiplicity
  double residual = 0.0;  // max |omega Q - J omega|
};

// Throws NotDiagonalizable when the eigenvector matrix is numerically singular.
SpectralDecomposition spectral_decomposition(const MobilityProfile& profile);

// Completion map L of the simplex S subset R^{K-1} into probability vectors.
struct SimplexGeometry {
  int K = 0;
  Vector pi;

  explicit SimplexGeometry(const MobilityProfile& profile) : K(profile.K), pi(profile.pi) {}

  Vector complete(std::span<const double> u) const;  // Lu
  static std::vector<double> drop_last(const Vector& v);
};

double functional_F(const SpectralDecomposition& spec, const Eigen::Ref<const Vector>& u);
double functional_F(const SpectralDecomposition& spec, std::span<const double> u);

// max over t in grid of |F(e^{tQ}u) e^{gamma t} / F(u) - 1|. Throws DegenerateU.
double check_homogeneity(const SpectralDecomposition& spec, const MobilityProfile& profile,
                         const Vector& u, std::span<const double> t_grid);

// Memoized evaluator of I_c(x). K must be 2 or 3 (DimensionUnsupported).
class ClosedSystemIntegral {
 public:
  ClosedSystemIntegral(const SpectralDecomposition& spec, const SimplexGeometry& geometry,
                       double c, double quad_tol = 1e-10);

  double operator()(std::span<const std::int64_t> x);
  double operator()(std::span<const double> x);

  double c() const { return c_; }
  std::size_t cache_size() const { return cache_.size(); }

  // The integrand at a point u of S.
  double integrand(std::span<const std::int64_t> x, std::span<const double> u) const;

 private:
  double compute(const std::vector<std::int64_t>& x) const;
  double integrate_k2(const std::vector<std::int64_t>& x) const;
  double integrate_k3(const std::vector<std::int64_t>& x) const;

  const SpectralDecomposition* spec_;
  SimplexGeometry geometry_;
  double c_;
  double tol_;
  // Each factor row of omega Pi^{-1} L u as the affine form base + sum_j u_j slope_j.
  std::vector<Complex> base_;
  std::vector<std::vector<Complex>> slope_;
  std::map<std::vector<std::int64_t>, double> cache_;
};

// M_c(t) = e^{-c gamma t} I_c(x'(t)).
double martingale_Mc(const SpectralDecomposition& spec, const SimplexGeometry& geometry, double c,
                     const StatePath& closed_path, double t, double quad_tol = 1e-10);

// Same with a caller-owned memo, for repeated evaluation on many paths.
double martingale_Mc(ClosedSystemIntegral& integral, double gamma, const StatePath& closed_path,
                     double t);

// H(u, v) = sum u_k log(u_k / v_k). Throws ZeroDenominator if some v_k = 0.
double relative_entropy(std::span<const double> u, std::span<const double> v);

struct EntropyBounds {
  double entropy = 0.0;
  double lower = 0.0;  // ||u - v||_1^2 / 2
  double upper = 0.0;  // ||u - v||_1 / min v
  bool lower_ok = false;
  bool upper_ok = false;
};

EntropyBounds check_entropy_bounds(std::span<const double> u, std::span<const double> v);

}  // namespace mobnet
