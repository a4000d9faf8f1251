#include "mobnet/martingale.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mobnet/error.hpp"
#include "mobnet/quadrature.hpp"

namespace mobnet {

namespace {

constexpr double kConditionLimit = 1e10;
constexpr double kClusterTol = 1e-6;

}  // namespace

SpectralDecomposition spectral_decomposition(const MobilityProfile& profile) {
  const int K = profile.K;
  Eigen::EigenSolver<Matrix> es(profile.Q);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NotDiagonalizable, "eigen solver failed");
  const ComplexMatrix V = es.eigenvectors();
  Eigen::JacobiSVD<ComplexMatrix> svd(V);
  const auto& sv = svd.singularValues();
  if (!(sv(K - 1) > 0.0) || sv(0) / sv(K - 1) > kConditionLimit) {
    throw Error(ErrorCode::NotDiagonalizable, "eigenvector matrix is numerically singular");
  }

  SpectralDecomposition s;
  s.K = K;
  s.omega = V.inverse();
  for (int i = 0; i < K; ++i) s.eigenvalues.push_back(es.eigenvalues()(i));

  // Pin the per-row scale: unit inf-norm, first non-negligible entry real positive.
  for (int i = 0; i < K; ++i) {
    auto row = s.omega.row(i);
    const double m = row.cwiseAbs().maxCoeff();
    row /= m;
    for (int j = 0; j < K; ++j) {
      if (std::abs(row(j)) > 1e-12) {
        row *= std::conj(row(j)) / std::abs(row(j));
        break;
      }
    }
  }

  const double scale = std::max(1.0, profile.gamma);
  double smallest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < K; ++i) {
    if (std::abs(s.eigenvalues[i]) < smallest) {
      smallest = std::abs(s.eigenvalues[i]);
      s.zero_row = i;
    }
  }
  if (smallest > 1e-9 * scale) throw Error(ErrorCode::NotDiagonalizable, "no zero eigenvalue found");
  s.eigenvalues[s.zero_row] = 0.0;

  // Cluster repeated eigenvalues. A defective eigenvalue shows up as a cluster
  // split by ~sqrt(machine eps) whose eigenvectors are nearly parallel.
  std::vector<int> group(K, -1);
  for (int i = 0; i < K; ++i) {
    if (i == s.zero_row || group[i] >= 0) continue;
    group[i] = i;
    std::vector<int> members{i};
    for (int j = i + 1; j < K; ++j) {
      if (j == s.zero_row || group[j] >= 0) continue;
      if (std::abs(s.eigenvalues[j] - s.eigenvalues[i]) <= kClusterTol * scale) {
        group[j] = i;
        members.push_back(j);
      }
    }
    if (members.size() > 1) {
      ComplexMatrix block(K, static_cast<Eigen::Index>(members.size()));
      for (std::size_t c = 0; c < members.size(); ++c) block.col(c) = V.col(members[c]).normalized();
      Eigen::JacobiSVD<ComplexMatrix> bsvd(block);
      const auto& bs = bsvd.singularValues();
      if (bs(bs.size() - 1) < 1e-4 * bs(0)) {
        throw Error(ErrorCode::NotDiagonalizable, "repeated eigenvalue without a full eigenspace");
      }
      // Collapse the cluster onto its mean.
      Complex mean = 0.0;
      for (int m : members) mean += s.eigenvalues[m];
      mean /= static_cast<double>(members.size());
      for (int m : members) s.eigenvalues[m] = mean;
    }
    s.factor_rows.push_back(i);
    s.multiplicities.push_back(static_cast<int>(members.size()));
  }
  for (int i = 0; i < K; ++i)
    if (i != s.zero_row) s.gamma -= s.eigenvalues[i].real();

  const ComplexMatrix Qc = profile.Q.cast<Complex>();
  ComplexMatrix J = ComplexMatrix::Zero(K, K);
  for (int i = 0; i < K; ++i) J(i, i) = s.eigenvalues[i];
  s.residual = (s.omega * Qc - J * s.omega).cwiseAbs().maxCoeff();
  return s;
}

Vector SimplexGeometry::complete(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != K - 1) throw Error(ErrorCode::DimensionMismatch, "u must have K-1 entries");
  Vector v(K);
  double sum = 0.0;
  for (int j = 0; j < K - 1; ++j) {
    v(j) = u[j];
    sum += u[j];
  }
  v(K - 1) = 1.0 - sum;
  return v;
}

std::vector<double> SimplexGeometry::drop_last(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size() - 1);
}

double functional_F(const SpectralDecomposition& spec, const Eigen::Ref<const Vector>& u) {
  if (u.size() != spec.K) throw Error(ErrorCode::DimensionMismatch, "u must have K entries");
  const Eigen::VectorXcd w = spec.omega * u.cast<Complex>();
  double f = 1.0;
  for (std::size_t i = 0; i < spec.factor_rows.size(); ++i) {
    f *= std::pow(std::abs(w(spec.factor_rows[i])), spec.multiplicities[i]);
  }
  return f;
}

double functional_F(const SpectralDecomposition& spec, std::span<const double> u) {
  return functional_F(spec, Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(u.size())));
}

double check_homogeneity(const SpectralDecomposition& spec, const MobilityProfile& profile,
                         const Vector& u, std::span<const double> t_grid) {
  const double f0 = functional_F(spec, u);
  if (!(f0 > 0.0)) throw Error(ErrorCode::DegenerateU, "F(u) = 0");
  double worst = 0.0;
  for (double t : t_grid) {
    const Matrix P = transition_matrix(profile, t, 1e-15);
    const Vector pu = P * u;
    const double ratio = functional_F(spec, pu) * std::exp(profile.gamma * t) / f0;
    worst = std::max(worst, std::abs(ratio - 1.0));
  }
  return worst;
}

// ----------------------------------------------------------- simplex integral

ClosedSystemIntegral::ClosedSystemIntegral(const SpectralDecomposition& spec,
                                           const SimplexGeometry& geometry, double c,
                                           double quad_tol)
    : spec_(&spec), geometry_(geometry), c_(c), tol_(quad_tol) {
  if (geometry.K != 2 && geometry.K != 3) {
    throw Error(ErrorCode::DimensionUnsupported, "simplex integral implemented for K = 2, 3");
  }
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "c must be > 0");
  if (!(quad_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "quad_tol must be > 0");
  const int K = geometry.K;
  const Vector& pi = geometry.pi;
  for (int row : spec.factor_rows) {
    const Complex last = spec.omega(row, K - 1) / pi(K - 1);
    base_.push_back(last);
    std::vector<Complex> slope;
    for (int j = 0; j < K - 1; ++j) slope.push_back(spec.omega(row, j) / pi(j) - last);
    slope_.push_back(std::move(slope));
  }
}

double ClosedSystemIntegral::integrand(std::span<const std::int64_t> x,
                                       std::span<const double> u) const {
  const int K = geometry_.K;
  const Vector& pi = geometry_.pi;
  double sum = 0.0;
  double log_value = 0.0;
  for (int k = 0; k < K; ++k) {
    const double lk = k < K - 1 ? u[k] : 1.0 - sum;
    if (k < K - 1) sum += u[k];
    if (x[k] == 0) continue;
    if (lk <= 0.0) return 0.0;
    log_value += static_cast<double>(x[k]) * std::log(lk / pi(k));
  }
  double value = std::exp(log_value);
  if (c_ != 1.0) {
    for (std::size_t i = 0; i < base_.size(); ++i) {
      Complex form = base_[i];
      for (int j = 0; j < K - 1; ++j) form += slope_[i][j] * u[j];
      value *= std::pow(std::abs(form), (c_ - 1.0) * spec_->multiplicities[i]);
    }
  }
  return value;
}

double ClosedSystemIntegral::operator()(std::span<const std::int64_t> x) {
  if (static_cast<int>(x.size()) != geometry_.K) throw Error(ErrorCode::DimensionMismatch, "state length");
  std::vector<std::int64_t> key(x.begin(), x.end());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const double v = compute(key);
  cache_.emplace(std::move(key), v);
  return v;
}

double ClosedSystemIntegral::operator()(std::span<const double> x) {
  std::vector<std::int64_t> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = std::llround(x[k]);
  return (*this)(std::span<const std::int64_t>(y));
}

double ClosedSystemIntegral::compute(const std::vector<std::int64_t>& x) const {
  return geometry_.K == 2 ? integrate_k2(x) : integrate_k3(x);
}

namespace {

// Zero (or modulus minimum) of t -> |A + B t| for complex A, B.
bool affine_root(Complex A, Complex B, double& root, double& residual) {
  const double b2 = std::norm(B);
  if (b2 < 1e-28) return false;
  root = -(std::conj(B) * A).real() / b2;
  residual = std::abs(A + B * root);
  return true;
}

void require_converged(const QuadResult& r) {
  if (!r.converged || !std::isfinite(r.value)) {
    throw Error(ErrorCode::QuadratureFailure, "simplex quadrature did not reach its tolerance");
  }
}

}  // namespace

double ClosedSystemIntegral::integrate_k2(const std::vector<std::int64_t>& x) const {
  std::vector<Breakpoint> pts;
  std::vector<double> zero_of(base_.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < base_.size(); ++i) {
    double root = 0.0, res = 0.0;
    if (!affine_root(base_[i], slope_[i][0], root, res)) continue;
    const bool vanishes = res <= 1e-12 * (std::abs(base_[i]) + std::abs(slope_[i][0]));
    const double beta = (c_ - 1.0) * spec_->multiplicities[i];
    pts.push_back({root, vanishes ? beta : 0.0});
    if (vanishes) zero_of[i] = root;
  }
  Integrand f = [&](double u) { return integrand(x, std::span<const double>(&u, 1)); };
  // Next to a root the vanishing form equals slope * d exactly; computing it as
  // base + slope * (p + d) would cancel away every digit once d << p.
  OffsetIntegrand near = [&](double p, double d) {
    const double u = p + d;
    const double l1 = (1.0 - p) - d;
    double log_value = 0.0;
    if (x[0] > 0) {
      if (u <= 0.0) return 0.0;
      log_value += static_cast<double>(x[0]) * std::log(u / geometry_.pi(0));
    }
    if (x[1] > 0) {
      if (l1 <= 0.0) return 0.0;
      log_value += static_cast<double>(x[1]) * std::log(l1 / geometry_.pi(1));
    }
    double value = std::exp(log_value);
    if (c_ != 1.0) {
      for (std::size_t i = 0; i < base_.size(); ++i) {
        const bool at_root = zero_of[i] == p;
        const Complex form = at_root ? slope_[i][0] * d : base_[i] + slope_[i][0] * u;
        value *= std::pow(std::abs(form), (c_ - 1.0) * spec_->multiplicities[i]);
      }
    }
    return value;
  };
  const auto r = integrate_with_breakpoints(f, 0.0, 1.0, pts, tol_, 0.0, 20000, &near);
  require_converged(r);
  return r.value;
}

double ClosedSystemIntegral::integrate_k3(const std::vector<std::int64_t>& x) const {
  const std::size_t rows = base_.size();
  const double inner_tol = tol_ * 0.1;

  auto form_at = [&](std::size_t i, double u1, double u2) {
    return base_[i] + slope_[i][0] * u1 + slope_[i][1] * u2;
  };
  auto scale_of = [&](std::size_t i) {
    return std::abs(base_[i]) + std::abs(slope_[i][0]) + std::abs(slope_[i][1]);
  };

  // Outer breakpoints in u1.
  std::vector<Breakpoint> outer;
  std::vector<std::pair<double, double>> points;  // candidate (u1, u2) where forms may vanish
  for (std::size_t i = 0; i < rows; ++i) {
    const Complex A = base_[i], B1 = slope_[i][0], B2 = slope_[i][1];
    if (std::abs(B2) < 1e-14 * scale_of(i)) {
      double root = 0.0, res = 0.0;
      if (affine_root(A, B1, root, res)) {
        const bool vanishes = res <= 1e-12 * scale_of(i);
        outer.push_back({root, vanishes ? (c_ - 1.0) * spec_->multiplicities[i] : 0.0});
      }
      continue;
    }
    const bool real_row = std::abs(A.imag()) + std::abs(B1.imag()) + std::abs(B2.imag()) <= 1e-12 * scale_of(i);
    if (!real_row) {
      // Both real and imaginary parts vanish at one point.
      Eigen::Matrix2d M;
      M << B1.real(), B2.real(), B1.imag(), B2.imag();
      if (std::abs(M.determinant()) > 1e-14) {
        const Eigen::Vector2d p = M.inverse() * Eigen::Vector2d(-A.real(), -A.imag());
        points.emplace_back(p(0), p(1));
      }
      continue;
    }
    // Real zero line A + B1 u1 + B2 u2 = 0: meet it with the edges u2 = 0 and u1 + u2 = 1.
    // The inner integral has a cusp of order edge_beta where the line leaves the triangle.
    const double a = A.real(), b1 = B1.real(), b2 = B2.real();
    const double edge_beta = (c_ - 1.0) * spec_->multiplicities[i] + 1.0;
    if (std::abs(b1) > 1e-14) outer.push_back({-a / b1, edge_beta});
    if (std::abs(b1 - b2) > 1e-14) outer.push_back({-(a + b2) / (b1 - b2), edge_beta});
    for (std::size_t j = i + 1; j < rows; ++j) {
      const Complex C = base_[j], D1 = slope_[j][0], D2 = slope_[j][1];
      Eigen::Matrix2d M;
      M << b1, b2, D1.real(), D2.real();
      if (std::abs(M.determinant()) > 1e-14) {
        const Eigen::Vector2d p = M.inverse() * Eigen::Vector2d(-a, -C.real());
        points.emplace_back(p(0), p(1));
      }
    }
  }
  for (const auto& [p1, p2] : points) {
    double beta = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (std::abs(form_at(i, p1, p2)) <= 1e-10 * scale_of(i)) beta += (c_ - 1.0) * spec_->multiplicities[i];
    }
    outer.push_back({p1, beta + 1.0});
  }

  auto inner = [&](double u1) {
    const double top = 1.0 - u1;
    if (!(top > 0.0)) return 0.0;
    std::vector<Breakpoint> inner;
    for (std::size_t i = 0; i < rows; ++i) {
      double root = 0.0, res = 0.0;
      const Complex A = base_[i] + slope_[i][0] * u1;
      if (!affine_root(A, slope_[i][1], root, res)) continue;
      const bool vanishes = res <= 1e-12 * scale_of(i);
      inner.push_back({root, vanishes ? (c_ - 1.0) * spec_->multiplicities[i] : 0.0});
    }
    Integrand h = [&](double u2) {
      const double u[2] = {u1, u2};
      return integrand(x, u);
    };
    return integrate_with_breakpoints(h, 0.0, top, inner, inner_tol, 0.0, 4000).value;
  };
  // Where two zero lines cross, the inner integral has a log singularity in u1
  // and is infinite on the crossing itself; step off it.
  Integrand g = [&](double u1) {
    const double v = inner(u1);
    if (std::isfinite(v)) return v;
    return inner(u1 + (u1 < 0.5 ? 1e-9 : -1e-9));
  };
  const auto r = integrate_with_breakpoints(g, 0.0, 1.0, outer, tol_, 0.0, 8000);
  require_converged(r);
  return r.value;
}

double martingale_Mc(ClosedSystemIntegral& integral, double gamma, const StatePath& closed_path,
                     double t) {
  const auto x = closed_path.at(t);
  return std::exp(-integral.c() * gamma * t) * integral(x);
}

double martingale_Mc(const SpectralDecomposition& spec, const SimplexGeometry& geometry, double c,
                     const StatePath& closed_path, double t, double quad_tol) {
  ClosedSystemIntegral integral(spec, geometry, c, quad_tol);
  return martingale_Mc(integral, spec.gamma, closed_path, t);
}

double relative_entropy(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(ErrorCode::DimensionMismatch, "vector lengths differ");
  double h = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(v[k] > 0.0)) throw Error(ErrorCode::ZeroDenominator, "reference vector has a zero entry");
    if (u[k] > 0.0) h += u[k] * std::log(u[k] / v[k]);
  }
  return std::max(0.0, h);
}

EntropyBounds check_entropy_bounds(std::span<const double> u, std::span<const double> v) {
  EntropyBounds b;
  b.entropy = relative_entropy(u, v);
  double l1 = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) l1 += std::abs(u[k] - v[k]);
  b.lower = 0.5 * l1 * l1;
  b.upper = l1 / *std::min_element(v.begin(), v.end());
  b.lower_ok = b.lower <= b.entropy + 1e-12;
  b.upper_ok = b.entropy <= b.upper + 1e-12;
  return b;
}

}  // namespace mobnet
