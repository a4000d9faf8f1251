#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "mobnet/error.hpp"
#include "mobnet/mobility.hpp"
#include "mobnet/rng.hpp"

using namespace mobnet;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

Matrix random_generator(Stream& s, int K) {
  Matrix Q = Matrix::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l)
      if (l != k) Q(k, l) = 0.1 + 2.0 * s.uniform();
    Q(k, k) = -Q.row(k).sum();
  }
  return Q;
}

}  // namespace

TEST_CASE("stationary law and gamma of small generators") {
  const auto sym = validate_generator(mat2(-1, 1, 1, -1));
  CHECK(sym.pi(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sym.gamma == 2.0);
  const auto asym = validate_generator(mat2(-1, 1, 2, -2));
  CHECK(asym.pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(asym.pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(asym.gamma == 3.0);
  CHECK(asym.pi_min == doctest::Approx(1.0 / 3.0));
  CHECK(asym.pi_max == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("generator validation errors") {
  CHECK(code_of([] { validate_generator(mat2(-1, 1, 0, 0)); }) == ErrorCode::Reducible);
  CHECK(code_of([] { validate_generator(mat2(-1, 1, 1, -1.5)); }) == ErrorCode::RowSumViolation);
  CHECK(code_of([] { validate_generator(mat2(1, -1, 1, -1)); }) == ErrorCode::NegativeOffDiagonal);
  CHECK(code_of([] { validate_generator(Matrix::Zero(1, 1)); }) == ErrorCode::DimensionMismatch);
  Matrix Q3(3, 3);
  Q3 << -1, 1, 0, 1, -1, 0, 0, 0, 0;
  CHECK(code_of([&] { validate_generator(Q3); }) == ErrorCode::Reducible);
  const double flat[] = {-1, 1, 2, -2};
  CHECK(validate_generator(flat, 2).gamma == 3.0);
}

TEST_CASE("transition matrix against closed forms and an independent exponential") {
  const auto p = validate_generator(mat2(-1, 1, 1, -1));
  CHECK(transition_matrix(p, 0.0).isIdentity(0.0));
  for (double t : {0.1, 1.0, 3.7}) {
    const Matrix P = transition_matrix(p, t, 1e-14);
    CHECK(P(0, 0) == doctest::Approx(0.5 + 0.5 * std::exp(-2 * t)).epsilon(1e-12));
  }
  Stream s(5, 5);
  for (int rep = 0; rep < 10; ++rep) {
    const int K = 2 + rep % 4;
    const auto prof = validate_generator(random_generator(s, K));
    const double t = 0.3 + 4.0 * s.uniform();
    const Matrix ours = transition_matrix(prof, t, 1e-14);
    const Matrix oracle = (prof.Q * t).exp();
    CHECK((ours - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ours.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(ours.minCoeff() >= 0.0);
  }
}

TEST_CASE("long-run rows approach pi") {
  const auto p = validate_generator(mat2(-1, 1, 2, -2));
  const Matrix P = transition_matrix(p, 1e3 / p.gamma, 1e-13);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) CHECK(std::abs(P(k, l) - p.pi(l)) < 1e-8);
}

TEST_CASE("semigroup property") {
  Stream s(6, 1);
  const auto p = validate_generator(random_generator(s, 3));
  const double tol = 1e-13;
  const Matrix lhs = transition_matrix(p, 1.7, tol);
  const Matrix rhs = transition_matrix(p, 0.6, tol) * transition_matrix(p, 1.1, tol);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 10 * tol);
}

TEST_CASE("delta of t") {
  const auto p = validate_generator(mat2(-1, 1, 1, -1));
  CHECK(delta_of_t(p, 0.0) == doctest::Approx(1.0 - p.pi_min));
  CHECK(delta_of_t(p, 1.0) == doctest::Approx(std::exp(-2.0) / 2).epsilon(1e-12));
  CHECK(delta_of_t(p, 20.0) < 1e-8);
  const double grid[] = {0.0, 0.5, 1.0, 2.0};
  const auto prof = mixing_profile(p, grid);
  REQUIRE(prof.delta_values.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) CHECK(prof.delta_values[i] <= prof.delta_values[i - 1]);
}

TEST_CASE("delta is invariant under node relabelling") {
  Stream s(8, 2);
  const Matrix Q = random_generator(s, 4);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.indices() << 2, 0, 3, 1;
  const Matrix Qp = perm * Q * perm.transpose();
  const auto a = validate_generator(Q);
  const auto b = validate_generator(Qp);
  for (double t : {0.0, 0.3, 1.2}) CHECK(delta_of_t(a, t) == doctest::Approx(delta_of_t(b, t)).epsilon(1e-12));
}

TEST_CASE("mixing time") {
  const auto p = validate_generator(mat2(-1, 1, 1, -1));
  CHECK(mixing_time_tau(p, 0.05) == doctest::Approx(std::log(10.0) / 2).epsilon(1e-10));
  CHECK(mixing_time_tau(p, 0.5) <= 1e-12);
  CHECK(code_of([&] { mixing_time_tau(p, 1.0); }) == ErrorCode::EpsOutOfRange);
  CHECK(code_of([&] { mixing_time_tau(p, 0.0); }) == ErrorCode::EpsOutOfRange);

  // Dense-grid oracle: last grid time with Delta >= eps, step 1e-4.
  const auto q = validate_generator(mat2(-1, 1, 2, -2));
  const double eps = 0.01;
  const Matrix step = transition_matrix(q, 1e-4, 1e-15);
  Matrix P = Matrix::Identity(2, 2);
  double last = 0.0;
  for (int i = 1; i <= 30000; ++i) {
    P = P * step;
    if (delta_of_matrix(q, P) >= eps) last = i * 1e-4;
  }
  CHECK(std::abs(mixing_time_tau(q, eps) - last) <= 1.01e-4);

  CHECK(mixing_time_tau(q, 0.01) >= mixing_time_tau(q, 0.02));
  CHECK(mixing_time_tau(q, 0.02) >= mixing_time_tau(q, 0.2));
}

TEST_CASE("mixing time horizon guard") {
  Matrix big(3, 3);
  // a fast pair weakly linked to a third node: Delta decays on a scale far beyond 200/gamma
  big << -10, 10, 0, 10, -10.00001, 0.00001, 0, 0.00001, -0.00001;
  const auto p = validate_generator(big);
  CHECK(code_of([&] { mixing_time_tau(p, 0.01); }) == ErrorCode::HorizonExceeded);
}

TEST_CASE("homogenization distance") {
  Vector pi(2);
  pi << 0.5, 0.5;
  const std::int64_t a[] = {2, 2}, b[] = {0, 0}, c[] = {3, 1};
  CHECK(rho_metric(a, pi) == 0.0);
  CHECK(rho_metric(b, pi) == 0.0);
  CHECK(rho_metric(c, pi) == doctest::Approx(0.5));
  const std::int64_t bad[] = {1, 2, 3};
  CHECK(code_of([&] { rho_metric(bad, pi); }) == ErrorCode::DimensionMismatch);
  Vector pi3(3);
  pi3 << 0.5, 0.25, 0.25;
  const std::int64_t prop[] = {4, 2, 2}, off[] = {4, 3, 1};
  CHECK(rho_metric(prop, pi3) == 0.0);
  CHECK(rho_metric(off, pi3) > 0.0);
}

TEST_CASE("transition tolerance guard") {
  const auto p = validate_generator(mat2(-1, 1, 1, -1));
  CHECK(code_of([&] { transition_matrix(p, 1.0, 1e-17); }) == ErrorCode::TolTooSmall);
}
