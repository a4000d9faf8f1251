#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "mobnet/error.hpp"
#include "mobnet/network.hpp"
#include "mobnet/stats.hpp"

using namespace mobnet;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

MobilityProfile symmetric2(double rate = 1.0) {
  Matrix Q(2, 2);
  Q << -rate, rate, rate, -rate;
  return validate_generator(Q);
}

MobilityProfile random_mobility(Stream& s, int K) {
  Matrix Q = Matrix::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l)
      if (l != k && s.uniform() < 0.7) Q(k, l) = 0.2 + s.uniform();
    Q(k, (k + 1) % K) += 0.3;  // a cycle keeps it irreducible
    Q(k, k) = 0.0;
    Q(k, k) = -Q.row(k).sum();
  }
  return validate_generator(Q);
}

double total(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); }

}  // namespace

TEST_CASE("parameter aggregates") {
  const auto p = NetworkParams::make(symmetric2(), {0.3, 0.2}, {0.5, 0.5});
  CHECK(p.lambda_total == doctest::Approx(0.5));
  CHECK(p.mu_total == doctest::Approx(1.0));
  CHECK(p.rho == doctest::Approx(0.5));
  CHECK(p.kappa_bound == doctest::Approx(1.5));
  CHECK(code_of([] { NetworkParams::make(symmetric2(), {1, 1}, {1, 1}, 3.0); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { NetworkParams::make(symmetric2(), {1}, {1, 1}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { NetworkParams::make(symmetric2(), {-1, 1}, {1, 1}); }) == ErrorCode::InvalidParams);
}

TEST_CASE("closed dynamics conserve users") {
  const auto p = NetworkParams::make(symmetric2(), {0, 0}, {0, 0});
  const auto path = simulate_open(p, {3, 1}, 50.0, Stream(1, 1));
  CHECK(path.size() > 10);
  for (std::size_t i = 0; i < path.size(); ++i) REQUIRE(path.norm(i) == 4.0);
  CHECK(code_of([&] { simulate_open(p, {3, 1}, 0.0, Stream(1, 1)); }) == ErrorCode::ZeroHorizon);
}

TEST_CASE("pure arrivals give a Poisson count") {
  const auto p = NetworkParams::make(symmetric2(), {1, 0}, {0, 0});
  const double h = 5.0;
  std::vector<double> counts;
  for (int i = 0; i < 2000; ++i) {
    const auto path = simulate_open(p, {0, 0}, h, Stream(2, i));
    counts.push_back(path.norm_at(h));
  }
  const auto m = mean_se(counts);
  CHECK(std::abs(m.mean - h) < 3.0 * std::sqrt(h / counts.size()));
}

TEST_CASE("identical seeds give identical runs") {
  const auto p = NetworkParams::make(symmetric2(), {0.4, 0.3}, {0.5, 0.6});
  SimOptions opt;
  opt.record_events = true;
  const auto a = simulate_open_run(p, {2, 3}, 100.0, Stream(9, 9), opt);
  const auto b = simulate_open_run(p, {2, 3}, 100.0, Stream(9, 9), opt);
  CHECK(a.events == b.events);
  CHECK(a.path == b.path);
  CHECK(!a.events.empty());
  const auto c = simulate_open_run(p, {2, 3}, 100.0, Stream(9, 10), opt);
  CHECK(!(c.events == a.events));
  const auto csv = event_log_csv(a.events);
  CHECK(csv.rfind("t,event_type,node_from,node_to\n", 0) == 0);
}

TEST_CASE("event budget guard") {
  const auto p = NetworkParams::make(symmetric2(), {0.4, 0.3}, {0.5, 0.6});
  SimOptions opt;
  opt.max_events = 10;
  CHECK(code_of([&] { simulate_open(p, {5, 5}, 1e6, Stream(1, 2), opt); }) == ErrorCode::EventBudgetExceeded);
}

TEST_CASE("clock rate bookkeeping") {
  // Dyadic rates make every partial sum exact in binary floating point.
  Matrix Q(3, 3);
  Q << -1.5, 1, 0.5, 0.25, -0.75, 0.5, 2, 0, -2;
  const auto prof = validate_generator(Q);
  const auto p = NetworkParams::make(prof, {0.5, 0.25, 0.125}, {1, 0.5, 0.75});
  std::uint64_t checked = 0;
  SimOptions opt;
  opt.observer = [&](std::span<const std::int64_t> y, double rate) {
    double expect = 0.875;
    for (int k = 0; k < 3; ++k) {
      if (y[k] > 0) expect += p.mu_k[k];
      expect += static_cast<double>(y[k]) * -Q(k, k);
    }
    REQUIRE(rate == expect);
    ++checked;
  };
  simulate_open(p, {3, 0, 2}, 200.0, Stream(3, 3), opt);
  CHECK(checked > 100);
}

TEST_CASE("coupled construction invariants") {
  Stream s(11, 0);
  int runs = 0;
  for (int set = 0; set < 6; ++set) {
    const int K = 2 + set % 3;
    const auto mob = random_mobility(s, K);
    std::vector<double> lam(K), mu(K);
    for (int k = 0; k < K; ++k) {
      lam[k] = 0.5 * s.uniform();
      mu[k] = 0.2 + s.uniform();
    }
    const auto p = NetworkParams::make(mob, lam, mu);
    for (int rep = 0; rep < 10; ++rep) {
      State y(K);
      for (auto& v : y) v = static_cast<std::int64_t>(s.below(6));
      const auto b = simulate_coupled(p, y, 60.0, Stream(12, set * 100 + rep));
      const auto check = check_coupling(b, mob.pi);
      CHECK_MESSAGE(check.ok(), check.first_violation);
      CHECK(check.assertions > 0);
      ++runs;
    }
  }
  CHECK(runs == 60);
}

TEST_CASE("coupling without arrivals or departures") {
  const auto p = NetworkParams::make(symmetric2(), {0, 0}, {0, 0});
  const auto b = simulate_coupled(p, {4, 2}, 30.0, Stream(5, 5));
  CHECK(b.open_path == b.closed_path);
  CHECK(b.walk_path.value(b.walk_path.size() - 1) == 6.0);
}

TEST_CASE("coupled bundles are reproducible") {
  const auto p = NetworkParams::make(symmetric2(), {0.5, 0.2}, {0.4, 0.6});
  const auto a = simulate_coupled(p, {3, 3}, 40.0, Stream(6, 1));
  const auto b = simulate_coupled(p, {3, 3}, 40.0, Stream(6, 1));
  CHECK(a == b);
}

TEST_CASE("closed system keeps its size and the free walk matches the streams") {
  const auto p = NetworkParams::make(symmetric2(), {0.7, 0.1}, {0.3, 0.9});
  const auto b = simulate_coupled(p, {5, 0}, 80.0, Stream(7, 3));
  for (std::size_t i = 0; i < b.closed_path.size(); ++i) REQUIRE(total(b.closed_path.state(i)) == 5.0);
  std::size_t a = 0, d = 0;
  for (const auto& v : b.arrival_events) a += v.size();
  for (const auto& v : b.departure_events) d += v.size();
  CHECK(b.walk_path.value(b.walk_path.size() - 1) == 5.0 + double(a) - double(d));
}

TEST_CASE("tagged user alone gets the full capacity") {
  const auto p = NetworkParams::make(symmetric2(), {0, 0}, {2, 2});
  for (int i = 0; i < 20; ++i) {
    const auto run = simulate_tagged(p, {1, 0}, 0, 1e4, Stream(8, i));
    REQUIRE(run.record.sojourn);
    CHECK(*run.record.sojourn == doctest::Approx(run.record.requirement / 2.0).epsilon(1e-12));
    const double mid = 0.5 * *run.record.sojourn;
    CHECK(run.record.service_at(mid) == doctest::Approx(2.0 * mid).epsilon(1e-12));
  }
  CHECK(code_of([&] { simulate_tagged(p, {0, 1}, 0, 10.0, Stream(1, 1)); }) == ErrorCode::EmptyTagNode);
}

TEST_CASE("co-located users share the capacity") {
  const auto p = NetworkParams::make(symmetric2(1e-12), {0, 0}, {3, 3});
  const auto run = simulate_tagged(p, {2, 0}, 0, 1e4, Stream(9, 1));
  const auto& sc = run.record.service_curve;
  REQUIRE(sc.size() >= 2);
  const double slope = (sc.value(1) - sc.value(0)) / (sc.time(1) - sc.time(0));
  CHECK(slope == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("service curve is nondecreasing with bounded slope") {
  const auto p = NetworkParams::make(symmetric2(), {0.6, 0.3}, {0.5, 0.7});
  for (int i = 0; i < 30; ++i) {
    const auto run = simulate_tagged(p, {3, 2}, 0, 500.0, Stream(10, i));
    const auto& sc = run.record.service_curve;
    CHECK(sc.value(0) == 0.0);
    for (std::size_t j = 1; j < sc.size(); ++j) {
      const double dt = sc.time(j) - sc.time(j - 1);
      const double ds = sc.value(j) - sc.value(j - 1);
      REQUIRE(ds >= 0.0);
      REQUIRE(ds <= 0.7 * dt * (1 + 1e-12) + 1e-15);
    }
    if (run.record.sojourn) CHECK(run.record.service_at(*run.record.sojourn) == doctest::Approx(run.record.requirement));
  }
}

TEST_CASE("lone-user sojourn is exponential") {
  const auto p = NetworkParams::make(symmetric2(), {0, 0}, {1.5, 1.5});
  std::vector<double> chi;
  for (int i = 0; i < 10000; ++i) chi.push_back(*simulate_tagged(p, {0, 1}, 1, 1e6, Stream(13, i)).record.sojourn);
  const double d = ks_one_sample(chi, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-1.5 * x); });
  CHECK(ks_pvalue_one_sample(d, chi.size()) > 0.01);
}

TEST_CASE("stationary sampling: geometric dominance and balance") {
  const auto p = NetworkParams::make(symmetric2(), {0.25, 0.25}, {0.5, 0.5});
  StationaryOptions opt;
  opt.batch_cycles = 2000;
  opt.max_level = 40;
  const auto s = sample_stationary(p, 100000, Stream(14, 0), opt);
  CHECK(s.batches.size() == 50);
  CHECK(s.total_cycles() == 100000);
  for (int q = 1; q <= 10; ++q) {
    const auto tail = tail_probability(s, q);
    CHECK(tail.value >= std::pow(p.rho, q) - 3.0 * tail.se);
  }
  for (int m = 1; m <= 5; ++m) {
    const auto r = check_balance_identity(s, p, m);
    CHECK(!r.insufficient);
    CHECK(std::abs(r.residual) <= 3.0 * r.se);
  }
  const auto far = check_balance_identity(s, p, 40);
  CHECK((far.insufficient || std::abs(far.residual) <= 3.0 * far.se + 1e-15));
  double total_p = 0.0;
  for (int m = 0; m <= 40; ++m) total_p += level_probability(s, m).value;
  CHECK(total_p <= 1.0 + 1e-12);
  CHECK(stationary_moment(s, 0).value == doctest::Approx(1.0));
}

TEST_CASE("single serving node still balances") {
  const auto p = NetworkParams::make(symmetric2(), {0.2, 0.1}, {0.8, 0.0});
  StationaryOptions opt;
  opt.batch_cycles = 1000;
  opt.max_level = 30;
  const auto s = sample_stationary(p, 60000, Stream(15, 0), opt);
  for (int m = 1; m <= 6; ++m) {
    const auto r = check_balance_identity(s, p, m);
    CHECK(std::abs(r.residual) <= 3.0 * r.se);
  }
}

TEST_CASE("regenerative and time-average estimates of the empty probability agree") {
  const auto p = NetworkParams::make(symmetric2(), {0.3, 0.2}, {0.4, 0.6});
  StationaryOptions opt;
  opt.batch_cycles = 500;
  const auto s = sample_stationary(p, 50000, Stream(16, 0), opt);
  const auto regen = level_probability(s, 0);

  // Independent estimator: batch means of the time spent empty along one long run.
  const int batches = 40;
  const double len = 2000.0;
  std::vector<double> frac;
  const auto path = simulate_open(p, {0, 0}, batches * len, Stream(16, 1));
  for (int b = 0; b < batches; ++b) {
    double empty = 0.0;
    const double lo = b * len, hi = (b + 1) * len;
    std::size_t i = path.index_at(lo);
    double t = lo;
    while (t < hi) {
      const double next = i + 1 < path.size() ? std::min(path.time(i + 1), hi) : hi;
      if (path.norm(i) == 0.0) empty += next - t;
      t = next;
      ++i;
    }
    frac.push_back(empty / len);
  }
  const auto avg = mean_se(frac);
  CHECK(std::abs(avg.mean - regen.value) <= 3.0 * std::hypot(avg.se, regen.se));
}

TEST_CASE("light traffic concentrates at the empty state") {
  const auto p = NetworkParams::make(symmetric2(), {1e-4, 1e-4}, {1, 1});
  StationaryOptions opt;
  opt.batch_cycles = 200;
  const auto s = sample_stationary(p, 2000, Stream(17, 0), opt);
  CHECK(level_probability(s, 0).value > 0.999);
  const auto none = NetworkParams::make(symmetric2(), {0, 0}, {1, 1});
  opt.batch_cycles = 2;
  CHECK(level_probability(sample_stationary(none, 10, Stream(1, 1), opt), 0).value == 1.0);
}

TEST_CASE("stationary sampling errors") {
  const auto p = NetworkParams::make(symmetric2(), {1, 1}, {1, 1});
  CHECK(code_of([&] { sample_stationary(p, 10, Stream(1, 1)); }) == ErrorCode::UnstableParams);
  const auto q = NetworkParams::make(symmetric2(), {0.1, 0.1}, {1, 1});
  StationaryOptions opt;
  opt.batch_cycles = 10;
  const auto one = sample_stationary(q, 10, Stream(1, 1), opt);
  CHECK(code_of([&] { check_balance_identity(one, q, 1); }) == ErrorCode::InsufficientCycles);
}

TEST_CASE("stationary batches do not depend on the thread count") {
  const auto p = NetworkParams::make(symmetric2(), {0.3, 0.2}, {0.4, 0.6});
  StationaryOptions one, many;
  one.batch_cycles = many.batch_cycles = 100;
  one.threads = 1;
  many.threads = 4;
  const auto a = sample_stationary(p, 2000, Stream(18, 0), one);
  const auto b = sample_stationary(p, 2000, Stream(18, 0), many);
  REQUIRE(a.batches.size() == b.batches.size());
  for (std::size_t i = 0; i < a.batches.size(); ++i) {
    CHECK(a.batches[i].length == b.batches[i].length);
    CHECK(a.batches[i].level_time == b.batches[i].level_time);
  }
}

TEST_CASE("proportional initial states") {
  Vector pi(3);
  pi << 0.5, 0.3, 0.2;
  CHECK(proportional_state(pi, 10) == State{5, 3, 2});
  const auto y = proportional_state(pi, 7);
  CHECK(std::accumulate(y.begin(), y.end(), std::int64_t{0}) == 7);
  CHECK(y == State{4, 2, 1});  // 3.5, 2.1, 1.4: remainder to the largest fraction
}

TEST_CASE("path export") {
  StatePath p(2, 3);
  const double a[] = {1, 2}, b[] = {3, 4};
  p.push(0, a);
  p.push(1.5, b);
  const double grid[] = {0.0, 2.0};
  CHECK(path_csv(p, grid) == "t,x_1,x_2\n0,1,2\n2,3,4\n");
}

TEST_CASE("stationary snapshots") {
  const auto p = NetworkParams::make(symmetric2(), {0.3, 0.2}, {0.4, 0.6});
  const auto snaps = stationary_snapshots(p, 50, 100.0, 10.0, Stream(19, 0));
  CHECK(snaps.size() == 50);
  CHECK(snaps == stationary_snapshots(p, 50, 100.0, 10.0, Stream(19, 0)));
}
