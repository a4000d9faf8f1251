#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"
#include "mobnet/stats.hpp"

using namespace mobnet;
namespace fs = std::filesystem;

namespace {

MobilityProfile symmetric2() {
  Matrix Q(2, 2);
  Q << -1, 1, 1, -1;
  return validate_generator(Q);
}

MobilityProfile three_nodes() {
  Matrix Q(3, 3);
  Q << -1.0, 0.5, 0.5, 1.0, -2.0, 1.0, 0.5, 0.5, -1.0;
  return validate_generator(Q);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mobnet_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MOBNET_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("heavy-traffic ladder schedule") {
  const auto L = HeavyTrafficLadder::make(three_nodes(), 1.0, 2.0, {5, 10, 40}, {1, 1, 2}, {});
  for (std::size_t i = 0; i < L.n_values.size(); ++i) {
    const double n = L.n_values[i];
    const auto& p = L.at(i);
    CHECK(p.rho <= 1.0);
    CHECK(n * (1.0 - p.rho) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p.lambda_total == doctest::Approx(1.0 - 1.0 / n));
    CHECK(p.lambda_total + p.mu_total <= L.kappa + 1e-12);
    CHECK(p.lambda_k[2] == doctest::Approx(p.lambda_total / 2));
    CHECK(p.mu_k[0] == doctest::Approx(p.mu_total / 3));
  }
  const auto zero = HeavyTrafficLadder::make(symmetric2(), 1.0, 0.0, {4, 8});
  CHECK(zero.at(1).rho == 1.0);
  CHECK_THROWS_AS(HeavyTrafficLadder::make(symmetric2(), 1.0, 5.0, {5, 10}), Error);
  CHECK_THROWS_AS(HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {10, 10}), Error);
  CHECK_THROWS_AS(HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {10}, {1, 0, 0}), Error);
}

TEST_CASE("mixing report lists tau for every eps") {
  const auto rep = run_mixing(symmetric2(), {0.1, 0.01});
  const auto& t = rep.table("mixing");
  CHECK(t.rows() == 2);
  // Delta(t) = e^{-2t}/2 on the symmetric pair.
  CHECK(t.number(0, "tau") == doctest::Approx(std::log(5.0) / 2.0).epsilon(1e-6));
  CHECK(t.number(1, "delta_at_tau") == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("homogenization: re-reduction, thread independence, empty start") {
  const auto params = NetworkParams::make(symmetric2(), {0.5, 0.5}, {0.6, 0.6});
  HomogenizationSettings s;
  s.initial_states = {{200, 0}, {0, 0}, {50, 50}};
  s.eps_grid = {0.3, 0.1};
  s.reps = 40;
  const auto one = run_homogenization(params, s, {5, 1});
  const auto many = run_homogenization(params, s, {5, 3});
  CHECK(one.to_string() == many.to_string());
  const auto again = reduce_homogenization(params, s, one.table("replications"), 5);
  CHECK(again.to_string() == one.to_string());

  const auto& h = one.table("homogenization");
  for (std::size_t i = 0; i < h.rows(); ++i) {
    if (h.number(i, "size") == 0.0 && h.cell(i, 3) == "closed") CHECK(h.number(i, "p_hat") == 0.0);
    if (h.number(i, "state") == 2.0) CHECK(h.number(i, "rho_t0") == 0.0);
  }
  CHECK(run_homogenization(params, s, {6, 1}).to_string() != one.to_string());
}

TEST_CASE("heavy traffic: coupling is checked and the report re-reduces") {
  const auto L = HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {4, 8});
  HeavyTrafficSettings s;
  s.t_max = 1.0;
  s.t_grid = {0.5, 1.0};
  s.reps = 30;
  const auto rep = run_heavy_traffic(L, s, {3, 1});
  const auto& c = rep.table("coupling");
  for (std::size_t i = 0; i < c.rows(); ++i) {
    CHECK(c.number(i, "assertions") > 0);
    CHECK(c.number(i, "violations") == 0);
    CHECK(c.number(i, "g_order_violations") == 0);
  }
  CHECK(run_heavy_traffic(L, s, {3, 3}).to_string() == rep.to_string());
  const auto again = reduce_heavy_traffic(L, s, rep.table("replications"), rep.table("rbm_reference"), 3);
  CHECK(again.to_string() == rep.to_string());
  bool has_ks = false;
  for (const auto& v : rep.verdicts) has_ks = has_ks || v.metric == "ks_final_t1";
  CHECK(has_ks);
}

TEST_CASE("a lone user with equal capacities leaves after Exp(mu)") {
  const auto params = NetworkParams::make(three_nodes(), {0, 0, 0}, {0.7, 0.7, 0.7});
  std::vector<double> chi;
  Stream root(41, 0);
  for (int r = 0; r < 3000; ++r) {
    const auto run = simulate_tagged(params, {0, 1, 0}, 1, 200.0, root.child(r));
    REQUIRE(run.record.sojourn);
    chi.push_back(*run.record.sojourn);
  }
  const double d = ks_one_sample(chi, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-0.7 * x); });
  CHECK(ks_pvalue_one_sample(d, chi.size()) > 1e-3);
}

TEST_CASE("sojourn report is thread independent") {
  const auto L = HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {4, 8});
  SojournSettings s;
  s.tags = 40;
  s.chains = 4;
  const auto a = run_sojourn(L, s, {2, 1});
  CHECK(run_sojourn(L, s, {2, 3}).to_string() == a.to_string());
  CHECK(a.table("stationary_start").rows() == 2);
}

TEST_CASE("stationary report is thread independent") {
  const auto L = HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {4, 8});
  StationarySettings s;
  s.cycles = 400;
  s.batch_cycles = 100;
  s.snapshots = 20;
  const auto a = run_stationary(L, s, {4, 1});
  CHECK(run_stationary(L, s, {4, 3}).to_string() == a.to_string());
  CHECK(a.table("moments").number(0, "estimate") == 1.0);
  const auto zero = HeavyTrafficLadder::make(symmetric2(), 1.0, 0.0, {4, 8});
  CHECK_THROWS_AS(run_stationary(zero, s, {}), Error);
}

TEST_CASE("an impossible deviation is never hit") {
  const auto params = NetworkParams::make(symmetric2(), {0.5, 0.5}, {0.5, 0.5});
  HittingSettings s;
  s.phi_grid = {5, 10};
  s.delta = 2.0;
  s.t = 2.0;
  s.reps = 50;
  const auto rep = run_hitting(params, s, {1, 1});
  const auto& h = rep.table("hitting");
  for (std::size_t i = 0; i < h.rows(); ++i) {
    CHECK(h.number(i, "open_hits") == 0);
    CHECK(h.number(i, "closed_hits") == 0);
  }
}

TEST_CASE("martingale check tables") {
  MartingaleSettings s;
  s.generators = {symmetric2()};
  s.users = 4;
  s.reps = 200;
  s.homogeneity_draws = 5;
  s.entropy_draws = 100;
  const auto rep = run_martingale_check(s, {1, 1});
  const auto& d = rep.table("drift");
  CHECK(d.rows() == 9);
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(d.number(i, "exact_drift") < 0.0);
  CHECK(run_martingale_check(s, {1, 3}).to_string() == rep.to_string());
}

TEST_CASE("config glue names the missing key") {
  const auto cfg = Config::parse("[mobility]\nQ = [[-1, 1], [1, -1]]\n[network]\nmu_k = [1, 1]\n"
                                 "[experiment]\ninitial = [1, 1]\nhorizon = 1.0\n");
  try {
    run_from_config("simulate", cfg, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    CHECK(std::string(e.what()).find("[network] lambda_k") != std::string::npos);
  }
  CHECK_THROWS_AS(run_from_config("nonsense", cfg, {}), Error);
}

TEST_CASE("command line exit codes and byte-identical reruns") {
  const auto dir = scratch("cli");
  write(dir / "mixing.toml", "[mobility]\nQ = [[-1, 1], [2, -2]]\n[experiment]\neps_grid = [0.1, 0.01]\n");
  CHECK(run_cli("mixing --config " + (dir / "mixing.toml").string() + " --out " + (dir / "m").string(),
                dir / "log1") == 0);
  CHECK(slurp(dir / "m" / "mixing.csv").rfind("eps,tau,delta_at_tau\n", 0) == 0);

  write(dir / "broken.toml", "[mobility]\nQ = [[-1, 1], [2, -2]]\n[experiment]\n");
  CHECK(run_cli("mixing --config " + (dir / "broken.toml").string() + " --out " + (dir / "b").string(),
                dir / "log2") == 2);
  CHECK(slurp(dir / "log2").find("[experiment] eps_grid") != std::string::npos);
  CHECK(run_cli("mixing --config " + (dir / "nowhere.toml").string(), dir / "log3") == 2);
  CHECK(run_cli("bogus --config x", dir / "log4") == 2);

  const std::string ht = "[mobility]\nQ = [[-1, 1], [1, -1]]\n[ladder]\nlambda = 1.0\nalpha = 1.0\nn_values = [4, 6]\n"
                         "[experiment]\nt_max = 1.0\nreps = 20\n";
  write(dir / "ht.toml", ht);
  const auto base = "heavy-traffic --config " + (dir / "ht.toml").string() + " --seed 7 --out ";
  const int first = run_cli(base + (dir / "r1").string() + " --threads 1", dir / "log5");
  const int second = run_cli(base + (dir / "r2").string() + " --threads 2", dir / "log6");
  CHECK((first == 0 || first == 1));
  CHECK(first == second);
  CHECK(slurp(dir / "r1" / "report.txt") == slurp(dir / "r2" / "report.txt"));
  CHECK(slurp(dir / "r1" / "replications.csv") == slurp(dir / "r2" / "replications.csv"));

  // The drift verdicts fail: the closed-system process loses mass.
  write(dir / "mart.toml", "[mobility]\nQ = [[-1, 1], [1, -1]]\n[experiment]\nusers = 20\nreps = 500\n"
                           "homogeneity_draws = 3\nentropy_draws = 10\n");
  CHECK(run_cli("martingale-check --config " + (dir / "mart.toml").string() + " --out " + (dir / "mc").string(),
                dir / "log7") == 1);
  CHECK(slurp(dir / "mc" / "verdicts.csv").find(",FAIL") != std::string::npos);
}
