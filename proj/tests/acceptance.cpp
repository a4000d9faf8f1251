// Acceptance run: one PASS/FAIL line per criterion at the stated tolerances.
// Reports go to ./acceptance_out (or $MOBNET_ACCEPTANCE_OUT) for inspection.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <fmt/format.h>

#include "mobnet/experiments.hpp"
#include "mobnet/martingale.hpp"
#include "mobnet/parallel.hpp"

using namespace mobnet;
namespace fs = std::filesystem;

namespace {

fs::path out_dir() {
  const char* env = std::getenv("MOBNET_ACCEPTANCE_OUT");
  return env ? fs::path(env) : fs::path("acceptance_out");
}

void save(const ExperimentReport& rep, const std::string& name) {
  const auto dir = out_dir();
  fs::create_directories(dir);
  std::ofstream(dir / (name + ".txt")) << rep.to_string();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

MobilityProfile from_rows(std::vector<double> rows, int K) {
  return validate_generator(std::span<const double>(rows), K);
}

MobilityProfile symmetric2() { return from_rows({-1, 1, 1, -1}, 2); }

// All verdicts whose metric starts with one of the prefixes must pass.
Outcome verdicts_with(const ExperimentReport& rep, std::initializer_list<std::string> prefixes) {
  Outcome o{true, ""};
  int seen = 0, failed = 0;
  std::string first_fail;
  for (const auto& v : rep.verdicts) {
    bool match = false;
    for (const auto& p : prefixes) match = match || v.metric.rfind(p, 0) == 0;
    if (!match) continue;
    ++seen;
    if (!v.pass) {
      ++failed;
      if (first_fail.empty())
        first_fail = fmt::format("{}: {} vs {} (se {})", v.metric, format_number(v.estimate),
                                 format_number(v.threshold), format_number(v.se));
    }
  }
  o.pass = seen > 0 && failed == 0;
  o.detail = fmt::format("{}/{} verdicts pass", seen - failed, seen);
  if (!first_fail.empty()) o.detail += "; first failure " + first_fail;
  return o;
}

const Verdict* find(const ExperimentReport& rep, const std::string& metric) {
  for (const auto& v : rep.verdicts)
    if (v.metric == metric) return &v;
  return nullptr;
}

std::string show(const ExperimentReport& rep, const std::string& metric) {
  const auto* v = find(rep, metric);
  if (!v) return metric + " missing";
  return fmt::format("{} = {} (se {}, threshold {})", metric, format_number(v->estimate), format_number(v->se),
                     format_number(v->threshold));
}

// ------------------------------------------------------------------ criteria

Outcome coupling_suite() {
  struct Set {
    MobilityProfile mob;
    std::vector<double> lambda, mu;
    State y;
    double horizon;
  };
  std::vector<Set> sets{
      {symmetric2(), {0.5, 0.5}, {0.6, 0.6}, {0, 0}, 400.0},
      {from_rows({-2, 2, 1, -1}, 2), {0.9, 0.1}, {0.2, 0.9}, {30, 5}, 200.0},
      {from_rows({-1, 0.5, 0.5, 1, -2, 1, 0.5, 0.5, -1}, 3), {0.5, 0.3, 0.2}, {0.4, 0.4, 0.4}, {5, 0, 3}, 300.0},
      {from_rows({-3, 1, 2, 0.2, -0.4, 0.2, 1, 1, -2}, 3), {1.0, 0.0, 0.0}, {0.0, 0.6, 0.6}, {0, 0, 0}, 300.0},
      {from_rows({-3, 1, 1, 1, 1, -3, 1, 1, 1, 1, -3, 1, 1, 1, 1, -3}, 4), {0.3, 0.3, 0.3, 0.3},
       {0.35, 0.35, 0.35, 0.35}, {10, 0, 0, 2}, 200.0},
      {from_rows({-1, 1, 0, 0, 0, -1, 1, 0, 0, 0, -1, 1, 1, 0, 0, -1}, 4), {2.0, 0, 0, 0}, {0, 0, 0, 2.5},
       {40, 40, 0, 0}, 100.0},
  };
  const std::size_t per_set = 100;
  std::uint64_t assertions = 0, violations = 0;
  std::string first;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto params = NetworkParams::make(sets[s].mob, sets[s].lambda, sets[s].mu);
    const auto checks = replicate(per_set, 0, [&](std::size_t r) {
      return check_coupling(simulate_coupled(params, sets[s].y, sets[s].horizon, Stream(2024, s).child(r)),
                            params.mobility.pi);
    });
    for (const auto& c : checks) {
      assertions += c.assertions;
      violations += c.violations;
      if (first.empty() && !c.first_violation.empty()) first = c.first_violation;
    }
  }
  return {violations == 0 && assertions > 0,
          fmt::format("{} replications over {} parameter sets, {} assertions, {} violations{}", per_set * sets.size(),
                      sets.size(), assertions, violations, first.empty() ? "" : " (" + first + ")")};
}

Outcome homogeneity() {
  Stream rng(77, 0);
  double worst = 0.0;
  for (int d = 0; d < 100; ++d) {
    const int K = 2 + static_cast<int>(rng.below(3));
    Matrix Q = Matrix::Zero(K, K);
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j)
        if (i != j) Q(i, j) = 0.1 + 2.0 * rng.uniform();
      Q(i, i) = -Q.row(i).sum();
    }
    const auto p = validate_generator(Q);
    const auto spec = spectral_decomposition(p);
    Vector u(K);
    for (int k = 0; k < K; ++k) u(k) = rng.normal();
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(5.0 / p.gamma * i / 100.0);
    worst = std::max(worst, check_homogeneity(spec, p, u, grid));
  }
  return {worst <= 1e-8, fmt::format("max relative error {} over 100 generators (threshold 1e-8)", format_number(worst))};
}

Outcome martingale_drift() {
  MartingaleSettings s;
  s.generators = {symmetric2(), from_rows({-2, 2, 1, -1}, 2)};
  s.users = 20;
  s.reps = 10000;
  s.homogeneity_draws = 10;
  s.entropy_draws = 1000;
  const auto rep = run_martingale_check(s, {3, 0});
  save(rep, "criterion_03_martingale");
  auto o = verdicts_with(rep, {"drift_"});
  const auto& d = rep.table("drift");
  double worst_exact = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) worst_exact = std::min(worst_exact, d.number(i, "exact_drift"));
  o.detail += fmt::format("; exact expected drift reaches {}", format_number(worst_exact));
  return o;
}

Outcome homogenization_bound() {
  const auto params = NetworkParams::make(symmetric2(), {0.5, 0.5}, {0.6, 0.6});
  HomogenizationSettings s;
  s.initial_states = {{2000, 0}};
  s.eps_grid = {0.2};
  s.reps = 1000;
  const auto rep = run_homogenization(params, s, {4, 0});
  save(rep, "criterion_04_homogenization");
  auto o = verdicts_with(rep, {"closed_state0_eps0.2"});
  o.detail = show(rep, "closed_state0_eps0.2");
  return o;
}

ExperimentReport heavy_traffic_run() {
  const auto L = HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {10, 20, 40});
  HeavyTrafficSettings s;
  s.t_grid = {0.5, 1.0};
  s.ks_time = 1.0;
  s.t_max = 1.0;
  s.reps = 2000;
  const auto rep = run_heavy_traffic(L, s, {5, 0});
  save(rep, "criterion_05_06_heavy_traffic");
  return rep;
}

Outcome heavy_traffic_marginal(const ExperimentReport& rep) {
  auto o = verdicts_with(rep, {"ks_final_t1", "ks_monotone_t1_"});
  o.detail += "; " + show(rep, "ks_final_t1");
  return o;
}

Outcome state_space_collapse(const ExperimentReport& rep) {
  auto o = verdicts_with(rep, {"collapse_median_"});
  o.detail += "; " + show(rep, "collapse_median_final");
  return o;
}

ExperimentReport stationary_run() {
  const auto L = HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {20, 40});
  StationarySettings s;
  s.cycles = 200000;
  s.batch_cycles = 1000;
  s.snapshots = 200;
  const auto rep = run_stationary(L, s, {6, 0});
  save(rep, "criterion_07_08_stationary");
  return rep;
}

Outcome stationary_moments(const ExperimentReport& rep) {
  auto o = verdicts_with(rep, {"moment_r1_n40", "moment_r2_n40", "geometric_q"});
  o.detail += "; " + show(rep, "moment_r1_n40") + "; " + show(rep, "moment_r2_n40");
  return o;
}

Outcome balance(const ExperimentReport& rep) {
  Outcome o{true, ""};
  int ok = 0;
  for (int m = 1; m <= 10; ++m) {
    const auto* v = find(rep, fmt::format("balance_m{}_n20", m));
    if (!v) return {false, "missing balance verdicts"};
    ok += v->pass;
    o.pass = o.pass && v->pass;
  }
  o.detail = fmt::format("{}/10 levels within 3 SE at n = 20", ok);
  return o;
}

Outcome sojourn() {
  const auto L = HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {40});
  SojournSettings s;
  s.b = 1.0;
  s.tags = 2000;
  const auto rep = run_sojourn(L, s, {7, 0});
  save(rep, "criterion_09_sojourn");
  auto o = verdicts_with(rep, {"fixed_ks_n40", "stationary_ks_n40"});
  o.detail += "; " + show(rep, "fixed_ks_n40") + "; " + show(rep, "stationary_ks_n40");
  return o;
}

Outcome reference_laws() {
  const auto rep = run_reference_laws(ReferenceSettings{}, {8, 0});
  save(rep, "criterion_10_reference");
  return verdicts_with(rep, {"rbm_cdf_", "poisson_"});
}

Outcome hitting() {
  const auto params = NetworkParams::make(symmetric2(), {0.5, 0.5}, {0.5, 0.5});
  const auto rep = run_hitting(params, HittingSettings{}, {9, 0});
  save(rep, "criterion_11_hitting");
  auto o = verdicts_with(rep, {"log_p_slope"});
  o.detail = show(rep, "log_p_slope");
  return o;
}

Outcome determinism() {
  const auto L = HeavyTrafficLadder::make(symmetric2(), 1.0, 1.0, {4, 8});
  const auto net = NetworkParams::make(from_rows({-1, 0.5, 0.5, 1, -2, 1, 0.5, 0.5, -1}, 3), {0.3, 0.3, 0.3},
                                       {0.4, 0.4, 0.4});
  std::vector<std::pair<std::string, std::function<ExperimentReport(int)>>> runs{
      {"homogenize",
       [&](int th) {
         HomogenizationSettings s;
         s.initial_states = {{60, 0, 0}, {0, 0, 0}};
         s.eps_grid = {0.3};
         s.reps = 50;
         return run_homogenization(net, s, {12, th});
       }},
      {"heavy-traffic",
       [&](int th) {
         HeavyTrafficSettings s;
         s.t_max = 1.0;
         s.reps = 50;
         return run_heavy_traffic(L, s, {12, th});
       }},
      {"stationary",
       [&](int th) {
         StationarySettings s;
         s.cycles = 1000;
         s.batch_cycles = 100;
         s.snapshots = 20;
         return run_stationary(L, s, {12, th});
       }},
      {"sojourn",
       [&](int th) {
         SojournSettings s;
         s.tags = 50;
         s.chains = 4;
         return run_sojourn(L, s, {12, th});
       }},
      {"hitting",
       [&](int th) {
         HittingSettings s;
         s.phi_grid = {5, 10};
         s.reps = 50;
         return run_hitting(net, s, {12, th});
       }},
      {"martingale-check",
       [&](int th) {
         MartingaleSettings s;
         s.generators = {symmetric2()};
         s.users = 5;
         s.reps = 100;
         s.homogeneity_draws = 3;
         s.entropy_draws = 50;
         return run_martingale_check(s, {12, th});
       }},
      {"reference",
       [&](int th) {
         ReferenceSettings s;
         s.paths = 200;
         return run_reference_laws(s, {12, th});
       }},
      {"simulate",
       [&](int th) {
         SimulateSettings s;
         s.initial = {3, 0, 1};
         s.horizon = 20.0;
         s.event_log = true;
         return run_simulate(net, s, {12, th});
       }},
  };
  int same = 0;
  std::string differ;
  for (const auto& [name, fn] : runs) {
    const auto a = fn(1).to_string();
    const auto b = fn(3).to_string();
    const auto c = fn(1).to_string();
    if (a == b && a == c)
      ++same;
    else
      differ += " " + name;
  }
  return {same == static_cast<int>(runs.size()),
          fmt::format("{}/{} experiments byte-identical across reruns and 1 vs 3 threads{}", same, runs.size(),
                      differ.empty() ? "" : ";" + differ + " differ")};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("criterion %2d %-28s %s  [%.1f s] %s\n", id, name, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "pathwise coupling", coupling_suite);
  report(2, "F homogeneity", homogeneity);
  report(3, "martingale drift", martingale_drift);
  report(4, "homogenization bound", homogenization_bound);
  ExperimentReport ht;
  report(5, "heavy-traffic marginal", [&] {
    ht = heavy_traffic_run();
    return heavy_traffic_marginal(ht);
  });
  report(6, "state space collapse", [&] { return state_space_collapse(ht); });
  ExperimentReport st;
  report(7, "stationary moments", [&] {
    st = stationary_run();
    return stationary_moments(st);
  });
  report(8, "balance identity", [&] { return balance(st); });
  report(9, "sojourn limits", sojourn);
  report(10, "reference laws", reference_laws);
  report(11, "hitting diagnostics", hitting);
  report(12, "determinism", determinism);
  std::printf("%d of 12 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
