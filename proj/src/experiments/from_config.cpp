#include <algorithm>

#include "common.hpp"
#include "mobnet/error.hpp"
#include "mobnet/experiments.hpp"

namespace mobnet {

namespace {

constexpr const char* kExp = "experiment";

std::uint64_t count(const Config& cfg, const char* key, std::uint64_t fallback, std::uint64_t override_value) {
  if (override_value > 0) return override_value;
  const auto v = cfg.integer_or(kExp, key, static_cast<std::int64_t>(fallback));
  if (v < 1) throw Error(ErrorCode::Config, fmt::format("[{}] {} must be >= 1", kExp, key));
  return static_cast<std::uint64_t>(v);
}

std::vector<int> ints_or(const Config& cfg, const char* key, std::vector<int> fallback) {
  if (!cfg.has(kExp, key)) return fallback;
  std::vector<int> out;
  for (auto v : cfg.integers(kExp, key)) out.push_back(static_cast<int>(v));
  return out;
}

bool flag_or(const Config& cfg, const char* key, bool fallback) {
  if (!cfg.has(kExp, key)) return fallback;
  const auto& v = cfg.at(kExp, key);
  if (!v.is_boolean()) throw Error(ErrorCode::Config, fmt::format("[{}] {} must be true or false", kExp, key));
  return v.get<bool>();
}

State state_of(const nlohmann::json& v, const std::string& what) {
  if (!v.is_array()) throw Error(ErrorCode::Config, what + " must be a list of counts");
  State s;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
      throw Error(ErrorCode::Config, what + " must hold nonnegative integers");
    }
    s.push_back(e.get<std::int64_t>());
  }
  return s;
}

MobilityProfile matrix_profile(const nlohmann::json& rows, const std::string& what) {
  Config tmp;
  tmp.set("m", "Q", rows);
  try {
    int K = 0;
    const auto q = tmp.matrix("m", "Q", K);
    return validate_generator(std::span<const double>(q), K);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, what + ": " + e.what());
  }
}

}  // namespace

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> names{"mixing",  "simulate", "homogenize",       "heavy-traffic", "stationary",
                                              "sojourn", "hitting",  "martingale-check", "reference"};
  return names;
}

NetworkParams network_from_config(const Config& cfg) {
  return NetworkParams::make(mobility_from_config(cfg), cfg.numbers("network", "lambda_k"),
                             cfg.numbers("network", "mu_k"), cfg.number_or("network", "kappa", 0.0));
}

ExperimentReport run_from_config(const std::string& command, const Config& cfg, const RunOptions& opt,
                                 std::uint64_t reps) {
  ExperimentReport rep;
  if (command == "mixing") {
    rep = run_mixing(mobility_from_config(cfg), cfg.numbers(kExp, "eps_grid"));
  } else if (command == "simulate") {
    SimulateSettings s;
    s.initial = state_of(cfg.at(kExp, "initial"), "[experiment] initial");
    s.horizon = cfg.number(kExp, "horizon");
    s.grid = cfg.numbers_or(kExp, "grid", {});
    s.coupled = flag_or(cfg, "coupled", true);
    s.event_log = flag_or(cfg, "event_log", false);
    rep = run_simulate(network_from_config(cfg), s, opt);
  } else if (command == "homogenize") {
    HomogenizationSettings s;
    const auto& states = cfg.at(kExp, "initial_states");
    if (!states.is_array() || states.empty()) {
      throw Error(ErrorCode::Config, "[experiment] initial_states must be a nonempty list of states");
    }
    for (const auto& st : states) s.initial_states.push_back(state_of(st, "[experiment] initial_states"));
    s.eps_grid = cfg.numbers(kExp, "eps_grid");
    s.reps = count(cfg, "reps", s.reps, reps);
    rep = run_homogenization(network_from_config(cfg), s, opt);
  } else if (command == "heavy-traffic") {
    HeavyTrafficSettings s;
    s.t_grid = cfg.numbers_or(kExp, "t_grid", s.t_grid);
    s.collapse_grid = cfg.numbers_or(kExp, "collapse_grid", s.collapse_grid);
    s.eps_excursion = cfg.number_or(kExp, "eps_excursion", s.eps_excursion);
    s.t_max = cfg.number_or(kExp, "t_max", s.t_max);
    s.reps = count(cfg, "reps", s.reps, reps);
    s.ks_threshold = cfg.number_or(kExp, "ks_threshold", s.ks_threshold);
    s.ks_time = cfg.number_or(kExp, "ks_time", s.ks_time);
    s.collapse_threshold = cfg.number_or(kExp, "collapse_threshold", s.collapse_threshold);
    s.rbm_step = cfg.number_or(kExp, "rbm_step", s.rbm_step);
    rep = run_heavy_traffic(ladder_from_config(cfg), s, opt);
  } else if (command == "stationary") {
    StationarySettings s;
    s.cycles = count(cfg, "cycles", s.cycles, reps);
    s.batch_cycles = count(cfg, "batch_cycles", s.batch_cycles, 0);
    s.r_max = static_cast<int>(cfg.integer_or(kExp, "r_max", s.r_max));
    s.moment_orders = ints_or(cfg, "moment_orders", s.moment_orders);
    s.moment_rel_tol = cfg.number_or(kExp, "moment_rel_tol", s.moment_rel_tol);
    s.geometric_q_max = static_cast<int>(cfg.integer_or(kExp, "geometric_q_max", s.geometric_q_max));
    s.balance_max_level = static_cast<int>(cfg.integer_or(kExp, "balance_max_level", s.balance_max_level));
    s.snapshots = count(cfg, "snapshots", s.snapshots, 0);
    s.snapshot_spacing = cfg.number_or(kExp, "snapshot_spacing", s.snapshot_spacing);
    s.light_traffic_factor = cfg.number_or(kExp, "light_traffic_factor", s.light_traffic_factor);
    rep = run_stationary(ladder_from_config(cfg), s, opt);
  } else if (command == "sojourn") {
    SojournSettings s;
    s.b = cfg.number_or(kExp, "b", s.b);
    s.tags = count(cfg, "tags", s.tags, reps);
    s.horizon_factor = cfg.number_or(kExp, "horizon_factor", s.horizon_factor);
    s.ks_threshold = cfg.number_or(kExp, "ks_threshold", s.ks_threshold);
    s.ks_threshold_stationary = cfg.number_or(kExp, "ks_threshold_stationary", s.ks_threshold_stationary);
    s.stationary_mode = flag_or(cfg, "stationary_mode", s.stationary_mode);
    s.warmup = cfg.number_or(kExp, "warmup", s.warmup);
    s.spacing = cfg.number_or(kExp, "spacing", s.spacing);
    s.chains = count(cfg, "chains", s.chains, 0);
    s.s_grid = cfg.numbers_or(kExp, "s_grid", s.s_grid);
    rep = run_sojourn(ladder_from_config(cfg), s, opt);
  } else if (command == "hitting") {
    HittingSettings s;
    s.phi_grid = ints_or(cfg, "phi_grid", s.phi_grid);
    s.delta = cfg.number_or(kExp, "delta", s.delta);
    s.t = cfg.number_or(kExp, "t", s.t);
    s.start_multiple = cfg.number_or(kExp, "start_multiple", s.start_multiple);
    s.reps = count(cfg, "reps", s.reps, reps);
    rep = run_hitting(network_from_config(cfg), s, opt);
  } else if (command == "martingale-check") {
    MartingaleSettings s;
    if (cfg.has(kExp, "generators")) {
      const auto& gens = cfg.at(kExp, "generators");
      if (!gens.is_array() || gens.empty()) throw Error(ErrorCode::Config, "[experiment] generators must be a list");
      for (const auto& g : gens) s.generators.push_back(matrix_profile(g, "[experiment] generators"));
    } else {
      s.generators.push_back(mobility_from_config(cfg));
    }
    s.users = cfg.integer_or(kExp, "users", s.users);
    s.c_grid = cfg.numbers_or(kExp, "c_grid", s.c_grid);
    s.t_grid = cfg.numbers_or(kExp, "t_grid", s.t_grid);
    s.reps = count(cfg, "reps", s.reps, reps);
    s.quad_tol = cfg.number_or(kExp, "quad_tol", s.quad_tol);
    s.homogeneity_draws = count(cfg, "homogeneity_draws", s.homogeneity_draws, 0);
    s.homogeneity_max_K = static_cast<int>(cfg.integer_or(kExp, "homogeneity_max_K", s.homogeneity_max_K));
    s.integrability_c_grid = cfg.numbers_or(kExp, "integrability_c_grid", s.integrability_c_grid);
    s.entropy_draws = count(cfg, "entropy_draws", s.entropy_draws, 0);
    rep = run_martingale_check(s, opt);
  } else if (command == "reference") {
    ReferenceSettings s;
    s.lambda_limit = cfg.number_or(kExp, "lambda", s.lambda_limit);
    s.alphas = cfg.numbers_or(kExp, "alphas", s.alphas);
    s.t_grid = cfg.numbers_or(kExp, "t_grid", s.t_grid);
    s.x_grid = cfg.numbers_or(kExp, "x_grid", s.x_grid);
    s.paths = count(cfg, "paths", s.paths, reps);
    s.abs_slack = cfg.number_or(kExp, "abs_slack", s.abs_slack);
    s.poisson_u = cfg.numbers_or(kExp, "poisson_u", s.poisson_u);
    s.poisson_ratio = cfg.numbers_or(kExp, "poisson_ratio", s.poisson_ratio);
    rep = run_reference_laws(s, opt);
  } else {
    throw Error(ErrorCode::Config, "unknown experiment " + command);
  }
  rep.seed = opt.seed;
  rep.config_echo = cfg.echo();
  return rep;
}

}  // namespace mobnet
