#pragma once

// Experiment runners. Each one replicates simulations on independent streams,
// writes one row per replication into a "replications" table and then reduces
// that table alone into aggregates and verdicts, so reducing the emitted table
// again reproduces the report exactly.

#include <cstdint>
#include <vector>

#include "mobnet/config.hpp"
#include "mobnet/mobility.hpp"
#include "mobnet/network.hpp"
#include "mobnet/report.hpp"

namespace mobnet {

struct RunOptions {
  std::uint64_t seed = 1;
  int threads = 0;  // <= 0: OpenMP default
};

// Sequence of systems approaching heavy traffic:
//   rho_n = 1 - alpha/n, lambda_n = lambda (1 - alpha/(2n)), mu_n = lambda_n / rho_n,
// split over nodes by fixed weights.
struct HeavyTrafficLadder {
  MobilityProfile mobility;
  double lambda_limit = 1.0;
  double alpha = 1.0;
  std::vector<int> n_values;
  std::vector<double> arrival_weights;   // normalized
  std::vector<double> capacity_weights;  // normalized
  double kappa = 0.0;                    // sup_n (lambda_n + mu_n)
  std::vector<NetworkParams> params;     // one per n

  // Empty weights mean uniform. Throws InvalidParams (n <= alpha, bad weights,
  // non-increasing n).
  static HeavyTrafficLadder make(MobilityProfile mobility, double lambda_limit, double alpha,
                                 std::vector<int> n_values, std::vector<double> arrival_weights = {},
                                 std::vector<double> capacity_weights = {});

  const NetworkParams& at(std::size_t i) const { return params.at(i); }
};

HeavyTrafficLadder ladder_from_config(const Config& cfg);
MobilityProfile mobility_from_config(const Config& cfg);

// ----------------------------------------------------------------- mixing

ExperimentReport run_mixing(const MobilityProfile& profile, const std::vector<double>& eps_grid);

// --------------------------------------------------------- homogenization

struct HomogenizationSettings {
  std::vector<State> initial_states;
  std::vector<double> eps_grid;
  std::uint64_t reps = 1000;
};

ExperimentReport run_homogenization(const NetworkParams& params, const HomogenizationSettings& s,
                                    const RunOptions& opt);
ExperimentReport reduce_homogenization(const NetworkParams& params, const HomogenizationSettings& s,
                                       const Table& replications, std::uint64_t seed);

// --------------------------------------------------------- heavy traffic

struct HeavyTrafficSettings {
  std::vector<double> t_grid{0.5, 1.0};        // scaled times for the marginal KS
  std::vector<double> collapse_grid;           // scaled times for the collapse gap
  double eps_excursion = 0.5;
  double t_max = 3.0;                          // scaled horizon
  std::uint64_t reps = 2000;
  double ks_threshold = 0.05;
  double ks_time = 1.0;                        // grid time whose final-n KS gets a verdict
  double collapse_threshold = 0.1;
  double rbm_step = 0.0;                       // 0: t_max / 4096
};

ExperimentReport run_heavy_traffic(const HeavyTrafficLadder& ladder, const HeavyTrafficSettings& s,
                                   const RunOptions& opt);
ExperimentReport reduce_heavy_traffic(const HeavyTrafficLadder& ladder, const HeavyTrafficSettings& s,
                                      const Table& replications, const Table& reference,
                                      std::uint64_t seed);

// -------------------------------------------------------------- stationary

struct StationarySettings {
  std::uint64_t cycles = 100000;
  std::uint64_t batch_cycles = 1000;
  int r_max = 3;
  std::vector<int> moment_orders{1, 2};  // orders that get a verdict at the largest n
  double moment_rel_tol = 0.15;
  int geometric_q_max = 10;
  int balance_max_level = 10;
  std::size_t snapshots = 400;  // per n, for the homogeneity of stationary states
  double snapshot_spacing = 2.0;  // scaled time
  double light_traffic_factor = 1e-3;
};

ExperimentReport run_stationary(const HeavyTrafficLadder& ladder, const StationarySettings& s,
                                const RunOptions& opt);

// ----------------------------------------------------------------- sojourn

struct SojournSettings {
  double b = 1.0;
  std::uint64_t tags = 2000;
  double horizon_factor = 40.0;          // horizon n * factor * b / lambda (scaled units)
  double ks_threshold = 0.05;
  double ks_threshold_stationary = 0.07;
  bool stationary_mode = true;
  double warmup = 5.0;                   // scaled time
  double spacing = 2.0;                  // scaled time between snapshots
  std::size_t chains = 16;
  std::vector<double> s_grid{0.25, 0.5, 1.0, 2.0};  // scaled times for the S' diagnostic
};

ExperimentReport run_sojourn(const HeavyTrafficLadder& ladder, const SojournSettings& s,
                             const RunOptions& opt);

// ---------------------------------------------------------------- hitting

struct HittingSettings {
  std::vector<int> phi_grid{50, 100, 200, 400};
  double delta = 0.3;
  double t = 5.0;              // base time units
  double start_multiple = 2.0;  // |y| = start_multiple * phi
  std::uint64_t reps = 2000;
};

ExperimentReport run_hitting(const NetworkParams& params, const HittingSettings& s,
                             const RunOptions& opt);

// --------------------------------------------------------------- martingale

struct MartingaleSettings {
  std::vector<MobilityProfile> generators;  // K = 2 or 3
  std::int64_t users = 20;
  std::vector<double> c_grid{0.5, 1.0, 1.5};
  std::vector<double> t_grid{0.5, 1.0, 2.0};
  std::uint64_t reps = 10000;
  double quad_tol = 1e-10;
  std::size_t homogeneity_draws = 100;
  int homogeneity_max_K = 4;
  std::vector<double> integrability_c_grid{0.1, 0.25, 0.5, 0.75, 0.9};
  std::size_t entropy_draws = 10000;
};

ExperimentReport run_martingale_check(const MartingaleSettings& s, const RunOptions& opt);

// ---------------------------------------------------------- reference laws

struct ReferenceSettings {
  double lambda_limit = 1.0;
  std::vector<double> alphas{0.0, 1.0};
  std::vector<double> t_grid{0.25, 0.5, 1.0, 2.0};
  std::vector<double> x_grid{0.1, 0.5, 1.0, 2.0};
  std::uint64_t paths = 20000;
  double abs_slack = 2e-3;
  std::vector<double> poisson_u{0.5, 1.0, 5.0, 20.0, 100.0};
  std::vector<double> poisson_ratio{1.0, 1.2, 1.5, 2.0, 3.0, 5.0};
};

ExperimentReport run_reference_laws(const ReferenceSettings& s, const RunOptions& opt);

// ---------------------------------------------------------------- simulate

struct SimulateSettings {
  State initial;
  double horizon = 10.0;
  std::vector<double> grid;  // sampling times for the path CSV; empty: 101 points
  bool coupled = true;
  bool event_log = false;
};

ExperimentReport run_simulate(const NetworkParams& params, const SimulateSettings& s,
                              const RunOptions& opt);

}  // namespace mobnet

namespace mobnet {

// ------------------------------------------------------------ config glue

// Subcommand names accepted by run_from_config.
const std::vector<std::string>& experiment_commands();

// Network from [mobility] Q and [network] lambda_k, mu_k (optional kappa).
NetworkParams network_from_config(const Config& cfg);

// Reads the sections the subcommand needs and runs it. `reps` > 0 overrides
// the configured replication count. Throws Config naming the missing key.
ExperimentReport run_from_config(const std::string& command, const Config& cfg, const RunOptions& opt,
                                 std::uint64_t reps = 0);

}  // namespace mobnet
