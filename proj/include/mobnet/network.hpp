#pragma once

// Exact simulation of the open network with mobile users.
//
// Users arrive at node k at rate lambda_k, node k serves its users in
// Processor-Sharing with capacity mu_k, and every user moves independently
// according to the mobility generator Q. With unit-mean exponential
// requirements the queue-length process is the Markov chain with jumps
//   +e_k at rate lambda_k, -e_k at rate mu_k 1{y_k > 0}, -e_k + e_l at rate y_k q_kl.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobnet/mobility.hpp"
#include "mobnet/path.hpp"
#include "mobnet/rng.hpp"

namespace mobnet {

using State = std::vector<std::int64_t>;

struct NetworkParams {
  MobilityProfile mobility;
  std::vector<double> lambda_k;
  std::vector<double> mu_k;
  double lambda_total = 0.0;
  double mu_total = 0.0;
  double rho = 0.0;  // lambda/mu; +inf when mu = 0 < lambda, 0 when both vanish
  double kappa_bound = 0.0;

  int K() const { return mobility.K; }

  // Validates rates and fills the aggregates. kappa <= 0 means "use lambda + mu".
  static NetworkParams make(MobilityProfile mobility, std::vector<double> lambda_k,
                            std::vector<double> mu_k, double kappa = 0.0);
};

// Total jump rate out of y.
double total_rate(const NetworkParams& params, std::span<const std::int64_t> y);

enum class EventType : std::uint8_t { Arrival, Departure, Move, NullDeparture };
const char* to_string(EventType type);

struct EventRecord {
  double t = 0.0;
  EventType type = EventType::Arrival;
  int from = -1;  // node left (-1 for arrivals)
  int to = -1;    // node entered (-1 for departures)

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct SimOptions {
  std::uint64_t max_events = 1'000'000'000;
  bool record_events = false;
  // Called before every jump with the current state and the clock rate used.
  std::function<void(std::span<const std::int64_t>, double)> observer;
};

struct OpenRun {
  StatePath path;
  std::vector<EventRecord> events;
  std::uint64_t event_count = 0;
};

// Gillespie simulation of the open system on [0, horizon].
// Throws ZeroHorizon, EventBudgetExceeded, DimensionMismatch.
OpenRun simulate_open_run(const NetworkParams& params, const State& initial, double horizon,
                          Stream stream, const SimOptions& options = {});

StatePath simulate_open(const NetworkParams& params, const State& initial, double horizon,
                        Stream stream, const SimOptions& options = {});

// Open system, closed system, free walk and reflected walk built on one set
// of primitives: per-node Poisson arrival and potential-departure streams,
// and one mobility trajectory per user. A departure at node k removes a
// uniformly chosen user there (null event if the node is empty). The closed
// system holds the initial users only, and they keep moving after leaving.
struct CouplingBundle {
  State initial;
  StatePath open_path;
  StatePath closed_path;
  StatePath walk_path;  // |initial| + a(t) - d(t)
  StatePath mm1_path;   // reflection of walk_path
  std::vector<std::vector<double>> arrival_events;    // per node
  std::vector<std::vector<double>> departure_events;  // per node, potential departures
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t event_count = 0;

  friend bool operator==(const CouplingBundle&, const CouplingBundle&) = default;
};

CouplingBundle simulate_coupled(const NetworkParams& params, const State& initial, double horizon,
                                Stream stream, std::uint64_t max_events = 1'000'000'000);

struct CouplingCheck {
  std::uint64_t assertions = 0;
  std::uint64_t violations = 0;
  std::string first_violation;

  bool ok() const { return violations == 0; }
};

// Re-evaluates every pathwise coupling property at every event time.
CouplingCheck check_coupling(const CouplingBundle& bundle, const Vector& pi);

struct TaggedUserRecord {
  StatePath trajectory;     // node index of the tagged user (scalar path)
  StatePath service_curve;  // s(t) at its knots; linear in between
  double requirement = 0.0;
  std::optional<double> sojourn;
  int tagged_node = 0;

  // s(t) by linear interpolation between knots.
  double service_at(double t) const;
};

struct TaggedRun {
  StatePath path;
  TaggedUserRecord record;
};

// Open system with one marked initial user at tagged_node whose attained
// service is integrated exactly; the run stops when the tagged user leaves
// or at the horizon. Throws EmptyTagNode.
TaggedRun simulate_tagged(const NetworkParams& params, const State& initial, int tagged_node,
                          double horizon, Stream stream,
                          std::uint64_t max_events = 1'000'000'000);

// Regenerative aggregates of one batch of i.i.d. cycles started from 0.
struct CycleBatch {
  std::uint64_t cycles = 0;
  double length = 0.0;
  std::vector<double> moment_time;  // integral of |x|^r over the batch, r = 0..r_max
  std::vector<double> level_time;   // time at |x| = m, m = 0..max_level
  std::vector<double> boundary_time;  // time at (|x| = m, x_k = 0), index m*K + k
  double overflow_time = 0.0;       // time above max_level
};

struct StationaryOptions {
  std::uint64_t batch_cycles = 1000;
  int max_level = 64;
  int r_max = 3;
  std::uint64_t max_events_per_batch = 4'000'000'000ull;
  int threads = 0;
};

struct StationarySample {
  int K = 0;
  int max_level = 0;
  int r_max = 0;
  std::vector<CycleBatch> batches;

  std::uint64_t total_cycles() const;
};

// Runs `cycles` regeneration cycles (rounded up to whole batches).
// Throws UnstableParams when rho >= 1 and CycleBudgetExceeded.
StationarySample sample_stationary(const NetworkParams& params, std::uint64_t cycles,
                                   Stream stream, const StationaryOptions& options = {});

struct RatioEstimate {
  double value = 0.0;
  double se = 0.0;
};

// Renewal-reward ratio with delta-method standard error over batches.
RatioEstimate ratio_estimate(std::span<const double> reward, std::span<const double> length);

RatioEstimate level_probability(const StationarySample& s, int m);
RatioEstimate tail_probability(const StationarySample& s, int q);  // P(|x| >= q)
RatioEstimate boundary_probability(const StationarySample& s, int m, int k);
RatioEstimate boundary_tail_probability(const StationarySample& s, int q, int k);  // P(|x| >= q, x_k = 0)
RatioEstimate stationary_moment(const StationarySample& s, int r);

struct BalanceResidual {
  int level = 0;
  double residual = 0.0;
  double se = 0.0;
  bool insufficient = false;
};

// lambda P(|x| = m-1) - mu P(|x| = m) + sum_k mu_k P(|x| = m, x_k = 0).
// Flags levels never visited as insufficient (residual 0, se 0). Throws
// InsufficientCycles with fewer than two batches.
BalanceResidual check_balance_identity(const StationarySample& s, const NetworkParams& params,
                                       int m);

// Snapshots of one long run: after `warmup`, one state every `spacing`.
std::vector<State> stationary_snapshots(const NetworkParams& params, std::size_t count,
                                        double warmup, double spacing, Stream stream);

// round(total * pi) with the remainder assigned to the largest fractional parts.
State proportional_state(const Vector& pi, std::int64_t total);

// Path sampled on a grid as CSV rows: t,x_1..x_K.
std::string path_csv(const StatePath& path, std::span<const double> grid);
std::string event_log_csv(std::span<const EventRecord> events);

}  // namespace mobnet
