#include "mobnet/network.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "mobnet/error.hpp"
#include "mobnet/parallel.hpp"

namespace mobnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t total_of(std::span<const std::int64_t> y) {
  return std::accumulate(y.begin(), y.end(), std::int64_t{0});
}

void check_state(const NetworkParams& params, std::span<const std::int64_t> y) {
  if (static_cast<int>(y.size()) != params.K()) {
    throw Error(ErrorCode::DimensionMismatch, "state length differs from node count");
  }
  for (auto v : y)
    if (v < 0) throw Error(ErrorCode::InvalidArgument, "negative user count");
}

struct Jump {
  EventType type = EventType::Arrival;
  int from = -1;
  int to = -1;
};

int pick_destination(const Matrix& Q, int k, double u);

// Picks the jump selected by x in [0, rate) in the fixed order arrivals,
// departures, moves. Rounding can leave x past the last bucket; the last
// admissible jump is returned then.
Jump select_jump(const NetworkParams& p, std::span<const std::int64_t> y, double x) {
  const int K = p.K();
  Jump last;
  for (int k = 0; k < K; ++k) {
    const double r = p.lambda_k[k];
    if (r <= 0.0) continue;
    last = {EventType::Arrival, -1, k};
    if (x < r) return last;
    x -= r;
  }
  for (int k = 0; k < K; ++k) {
    const double r = p.mu_k[k];
    if (y[k] == 0 || r <= 0.0) continue;
    last = {EventType::Departure, k, -1};
    if (x < r) return last;
    x -= r;
  }
  const Matrix& Q = p.mobility.Q;
  int last_mover = -1;
  for (int k = 0; k < K; ++k) {
    if (y[k] == 0) continue;
    const double r = static_cast<double>(y[k]) * -Q(k, k);
    last_mover = k;
    if (x < r) return {EventType::Move, k, pick_destination(Q, k, x / r)};
    x -= r;
  }
  if (last_mover >= 0) return {EventType::Move, last_mover, pick_destination(Q, last_mover, 1.0)};
  return last;
}

void apply_jump(std::vector<std::int64_t>& y, const Jump& j) {
  if (j.from >= 0) --y[j.from];
  if (j.to >= 0) ++y[j.to];
}

std::vector<double> as_double(std::span<const std::int64_t> y) {
  return std::vector<double>(y.begin(), y.end());
}

int pick_destination(const Matrix& Q, int k, double u) {
  const int K = static_cast<int>(Q.rows());
  double w = u * -Q(k, k);
  int dest = -1;
  for (int l = 0; l < K; ++l) {
    if (l == k || Q(k, l) <= 0.0) continue;
    dest = l;
    if (w < Q(k, l)) break;
    w -= Q(k, l);
  }
  return dest;
}

}  // namespace

NetworkParams NetworkParams::make(MobilityProfile mobility, std::vector<double> lambda_k,
                                  std::vector<double> mu_k, double kappa) {
  const auto K = static_cast<std::size_t>(mobility.K);
  if (lambda_k.size() != K || mu_k.size() != K) {
    throw Error(ErrorCode::DimensionMismatch, "rate vectors must have one entry per node");
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (!(lambda_k[k] >= 0.0) || !(mu_k[k] >= 0.0) || !std::isfinite(lambda_k[k]) ||
        !std::isfinite(mu_k[k])) {
      throw Error(ErrorCode::InvalidParams, "rates must be finite and nonnegative");
    }
  }
  NetworkParams p;
  p.mobility = std::move(mobility);
  p.lambda_k = std::move(lambda_k);
  p.mu_k = std::move(mu_k);
  p.lambda_total = std::accumulate(p.lambda_k.begin(), p.lambda_k.end(), 0.0);
  p.mu_total = std::accumulate(p.mu_k.begin(), p.mu_k.end(), 0.0);
  if (p.mu_total > 0.0)
    p.rho = p.lambda_total / p.mu_total;
  else
    p.rho = p.lambda_total > 0.0 ? kInf : 0.0;
  const double sum = p.lambda_total + p.mu_total;
  p.kappa_bound = kappa > 0.0 ? kappa : sum;
  if (sum > p.kappa_bound * (1.0 + 1e-12)) {
    throw Error(ErrorCode::InvalidParams, "lambda + mu exceeds the declared bound kappa");
  }
  return p;
}

double total_rate(const NetworkParams& p, std::span<const std::int64_t> y) {
  double rate = p.lambda_total;
  for (int k = 0; k < p.K(); ++k) {
    if (y[k] > 0) rate += p.mu_k[k] + static_cast<double>(y[k]) * p.mobility.exit_rate(k);
  }
  return rate;
}

const char* to_string(EventType type) {
  switch (type) {
    case EventType::Arrival: return "arrival";
    case EventType::Departure: return "departure";
    case EventType::Move: return "move";
    case EventType::NullDeparture: return "null_departure";
  }
  return "?";
}

OpenRun simulate_open_run(const NetworkParams& params, const State& initial, double horizon,
                          Stream stream, const SimOptions& options) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::ZeroHorizon, "horizon must be > 0");
  check_state(params, initial);
  Stream clock = stream.child(Primitive::Clock);
  Stream choice = stream.child(Primitive::Choice);

  OpenRun run;
  run.path = StatePath(params.K(), horizon);
  std::vector<std::int64_t> y = initial;
  run.path.push(0.0, as_double(y));
  std::vector<double> buf(y.size());
  double t = 0.0;
  for (;;) {
    const double rate = total_rate(params, y);
    if (rate <= 0.0) break;
    t += clock.exponential(rate);
    if (t > horizon) break;
    if (++run.event_count > options.max_events) {
      throw Error(ErrorCode::EventBudgetExceeded, "event budget exhausted");
    }
    if (options.observer) options.observer(y, rate);
    const Jump j = select_jump(params, y, choice.uniform() * rate);
    apply_jump(y, j);
    if (options.record_events) run.events.push_back({t, j.type, j.from, j.to});
    std::copy(y.begin(), y.end(), buf.begin());
    run.path.push(t, buf);
  }
  run.path.stop = {StopReason::Horizon, horizon};
  return run;
}

StatePath simulate_open(const NetworkParams& params, const State& initial, double horizon,
                        Stream stream, const SimOptions& options) {
  return simulate_open_run(params, initial, horizon, stream, options).path;
}

// ---------------------------------------------------------------- coupling

namespace {

struct User {
  int node = 0;
  bool in_open = true;
  bool initial = false;
  std::uint32_t slot = 0;  // position in its node's open list
  double next_move = kInf;
  Stream mobility;
};

using MoveClock = std::pair<double, std::uint32_t>;

}  // namespace

CouplingBundle simulate_coupled(const NetworkParams& params, const State& initial, double horizon,
                                Stream stream, std::uint64_t max_events) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::ZeroHorizon, "horizon must be > 0");
  check_state(params, initial);
  const int K = params.K();
  const Matrix& Q = params.mobility.Q;

  CouplingBundle b;
  b.initial = initial;
  b.seed = stream.seed();
  b.stream_id = stream.id();
  b.open_path = StatePath(K, horizon);
  b.closed_path = StatePath(K, horizon);
  b.walk_path = StatePath(1, horizon);
  b.arrival_events.resize(K);
  b.departure_events.resize(K);

  std::vector<Stream> arrivals, departures;
  std::vector<double> next_arrival(K, kInf), next_departure(K, kInf);
  for (int k = 0; k < K; ++k) {
    arrivals.push_back(stream.child(Primitive::Arrival, k));
    departures.push_back(stream.child(Primitive::Departure, k));
    if (params.lambda_k[k] > 0.0) next_arrival[k] = arrivals[k].exponential(params.lambda_k[k]);
    if (params.mu_k[k] > 0.0) next_departure[k] = departures[k].exponential(params.mu_k[k]);
  }
  Stream choice = stream.child(Primitive::Choice);

  std::vector<User> users;
  std::vector<std::vector<std::uint32_t>> open_lists(K);
  std::priority_queue<MoveClock, std::vector<MoveClock>, std::greater<>> clocks;
  std::vector<std::int64_t> x(K, 0), xc(K, 0);

  auto add_user = [&](int node, double t, bool is_initial) {
    const auto id = static_cast<std::uint32_t>(users.size());
    User u;
    u.node = node;
    u.initial = is_initial;
    u.mobility = stream.child(Primitive::Mobility, id);
    u.slot = static_cast<std::uint32_t>(open_lists[node].size());
    u.next_move = t + u.mobility.exponential(-Q(node, node));
    open_lists[node].push_back(id);
    clocks.push({u.next_move, id});
    users.push_back(std::move(u));
    ++x[node];
    if (is_initial) ++xc[node];
  };
  auto remove_from_open = [&](std::uint32_t id) {
    User& u = users[id];
    auto& list = open_lists[u.node];
    const std::uint32_t moved = list.back();
    list[u.slot] = moved;
    users[moved].slot = u.slot;
    list.pop_back();
    u.in_open = false;
    --x[u.node];
  };

  for (int k = 0; k < K; ++k)
    for (std::int64_t i = 0; i < initial[k]; ++i) add_user(k, 0.0, true);

  const auto y_total = total_of(initial);
  std::int64_t walk = y_total;
  std::vector<double> buf(K);
  auto record = [&](double t) {
    std::copy(x.begin(), x.end(), buf.begin());
    b.open_path.push(t, buf);
    std::copy(xc.begin(), xc.end(), buf.begin());
    b.closed_path.push(t, buf);
    b.walk_path.push_scalar(t, static_cast<double>(walk));
  };
  record(0.0);

  for (;;) {
    while (!clocks.empty()) {
      const User& u = users[clocks.top().second];
      if (u.in_open || u.initial) break;
      clocks.pop();  // arrived user who has left: its clock is dead
    }
    double t = kInf;
    int kind = -1;  // 0 arrival, 1 departure, 2 move
    int node = -1;
    for (int k = 0; k < K; ++k) {
      if (next_arrival[k] < t) {
        t = next_arrival[k];
        kind = 0;
        node = k;
      }
      if (next_departure[k] < t) {
        t = next_departure[k];
        kind = 1;
        node = k;
      }
    }
    if (!clocks.empty() && clocks.top().first < t) {
      t = clocks.top().first;
      kind = 2;
    }
    if (kind < 0 || t > horizon) break;
    if (++b.event_count > max_events) {
      throw Error(ErrorCode::EventBudgetExceeded, "event budget exhausted");
    }

    if (kind == 0) {
      b.arrival_events[node].push_back(t);
      next_arrival[node] = t + arrivals[node].exponential(params.lambda_k[node]);
      add_user(node, t, false);
      ++walk;
    } else if (kind == 1) {
      b.departure_events[node].push_back(t);
      next_departure[node] = t + departures[node].exponential(params.mu_k[node]);
      --walk;
      auto& list = open_lists[node];
      if (!list.empty()) remove_from_open(list[choice.below(list.size())]);
    } else {
      const std::uint32_t id = clocks.top().second;
      clocks.pop();
      User& u = users[id];
      const int from = u.node;
      const int to = pick_destination(Q, from, u.mobility.uniform());
      if (u.in_open) {
        auto& list = open_lists[from];
        const std::uint32_t moved = list.back();
        list[u.slot] = moved;
        users[moved].slot = u.slot;
        list.pop_back();
        u.slot = static_cast<std::uint32_t>(open_lists[to].size());
        open_lists[to].push_back(id);
        --x[from];
        ++x[to];
      }
      if (u.initial) {
        --xc[from];
        ++xc[to];
      }
      u.node = to;
      u.next_move = t + u.mobility.exponential(-Q(to, to));
      clocks.push({u.next_move, id});
    }
    record(t);
  }
  b.open_path.stop = {StopReason::Horizon, horizon};
  b.closed_path.stop = b.open_path.stop;
  b.walk_path.stop = b.open_path.stop;
  b.mm1_path = reflect(b.walk_path);
  b.mm1_path.stop = b.open_path.stop;
  return b;
}

CouplingCheck check_coupling(const CouplingBundle& b, const Vector& pi) {
  CouplingCheck out;
  const int K = b.open_path.dim();
  auto fail = [&](bool ok, double t, const char* what) {
    ++out.assertions;
    if (!ok) {
      if (out.violations == 0) out.first_violation = fmt::format("{} at t = {}", what, t);
      ++out.violations;
    }
  };

  std::vector<double> arr, dep;
  for (const auto& v : b.arrival_events) arr.insert(arr.end(), v.begin(), v.end());
  for (const auto& v : b.departure_events) dep.insert(dep.end(), v.begin(), v.end());
  std::sort(arr.begin(), arr.end());
  std::sort(dep.begin(), dep.end());
  auto count_upto = [](const std::vector<double>& v, double t) {
    return static_cast<double>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
  };

  const double y_total = static_cast<double>(total_of(b.initial));
  const double t_tilde = all_coords_positive_until(b.open_path).value_or(kInf);
  double running_inf = 0.0;
  std::vector<double> r(K), rc(K);
  for (std::size_t i = 0; i < b.open_path.size(); ++i) {
    const double t = b.open_path.time(i);
    const auto x = b.open_path.at(t);
    const auto xc = b.closed_path.at(t);
    const double walk = b.walk_path.at(t)[0];
    const double ell = b.mm1_path.at(t)[0];
    const double a = count_upto(arr, t);
    const double d = count_upto(dep, t);
    running_inf = std::min(running_inf, walk);

    double nx = 0.0, nxc = 0.0;
    for (int k = 0; k < K; ++k) {
      nx += x[k];
      nxc += xc[k];
    }
    fail(walk == y_total + a - d, t, "free walk differs from |y| + a - d");
    fail(ell == walk - running_inf, t, "M/M/1 path is not the reflected walk");
    fail(nx >= ell, t, "|x| < l");
    if (t <= t_tilde) fail(nx == ell, t, "|x| != l before a node empties");
    fail(nxc == y_total, t, "closed system lost users");
    for (int k = 0; k < K; ++k) {
      fail(x[k] >= 0.0 && xc[k] >= 0.0, t, "negative count");
      fail(-d <= x[k] - xc[k] && x[k] - xc[k] <= a, t, "node coupling bound");
    }
    fail(-d <= nx - nxc && nx - nxc <= a, t, "total coupling bound");
    if (y_total > 0.0) {
      double dist = 0.0;
      for (int k = 0; k < K; ++k) {
        const double rk = nx > 0.0 ? x[k] / nx : pi(k);
        dist += std::abs(rk - xc[k] / nxc);
      }
      fail(dist <= 2.0 * K * (a + d) / y_total + 1e-12, t, "ratio drift bound");
    }
  }
  return out;
}

// ------------------------------------------------------------ tagged user

double TaggedUserRecord::service_at(double t) const {
  const auto& ts = service_curve.times();
  if (ts.empty()) return 0.0;
  if (t <= ts.front()) return service_curve.value(0);
  const std::size_t i = service_curve.index_at(t);
  if (i + 1 >= ts.size()) return service_curve.value(i);
  const double w = (t - ts[i]) / (ts[i + 1] - ts[i]);
  return service_curve.value(i) + w * (service_curve.value(i + 1) - service_curve.value(i));
}

TaggedRun simulate_tagged(const NetworkParams& params, const State& initial, int tagged_node,
                          double horizon, Stream stream, std::uint64_t max_events) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::ZeroHorizon, "horizon must be > 0");
  check_state(params, initial);
  const int K = params.K();
  if (tagged_node < 0 || tagged_node >= K || initial[tagged_node] < 1) {
    throw Error(ErrorCode::EmptyTagNode, "tagged node holds no user");
  }
  const Matrix& Q = params.mobility.Q;
  Stream clock = stream.child(Primitive::Clock);
  Stream choice = stream.child(Primitive::Choice);
  Stream requirement = stream.child(Primitive::Requirement);

  TaggedRun run;
  run.path = StatePath(K, horizon);
  auto& rec = run.record;
  rec.tagged_node = tagged_node;
  rec.requirement = requirement.exponential(1.0);
  rec.trajectory = StatePath(1, horizon);
  rec.service_curve = StatePath(1, horizon);

  std::vector<std::int64_t> y = initial;
  int j = tagged_node;
  double t = 0.0;
  double s = 0.0;
  run.path.push(0.0, as_double(y));
  rec.trajectory.push_scalar(0.0, j);
  rec.service_curve.push_scalar(0.0, 0.0);
  std::vector<double> buf(K);
  std::uint64_t events = 0;

  for (;;) {
    // Other users leave node k at rate mu_k (y_k - [k == j]) / y_k.
    double rate = params.lambda_total;
    for (int k = 0; k < K; ++k) {
      if (y[k] == 0) continue;
      const double others = static_cast<double>(y[k] - (k == j ? 1 : 0));
      rate += params.mu_k[k] * others / static_cast<double>(y[k]);
      rate += static_cast<double>(y[k]) * -Q(k, k);
    }
    const double slope = params.mu_k[j] / static_cast<double>(y[j]);
    const double dt = rate > 0.0 ? clock.exponential(rate) : kInf;
    const double finish = slope > 0.0 ? (rec.requirement - s) / slope : kInf;

    if (std::min(dt, finish) > horizon - t) {
      s += slope * (horizon - t);
      rec.service_curve.push_scalar(horizon, s);
      break;
    }
    if (finish <= dt) {
      t += finish;
      s = rec.requirement;
      rec.sojourn = t;
      rec.service_curve.push_scalar(t, s);
      --y[j];
      std::copy(y.begin(), y.end(), buf.begin());
      run.path.push(t, buf);
      break;
    }
    if (++events > max_events) throw Error(ErrorCode::EventBudgetExceeded, "event budget exhausted");
    t += dt;
    s += slope * dt;

    double x = choice.uniform() * rate;
    bool done = false;
    for (int k = 0; k < K && !done; ++k) {
      const double r = params.lambda_k[k];
      if (r <= 0.0) continue;
      if (x < r) {
        ++y[k];
        done = true;
      } else {
        x -= r;
      }
    }
    for (int k = 0; k < K && !done; ++k) {
      if (y[k] == 0) continue;
      const double r = params.mu_k[k] * static_cast<double>(y[k] - (k == j ? 1 : 0)) /
                       static_cast<double>(y[k]);
      if (r <= 0.0) continue;
      if (x < r) {
        --y[k];
        done = true;
      } else {
        x -= r;
      }
    }
    int last_node = -1;
    for (int k = 0; k < K && !done; ++k) {
      if (y[k] == 0) continue;
      last_node = k;
      const double r = static_cast<double>(y[k]) * -Q(k, k);
      if (x < r || k == K - 1) {
        done = true;
        const int to = pick_destination(Q, k, choice.uniform());
        const bool tag_moves = k == j && choice.below(static_cast<std::uint64_t>(y[k])) == 0;
        --y[k];
        ++y[to];
        if (tag_moves) {
          j = to;
          rec.trajectory.push_scalar(t, j);
        }
      } else {
        x -= r;
      }
    }
    if (!done && last_node >= 0) {
      // Rounding past the last bucket: treat as a move from the last occupied node.
      const int k = last_node;
      const int to = pick_destination(Q, k, choice.uniform());
      const bool tag_moves = k == j && choice.below(static_cast<std::uint64_t>(y[k])) == 0;
      --y[k];
      ++y[to];
      if (tag_moves) {
        j = to;
        rec.trajectory.push_scalar(t, j);
      }
    }
    rec.service_curve.push_scalar(t, s);
    std::copy(y.begin(), y.end(), buf.begin());
    run.path.push(t, buf);
  }
  const double end = rec.sojourn.value_or(horizon);
  run.path.stop = {rec.sojourn ? StopReason::ZeroHit : StopReason::Horizon, end};
  rec.trajectory.set_horizon(end);
  rec.service_curve.set_horizon(end);
  return run;
}

// ------------------------------------------------------------ stationary

std::uint64_t StationarySample::total_cycles() const {
  std::uint64_t n = 0;
  for (const auto& b : batches) n += b.cycles;
  return n;
}

namespace {

CycleBatch run_cycle_batch(const NetworkParams& params, std::uint64_t cycles, Stream stream,
                           const StationaryOptions& opt) {
  const int K = params.K();
  CycleBatch b;
  b.moment_time.assign(static_cast<std::size_t>(opt.r_max) + 1, 0.0);
  b.level_time.assign(static_cast<std::size_t>(opt.max_level) + 1, 0.0);
  b.boundary_time.assign(static_cast<std::size_t>(opt.max_level + 1) * K, 0.0);

  Stream rng = stream.child(Primitive::Clock);
  std::vector<std::int64_t> y(K, 0);
  std::int64_t total = 0;
  std::uint64_t events = 0;
  while (b.cycles < cycles) {
    const double rate = total_rate(params, y);
    const double dt = rng.exponential(rate);
    b.length += dt;
    double power = 1.0;
    const auto m = static_cast<double>(total);
    for (int r = 0; r <= opt.r_max; ++r) {
      b.moment_time[r] += dt * power;
      power *= m;
    }
    if (total <= opt.max_level) {
      b.level_time[total] += dt;
      double* row = b.boundary_time.data() + total * K;
      for (int k = 0; k < K; ++k)
        if (y[k] == 0) row[k] += dt;
    } else {
      b.overflow_time += dt;
    }
    if (++events > opt.max_events_per_batch) {
      throw Error(ErrorCode::CycleBudgetExceeded, "cycle batch exceeded its event budget");
    }
    const Jump j = select_jump(params, y, rng.uniform() * rate);
    apply_jump(y, j);
    total += (j.to >= 0 ? 1 : 0) - (j.from >= 0 ? 1 : 0);
    if (total == 0) ++b.cycles;
  }
  return b;
}

}  // namespace

StationarySample sample_stationary(const NetworkParams& params, std::uint64_t cycles,
                                   Stream stream, const StationaryOptions& opt) {
  if (!(params.rho < 1.0)) throw Error(ErrorCode::UnstableParams, "stationary sampling needs rho < 1");
  if (cycles == 0 || opt.batch_cycles == 0) throw Error(ErrorCode::InvalidArgument, "need cycles > 0");
  if (opt.max_level < 1 || opt.r_max < 0) throw Error(ErrorCode::InvalidArgument, "bad level caps");
  StationarySample s;
  s.K = params.K();
  s.max_level = opt.max_level;
  s.r_max = opt.r_max;
  const std::uint64_t nb = (cycles + opt.batch_cycles - 1) / opt.batch_cycles;

  if (params.lambda_total == 0.0) {
    // Empty state is absorbing: one unit of time per nominal cycle, all at level 0.
    for (std::uint64_t i = 0; i < nb; ++i) {
      CycleBatch b;
      b.cycles = opt.batch_cycles;
      b.length = static_cast<double>(opt.batch_cycles);
      b.moment_time.assign(static_cast<std::size_t>(opt.r_max) + 1, 0.0);
      b.moment_time[0] = b.length;
      b.level_time.assign(static_cast<std::size_t>(opt.max_level) + 1, 0.0);
      b.level_time[0] = b.length;
      b.boundary_time.assign(static_cast<std::size_t>(opt.max_level + 1) * s.K, 0.0);
      for (int k = 0; k < s.K; ++k) b.boundary_time[k] = b.length;
      s.batches.push_back(std::move(b));
    }
    return s;
  }

  s.batches = replicate(nb, opt.threads, [&](std::size_t i) {
    return run_cycle_batch(params, opt.batch_cycles, stream.child(static_cast<std::uint64_t>(i)), opt);
  });
  return s;
}

RatioEstimate ratio_estimate(std::span<const double> reward, std::span<const double> length) {
  if (reward.size() != length.size()) throw Error(ErrorCode::DimensionMismatch, "batch counts differ");
  const std::size_t B = reward.size();
  if (B < 2) throw Error(ErrorCode::InsufficientCycles, "need at least two batches");
  double sr = 0.0, sl = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    sr += reward[i];
    sl += length[i];
  }
  RatioEstimate e;
  e.value = sr / sl;
  const double mean_len = sl / static_cast<double>(B);
  double ss = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const double z = reward[i] - e.value * length[i];
    ss += z * z;
  }
  e.se = std::sqrt(ss / (static_cast<double>(B) * static_cast<double>(B - 1))) / mean_len;
  return e;
}

namespace {

template <class Fn>
RatioEstimate batch_ratio(const StationarySample& s, Fn&& reward_of) {
  std::vector<double> reward, length;
  reward.reserve(s.batches.size());
  length.reserve(s.batches.size());
  for (const auto& b : s.batches) {
    reward.push_back(reward_of(b));
    length.push_back(b.length);
  }
  return ratio_estimate(reward, length);
}

void check_level(const StationarySample& s, int m) {
  if (m < 0 || m > s.max_level) throw Error(ErrorCode::InvalidArgument, "level outside recorded range");
}

}  // namespace

RatioEstimate level_probability(const StationarySample& s, int m) {
  check_level(s, m);
  return batch_ratio(s, [m](const CycleBatch& b) { return b.level_time[m]; });
}

RatioEstimate tail_probability(const StationarySample& s, int q) {
  check_level(s, q);
  return batch_ratio(s, [q](const CycleBatch& b) {
    double below = 0.0;
    for (int m = 0; m < q; ++m) below += b.level_time[m];
    return b.length - below;
  });
}

RatioEstimate boundary_probability(const StationarySample& s, int m, int k) {
  check_level(s, m);
  return batch_ratio(s, [&](const CycleBatch& b) { return b.boundary_time[m * s.K + k]; });
}

RatioEstimate boundary_tail_probability(const StationarySample& s, int q, int k) {
  check_level(s, q);
  return batch_ratio(s, [&](const CycleBatch& b) {
    double sum = 0.0;
    for (int m = q; m <= s.max_level; ++m) sum += b.boundary_time[m * s.K + k];
    return sum;
  });
}

RatioEstimate stationary_moment(const StationarySample& s, int r) {
  if (r < 0 || r > s.r_max) throw Error(ErrorCode::InvalidArgument, "moment order not recorded");
  return batch_ratio(s, [r](const CycleBatch& b) { return b.moment_time[r]; });
}

BalanceResidual check_balance_identity(const StationarySample& s, const NetworkParams& params, int m) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "balance level must be >= 1");
  check_level(s, m);
  if (s.batches.size() < 2) throw Error(ErrorCode::InsufficientCycles, "need at least two batches");
  BalanceResidual out;
  out.level = m;
  double seen = 0.0;
  for (const auto& b : s.batches) seen += b.level_time[m] + b.level_time[m - 1];
  if (seen == 0.0) {
    out.insufficient = true;
    return out;
  }
  const auto e = batch_ratio(s, [&](const CycleBatch& b) {
    double v = params.lambda_total * b.level_time[m - 1] - params.mu_total * b.level_time[m];
    for (int k = 0; k < s.K; ++k) v += params.mu_k[k] * b.boundary_time[m * s.K + k];
    return v;
  });
  out.residual = e.value;
  out.se = e.se;
  return out;
}

std::vector<State> stationary_snapshots(const NetworkParams& params, std::size_t count,
                                        double warmup, double spacing, Stream stream) {
  if (!(spacing > 0.0) || !(warmup >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bad snapshot times");
  const int K = params.K();
  Stream rng = stream.child(Primitive::Sampling);
  std::vector<State> out;
  out.reserve(count);
  std::vector<std::int64_t> y(K, 0);
  double t = 0.0;
  double next_snapshot = warmup;
  while (out.size() < count) {
    const double rate = total_rate(params, y);
    const double dt = rate > 0.0 ? rng.exponential(rate) : kInf;
    while (out.size() < count && t + dt > next_snapshot) {
      out.push_back(y);
      next_snapshot += spacing;
    }
    if (out.size() == count) break;
    t += dt;
    apply_jump(y, select_jump(params, y, rng.uniform() * rate));
  }
  return out;
}

State proportional_state(const Vector& pi, std::int64_t total) {
  const auto K = static_cast<std::size_t>(pi.size());
  State y(K);
  std::vector<std::pair<double, std::size_t>> frac;
  std::int64_t used = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const double target = static_cast<double>(total) * pi(static_cast<Eigen::Index>(k));
    y[k] = static_cast<std::int64_t>(std::floor(target));
    used += y[k];
    frac.emplace_back(target - std::floor(target), k);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < total; ++i, ++used) ++y[frac[i % K].second];
  return y;
}

std::string path_csv(const StatePath& path, std::span<const double> grid) {
  std::string out = "t";
  for (int k = 0; k < path.dim(); ++k) out += fmt::format(",x_{}", k + 1);
  out += '\n';
  for (double t : grid) {
    out += fmt::format("{}", t);
    for (double v : path.at(t)) out += fmt::format(",{}", v);
    out += '\n';
  }
  return out;
}

std::string event_log_csv(std::span<const EventRecord> events) {
  std::string out = "t,event_type,node_from,node_to\n";
  for (const auto& e : events) {
    out += fmt::format("{},{},{},{}\n", e.t, to_string(e.type), e.from >= 0 ? e.from + 1 : 0,
                       e.to >= 0 ? e.to + 1 : 0);
  }
  return out;
}

}  // namespace mobnet
