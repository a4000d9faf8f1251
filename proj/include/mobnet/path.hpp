#pragma once

// Piecewise-constant cadlag paths and the functional operators used on them:
// reflection above the past infimum, level hitting times, zero times, the
// stop/shift excursion map and its left endpoint, and heavy-traffic scaling.
//
// All norms are L1. Since paths only jump at event times, every hitting time
// below is an event time and no root finding is involved.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mobnet/mobility.hpp"

namespace mobnet {

enum class StopReason { None, ZeroHit, Horizon };

struct StopMarker {
  StopReason reason = StopReason::None;
  double time = 0.0;

  friend bool operator==(const StopMarker&, const StopMarker&) = default;
};

class StatePath {
 public:
  StatePath() = default;
  StatePath(int dim, double horizon);

  int dim() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  double horizon() const { return horizon_; }
  void set_horizon(double h) { horizon_ = h; }

  // Appends an event. Times must be nondecreasing; an event at the same time
  // as the last one replaces its state.
  void push(double t, std::span<const double> state);
  void push_scalar(double t, double value);
  void reserve(std::size_t events);

  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> state(std::size_t i) const {
    return {values_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  double value(std::size_t i, int coord = 0) const {
    return values_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(coord)];
  }
  double norm(std::size_t i) const;

  // Index of the last event at or before t (0 for t before the first event).
  std::size_t index_at(double t) const;
  std::span<const double> at(double t) const { return state(index_at(t)); }
  double norm_at(double t) const { return norm(index_at(t)); }

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

  StopMarker stop;

  friend bool operator==(const StatePath&, const StatePath&) = default;

 private:
  int dim_ = 1;
  double horizon_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

// f(t) - min(inf_{s<=t} f(s), 0) for a scalar path.
StatePath reflect(const StatePath& f);

// T-up(f, eps) = inf{t : |f(t)| >= eps}.
std::optional<double> first_hit_above(const StatePath& f, double eps);
std::optional<std::size_t> first_hit_above_index(const StatePath& f, double eps, std::size_t from = 0);

// T-down(f, eps) = inf{t : |f(t)| <= eps}.
std::optional<double> first_hit_below(const StatePath& f, double eps);

// T0(f) = inf{t > 0 : |f(t)| = 0}. A path that is 0 at time 0 is 0 on a right
// neighbourhood of 0, so T0 = 0 for it.
std::optional<double> zero_hit(const StatePath& f);

// min over coordinates k of T0(f_k).
std::optional<double> all_coords_positive_until(const StatePath& f);

// theta_t: the path seen from time t on, re-based to start at 0.
StatePath shift(const StatePath& f, double t);

// sigma: the path frozen at its first zero time T0 (marker ZeroHit), or left
// running to the horizon (marker Horizon) if it never vanishes.
StatePath stop_at_zero(const StatePath& f);

// e-up_eps(f) = sigma(theta_{T-up(f, eps)} f). Throws LevelNeverReached.
StatePath excursion_above(const StatePath& f, double eps);

// g_eps(f) = sup{t <= T-up(f, eps) : |f(t)| = 0}: the time the path last
// leaves 0 before reaching eps. 0 when there is no earlier zero.
double excursion_left_endpoint(const StatePath& f, double eps);

struct ExcursionRecord {
  double g_eps = 0.0;
  double t_up = 0.0;
  double t0_after = std::numeric_limits<double>::infinity();  // absolute time; inf if censored
  double max_height = 0.0;
  bool complete = false;
};

// Successive excursions of |f| reaching eps, in time order.
std::vector<ExcursionRecord> excursion_inventory(const StatePath& f, double eps);

// X_n(t) = x_n(n^2 t) / n as a lazy view over the base path.
class ScaledPath {
 public:
  ScaledPath(const StatePath& base, int n);

  const StatePath& base() const { return *base_; }
  int n() const { return n_; }
  int dim() const { return base_->dim(); }
  double horizon() const { return base_->horizon() / time_factor(); }
  double time_factor() const { return static_cast<double>(n_) * n_; }

  std::vector<double> at(double t) const;
  double norm_at(double t) const;

  // Copy with times divided by n^2 and values by n.
  StatePath materialize() const;

 private:
  const StatePath* base_;
  int n_;
};

ScaledPath rescale(const StatePath& base, int n);

// R_n: X_n / |X_n|, with the convention R_n = pi at empty states.
StatePath scaled_ratio(const ScaledPath& X, const Vector& pi);

// max over grid of || X(t) - pi |X(t)| ||_1. Throws EmptyGrid.
double collapse_gap(const ScaledPath& X, const Vector& pi, std::span<const double> grid);

double max_norm(const StatePath& f);

}  // namespace mobnet
