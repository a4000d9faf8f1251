#include "mobnet/path.hpp"

#include <algorithm>
#include <cmath>

#include "mobnet/error.hpp"

namespace mobnet {

StatePath::StatePath(int dim, double horizon) : dim_(dim), horizon_(horizon) {
  if (dim < 1) throw Error(ErrorCode::DimensionMismatch, "path dimension must be >= 1");
}

void StatePath::reserve(std::size_t events) {
  times_.reserve(events);
  values_.reserve(events * static_cast<std::size_t>(dim_));
}

void StatePath::push(double t, std::span<const double> state) {
  if (state.size() != static_cast<std::size_t>(dim_)) {
    throw Error(ErrorCode::DimensionMismatch, "state length differs from path dimension");
  }
  if (!times_.empty()) {
    if (t < times_.back()) throw Error(ErrorCode::InvalidArgument, "event times must not decrease");
    if (t == times_.back()) {
      std::copy(state.begin(), state.end(), values_.end() - dim_);
      return;
    }
  }
  times_.push_back(t);
  values_.insert(values_.end(), state.begin(), state.end());
}

void StatePath::push_scalar(double t, double value) { push(t, std::span<const double>(&value, 1)); }

double StatePath::norm(std::size_t i) const {
  double s = 0.0;
  for (double v : state(i)) s += std::abs(v);
  return s;
}

std::size_t StatePath::index_at(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0;
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

StatePath reflect(const StatePath& f) {
  if (f.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "reflect needs a scalar path");
  StatePath out(1, f.horizon());
  out.reserve(f.size());
  double running_inf = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f.value(i);
    running_inf = std::min(running_inf, v);
    out.push_scalar(f.time(i), v - running_inf);
  }
  return out;
}

std::optional<std::size_t> first_hit_above_index(const StatePath& f, double eps, std::size_t from) {
  for (std::size_t i = from; i < f.size(); ++i)
    if (f.norm(i) >= eps) return i;
  return std::nullopt;
}

std::optional<double> first_hit_above(const StatePath& f, double eps) {
  if (auto i = first_hit_above_index(f, eps)) return f.time(*i);
  return std::nullopt;
}

std::optional<double> first_hit_below(const StatePath& f, double eps) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.norm(i) <= eps) return f.time(i);
  return std::nullopt;
}

std::optional<double> zero_hit(const StatePath& f) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.norm(i) == 0.0) return f.time(i);
  return std::nullopt;
}

std::optional<double> all_coords_positive_until(const StatePath& f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (double v : f.state(i))
      if (v == 0.0) return f.time(i);
  }
  return std::nullopt;
}

StatePath shift(const StatePath& f, double t) {
  StatePath out(f.dim(), std::max(0.0, f.horizon() - t));
  if (f.empty()) return out;
  const std::size_t first = f.index_at(t);
  out.reserve(f.size() - first);
  out.push(0.0, f.state(first));
  for (std::size_t i = first + 1; i < f.size(); ++i) out.push(f.time(i) - t, f.state(i));
  return out;
}

StatePath stop_at_zero(const StatePath& f) {
  StatePath out(f.dim(), f.horizon());
  out.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.push(f.time(i), f.state(i));
    if (f.norm(i) == 0.0) {
      out.stop = {StopReason::ZeroHit, f.time(i)};
      return out;
    }
  }
  out.stop = {StopReason::Horizon, f.horizon()};
  return out;
}

StatePath excursion_above(const StatePath& f, double eps) {
  const auto up = first_hit_above_index(f, eps);
  if (!up) throw Error(ErrorCode::LevelNeverReached, "path never reaches the excursion level");
  return stop_at_zero(shift(f, f.time(*up)));
}

double excursion_left_endpoint(const StatePath& f, double eps) {
  const auto up = first_hit_above_index(f, eps);
  if (!up) throw Error(ErrorCode::LevelNeverReached, "path never reaches the excursion level");
  for (std::size_t j = *up; j-- > 0;) {
    if (f.norm(j) == 0.0) return f.time(j + 1);
  }
  return 0.0;
}

std::vector<ExcursionRecord> excursion_inventory(const StatePath& f, double eps) {
  std::vector<ExcursionRecord> out;
  std::size_t from = 0;
  std::size_t last_zero_exit = 0;  // index where the path last left 0
  bool seen_zero = false;
  while (from < f.size()) {
    // Track zeros between `from` and the up-crossing.
    std::optional<std::size_t> up;
    for (std::size_t i = from; i < f.size(); ++i) {
      const double nrm = f.norm(i);
      if (nrm == 0.0) {
        seen_zero = true;
        last_zero_exit = i + 1;
      } else if (nrm >= eps) {
        up = i;
        break;
      }
    }
    if (!up) break;
    ExcursionRecord rec;
    rec.t_up = f.time(*up);
    rec.g_eps = (seen_zero && last_zero_exit <= *up) ? f.time(last_zero_exit) : 0.0;
    double height = 0.0;
    std::size_t j = *up;
    for (; j < f.size(); ++j) {
      const double nrm = f.norm(j);
      if (nrm == 0.0) break;
      height = std::max(height, nrm);
    }
    rec.max_height = height;
    if (j < f.size()) {
      rec.t0_after = f.time(j);
      rec.complete = true;
      out.push_back(rec);
      from = j;
    } else {
      out.push_back(rec);
      break;
    }
  }
  return out;
}

ScaledPath::ScaledPath(const StatePath& base, int n) : base_(&base), n_(n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "scaling index must be >= 1");
}

std::vector<double> ScaledPath::at(double t) const {
  const auto s = base_->at(t * time_factor());
  std::vector<double> out(s.begin(), s.end());
  for (double& v : out) v /= n_;
  return out;
}

double ScaledPath::norm_at(double t) const { return base_->norm_at(t * time_factor()) / n_; }

StatePath ScaledPath::materialize() const {
  StatePath out(dim(), horizon());
  out.reserve(base_->size());
  std::vector<double> buf(static_cast<std::size_t>(dim()));
  for (std::size_t i = 0; i < base_->size(); ++i) {
    const auto s = base_->state(i);
    for (std::size_t k = 0; k < s.size(); ++k) buf[k] = s[k] / n_;
    out.push(base_->time(i) / time_factor(), buf);
  }
  out.stop = base_->stop;
  out.stop.time /= time_factor();
  return out;
}

ScaledPath rescale(const StatePath& base, int n) { return ScaledPath(base, n); }

StatePath scaled_ratio(const ScaledPath& X, const Vector& pi) {
  const StatePath& base = X.base();
  if (pi.size() != base.dim()) throw Error(ErrorCode::DimensionMismatch, "pi length differs from path");
  StatePath out(base.dim(), X.horizon());
  out.reserve(base.size());
  std::vector<double> r(static_cast<std::size_t>(base.dim()));
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double total = base.norm(i);
    const auto s = base.state(i);
    for (std::size_t k = 0; k < r.size(); ++k)
      r[k] = total > 0.0 ? s[k] / total : pi(static_cast<Eigen::Index>(k));
    out.push(base.time(i) / X.time_factor(), r);
  }
  return out;
}

double collapse_gap(const ScaledPath& X, const Vector& pi, std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "collapse grid is empty");
  if (pi.size() != X.dim()) throw Error(ErrorCode::DimensionMismatch, "pi length differs from path");
  double worst = 0.0;
  for (double t : grid) {
    const auto x = X.at(t);
    double total = 0.0;
    for (double v : x) total += std::abs(v);
    double gap = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
      gap += std::abs(x[k] - pi(static_cast<Eigen::Index>(k)) * total);
    worst = std::max(worst, gap);
  }
  return worst;
}

double max_norm(const StatePath& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, f.norm(i));
  return m;
}

}  // namespace mobnet
