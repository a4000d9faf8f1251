#pragma once

// Helpers shared by the experiment runners. Not installed.

#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mobnet/report.hpp"
#include "mobnet/rng.hpp"

namespace mobnet::detail {

// Distinct roots per experiment keep streams disjoint across subcommands.
enum class ExperimentTag : std::uint64_t {
  Homogenization = 101,
  HeavyTraffic,
  HeavyTrafficReference,
  Stationary,
  Sojourn,
  Hitting,
  Martingale,
  Reference,
  Simulate,
};

inline Stream experiment_stream(std::uint64_t seed, ExperimentTag tag) {
  return Stream(seed, 0).child(static_cast<std::uint64_t>(tag));
}

// Standard deviation of the Kolmogorov limit law, scaled to n samples.
inline double ks_se(double n_eff) { return 0.2603 / std::sqrt(n_eff); }

// 95% band used when comparing two KS distances along the ladder.
inline double ks_band(double n_eff) { return 1.36 / std::sqrt(n_eff); }

inline std::string num(double x) { return format_number(x); }

}  // namespace mobnet::detail
