#pragma once

// Counter-based random streams.
//
// Every random draw in the library comes from a Stream: a Philox4x32-10
// block cipher keyed by the experiment seed and addressed by a 64-bit stream
// id plus a 64-bit block counter. Streams are cheap values; deriving a child
// id never touches shared state, so replications can run in any order on any
// thread and still reproduce bit-for-bit.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mobnet {

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept;

// SplitMix64 finalizer, used to hash structured stream addresses.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Primitive classes. Each (replication, class) pair owns one stream.
enum class Primitive : std::uint64_t {
  Arrival = 1,
  Departure = 2,
  Mobility = 3,
  Choice = 4,
  Requirement = 5,
  Clock = 6,
  Reference = 7,
  Sampling = 8,
  Parameters = 9,
};

// Hash a path of tags into a stream id.
inline std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

class Stream {
 public:
  Stream() = default;
  Stream(std::uint64_t seed, std::uint64_t id) noexcept : seed_(seed), id_(id) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t id() const noexcept { return id_; }

  // Child stream whose id is derived from this one; the parent is unaffected.
  Stream child(std::uint64_t tag) const noexcept { return Stream(seed_, stream_id({id_, tag})); }
  Stream child(Primitive p, std::uint64_t index = 0) const noexcept {
    return Stream(seed_, stream_id({id_, static_cast<std::uint64_t>(p), index}));
  }

  std::uint64_t next_u64() noexcept {
    if (have_ == 0) refill();
    return buffer_[--have_];
  }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exponential with the given rate (> 0).
  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

  // Standard normal by the Box-Muller transform, second variate cached.
  double normal() noexcept;

  // Uniform integer in [0, n), n > 0 (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_ = 0;
  std::uint64_t id_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int have_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mobnet
