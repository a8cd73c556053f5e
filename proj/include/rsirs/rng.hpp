#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is keyed by the master seed; the path index lives in the upper
// two counter words and the lower two words count blocks. Streams for
// different path indices therefore never overlap, and every draw is a pure
// function of (master_seed, path_index, draw number).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace rsirs {

namespace detail {

inline constexpr std::uint32_t philox_m0 = 0xD2511F53u;
inline constexpr std::uint32_t philox_m1 = 0xCD9E8D57u;
inline constexpr std::uint32_t philox_w0 = 0x9E3779B9u;
inline constexpr std::uint32_t philox_w1 = 0xBB67AE85u;

}  // namespace detail

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{detail::philox_m0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{detail::philox_m1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += detail::philox_w0;
    key[1] += detail::philox_w1;
  }
  return ctr;
}

/// Reproducible random stream for one path. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t path_index)
      : master_seed_(master_seed), path_index_(path_index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 2) refill();
    const result_type out = (std::uint64_t{block_[2 * lane_ + 1]} << 32) | block_[2 * lane_];
    ++lane_;
    return out;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Exponential with the given rate (> 0).
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t path_index() const { return path_index_; }
  std::uint64_t blocks_drawn() const { return counter_; }

 private:
  void refill() {
    const PhiloxBlock ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                          static_cast<std::uint32_t>(path_index_), static_cast<std::uint32_t>(path_index_ >> 32)};
    const PhiloxKey key{static_cast<std::uint32_t>(master_seed_), static_cast<std::uint32_t>(master_seed_ >> 32)};
    block_ = philox4x32_10(ctr, key);
    ++counter_;
    lane_ = 0;
  }

  std::uint64_t master_seed_;
  std::uint64_t path_index_;
  std::uint64_t counter_ = 0;
  PhiloxBlock block_{};
  int lane_ = 2;
};

}  // namespace rsirs
