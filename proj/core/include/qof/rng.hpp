#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qof {

/// Deterministic RNG for the simulation. Wraps mt19937_64 (whose output
/// sequence is pinned by the standard) and does bounded draws with the
/// multiply-shift reduction instead of std::uniform_int_distribution, whose
/// mapping is implementation-defined. Identical seeds give identical draw
/// sequences on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, bound). bound = 0 returns 0.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_()) * bound) >> 64);
  }

  /// Uniform in [lo, hi] inclusive.
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
    return lo + below(hi - lo + 1);
  }

  double unit() {  // [0,1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 gen_;
};

/// Derives independent sub-seeds from a master seed and a label, so each
/// component (network delays, client load, faults) consumes its own stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0);

}  // namespace qof
