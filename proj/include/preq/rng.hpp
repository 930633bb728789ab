#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace preq {

using Engine = std::mt19937_64;

// Mixes (seed, stream label, index) into an engine seed. Different labels or
// indices give statistically unrelated streams; identical inputs always give
// the same stream regardless of thread or platform.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t index = 0);

// A named deterministic random stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0)
      : engine_(derive_seed(seed, stream, index)) {}

  Engine& engine() { return engine_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

 private:
  Engine engine_;
};

}  // namespace preq
