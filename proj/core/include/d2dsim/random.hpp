#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace d2d {

/// Seedable random source with named sub-streams.
///
/// Algorithm identifier: "mt19937_64/splitmix64-fnv1a". A stream named `name`
/// under master seed `s` seeds std::mt19937_64 with
/// splitmix64(s ^ fnv1a64(name)). Only the raw 64-bit engine output is taken
/// from the standard library; every distribution below is implemented here so
/// that draws are identical across standard-library vendors.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);
  RandomStream(std::uint64_t master_seed, std::string_view name);

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t poisson(double mean);
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

/// Seed of the sub-stream `name` under `master_seed`.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name);

}  // namespace d2d
