#include "d2dsim/random.hpp"

#include <cmath>
#include <stdexcept>

namespace d2d {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name) {
  return splitmix64(master_seed ^ fnv1a64(name));
}

RandomStream::RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

RandomStream::RandomStream(std::uint64_t master_seed, std::string_view name)
    : engine_(derive_seed(master_seed, name)) {}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("below: n must be positive");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::uint64_t RandomStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson: mean must be finite and non-negative");
  }
  // Poisson(a + b) = Poisson(a) + Poisson(b); inversion on chunks of at most
  // 16 keeps exp(-chunk) far from underflow.
  constexpr double kChunk = 16.0;
  std::uint64_t total = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double m = remaining > kChunk ? kChunk : remaining;
    remaining -= m;
    const double u = uniform();
    double term = std::exp(-m);
    double cdf = term;
    std::uint64_t k = 0;
    while (u >= cdf) {
      ++k;
      term *= m / static_cast<double>(k);
      const double next = cdf + term;
      if (next == cdf) break;
      cdf = next;
    }
    total += k;
  }
  return total;
}

double RandomStream::normal(double mean, double stddev) {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return mean + stddev * z;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  return mean + stddev * (u * f);
}

}  // namespace d2d
