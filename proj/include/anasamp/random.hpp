#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>

#include "anasamp/errors.hpp"

namespace anasamp {

/// Deterministic stream of uniform reals in [0,1) and uniform 64-bit words.
template <typename R>
concept RandomSource = requires(R& r) {
  { r.uniform() } -> std::same_as<double>;
  { r.next_u64() } -> std::same_as<std::uint64_t>;
};

/// SplitMix64 finaliser; used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of worker `index` in a run seeded with `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed + index);
}

/// Mersenne Twister with a platform-independent real conversion: the engine
/// is fully specified by the standard, std::uniform_real_distribution is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

static_assert(RandomSource<Rng>);

template <RandomSource R>
bool draw_bernoulli(double p, R& rng) {
  return rng.uniform() < p;
}

/// P(K = k) = b^k (1 - b), by inversion.
template <RandomSource R>
std::uint64_t draw_geometric(double b, R& rng) {
  if (!(b >= 0.0 && b < 1.0)) throw DomainError("geometric parameter must lie in [0,1)");
  if (b == 0.0) return 0;
  const double u = 1.0 - rng.uniform();  // (0,1]
  const double k = std::floor(std::log(u) / std::log(b));
  if (k >= 0x1.0p63) return std::uint64_t{1} << 63;
  return static_cast<std::uint64_t>(k);
}

/// Poisson(t) by sequential inversion of the cumulative distribution.
template <RandomSource R>
std::uint64_t draw_poisson(double t, R& rng) {
  if (!(t >= 0.0)) throw DomainError("Poisson parameter must be non-negative");
  const double u = rng.uniform();
  double p = std::exp(-t);
  double cdf = p;
  std::uint64_t k = 0;
  while (u >= cdf) {
    ++k;
    p *= t / static_cast<double>(k);
    if (p == 0.0) break;  // cdf has converged to within rounding of 1
    cdf += p;
  }
  return k;
}

}  // namespace anasamp
