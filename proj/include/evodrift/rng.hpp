#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace evodrift {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent stream seed from a base seed. Used for
/// (seed, trial index) -> trial seed and for per-component sub-streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

/// Seeded generator with explicit, implementation-pinned draw primitives.
/// All distributions are built from the raw 64-bit stream so that runs are
/// bit-reproducible for a fixed seed regardless of standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; two uniforms per draw, no cached state.
  double normal() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::size_t index(std::size_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::index: empty range");
    auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(bound));
    return i < bound ? i : bound - 1;
  }

  /// Pick an index with probability proportional to w[i]. Weights must be
  /// nonnegative with a positive total.
  std::size_t pick_weighted(std::span<const double> w) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw std::invalid_argument("pick_weighted: nonpositive total weight");
    const double u = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return w.size() - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace evodrift
