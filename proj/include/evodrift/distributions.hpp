#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "evodrift/rng.hpp"

namespace evodrift {

using ExamplePoint = std::vector<double>;

enum class DistKind { UniformHypercube, UnitSphere, ProductNormal };

/// The three example distributions used by the concrete algorithms:
/// uniform over {-1,+1}^n, uniform over the unit sphere, and a centered
/// product normal with per-dimension standard deviations sigma_i confined
/// to [(1/n)^k, 1] for a configured integer k.
struct DistributionSpec {
  DistKind kind = DistKind::UniformHypercube;
  int dim = 1;
  std::vector<double> sigma;   // product normal only
  int variance_exponent = 0;   // k

  static DistributionSpec uniform_hypercube(int n) {
    check_dim(n);
    return {DistKind::UniformHypercube, n, {}, 0};
  }

  static DistributionSpec unit_sphere(int n) {
    check_dim(n);
    return {DistKind::UnitSphere, n, {}, 0};
  }

  static DistributionSpec product_normal(std::vector<double> sigmas, int k) {
    const int n = static_cast<int>(sigmas.size());
    check_dim(n);
    if (k < 0) throw std::invalid_argument("variance exponent must be >= 0");
    const double lo = std::pow(1.0 / n, k);
    for (double s : sigmas) {
      if (!(s >= lo - 1e-12 && s <= 1.0 + 1e-12))
        throw std::invalid_argument("sigma outside [(1/n)^k, 1]: " + std::to_string(s));
    }
    return {DistKind::ProductNormal, n, std::move(sigmas), k};
  }

 private:
  static void check_dim(int n) {
    if (n < 1) throw std::invalid_argument("dimension must be >= 1");
  }
};

inline ExamplePoint sample(const DistributionSpec& spec, Rng& rng) {
  ExamplePoint x(static_cast<std::size_t>(spec.dim));
  switch (spec.kind) {
    case DistKind::UniformHypercube:
      for (auto& c : x) c = (rng.next_u64() & 1ULL) ? 1.0 : -1.0;
      return x;
    case DistKind::UnitSphere: {
      // Direction of a standard Gaussian draw; a zero vector is resampled.
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (auto& c : x) {
          c = rng.normal();
          norm2 += c * c;
        }
      } while (!(norm2 > 0.0));
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& c : x) c *= inv;
      return x;
    }
    case DistKind::ProductNormal:
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = spec.sigma[i] * rng.normal();
      return x;
  }
  throw std::logic_error("unreachable distribution kind");
}

}  // namespace evodrift
