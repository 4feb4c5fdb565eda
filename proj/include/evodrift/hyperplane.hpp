#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evodrift/core.hpp"
#include "evodrift/distributions.hpp"
#include "evodrift/rng.hpp"

namespace evodrift {

/// Homogeneous linear separator represented by its unit-length normal
/// vector; renormalized on construction so the norm stays within 1e-10 of 1.
class UnitNormal {
 public:
  explicit UnitNormal(std::vector<double> components) : v_(std::move(components)) {
    if (v_.empty()) throw std::invalid_argument("UnitNormal: empty vector");
    double norm2 = 0.0;
    for (double c : v_) norm2 += c * c;
    if (!(norm2 > 1e-60)) throw std::invalid_argument("UnitNormal: zero vector");
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& c : v_) c *= inv;
  }

  static UnitNormal axis(int dim, int i) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v.at(static_cast<std::size_t>(i)) = 1.0;
    return UnitNormal(std::move(v));
  }

  static UnitNormal parse(const std::string& text) {
    std::vector<double> v;
    std::size_t pos = 0;
    while (pos < text.size()) {
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == ',')) ++pos;
      if (pos >= text.size()) break;
      std::size_t used = 0;
      v.push_back(std::stod(text.substr(pos), &used));
      pos += used;
    }
    return UnitNormal(std::move(v));
  }

  std::string to_string() const {
    std::string s;
    char buf[32];
    for (std::size_t i = 0; i < v_.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v_[i]);
      if (i) s += ',';
      s += buf;
    }
    return s;
  }

  std::size_t dimension() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  const std::vector<double>& components() const { return v_; }

  double dot(const UnitNormal& o) const {
    if (o.v_.size() != v_.size()) throw std::invalid_argument("UnitNormal: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) d += v_[i] * o.v_[i];
    return d;
  }

  /// Sign of the dot product with x; the boundary value 0 maps to +1.
  double evaluate(std::span<const double> x) const {
    if (x.size() != v_.size()) throw std::invalid_argument("UnitNormal: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) d += v_[i] * x[i];
    return d >= 0.0 ? 1.0 : -1.0;
  }

  bool operator==(const UnitNormal& o) const { return v_ == o.v_; }

 private:
  std::vector<double> v_;
};

inline double clamped_dot(const UnitNormal& a, const UnitNormal& b) {
  const double d = a.dot(b);
  return d < -1.0 ? -1.0 : (d > 1.0 ? 1.0 : d);
}

/// Under any spherically symmetric distribution the disagreement between two
/// separators is angle/pi, so performance is 1 - 2*arccos(f.r)/pi.
inline PerformanceValue spherical_performance(const UnitNormal& f, const UnitNormal& r) {
  return PerformanceValue(1.0 - 2.0 * std::acos(clamped_dot(f, r)) / 3.14159265358979323846);
}

/// Product-normal performance: scale both normals coordinate-wise by sigma,
/// renormalize, and apply the spherical identity to the images.
inline PerformanceValue product_normal_performance(const UnitNormal& f, const UnitNormal& r,
                                                   std::span<const double> sigma) {
  if (sigma.size() != f.dimension() || f.dimension() != r.dimension())
    throw std::invalid_argument("product_normal_performance: dimension mismatch");
  std::vector<double> lf(f.dimension()), lr(r.dimension());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    lf[i] = sigma[i] * f[i];
    lr[i] = sigma[i] * r[i];
  }
  return spherical_performance(UnitNormal(std::move(lf)), UnitNormal(std::move(lr)));
}

namespace detail {

/// Gaussian draw orthogonalized against the given unit vectors, normalized.
/// Resamples while the residual is too small to normalize stably.
inline std::vector<double> random_orthonormal(std::span<const std::vector<double>> basis,
                                              std::size_t dim, Rng& rng) {
  for (;;) {
    std::vector<double> v(dim);
    for (auto& c : v) c = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        double proj = 0.0;
        for (std::size_t i = 0; i < dim; ++i) proj += v[i] * b[i];
        for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * b[i];
      }
    }
    double norm2 = 0.0;
    for (double c : v) norm2 += c * c;
    if (norm2 > 1e-12) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& c : v) c *= inv;
      return v;
    }
  }
}

}  // namespace detail

/// Rotation neighborhood: complete {r} to a random orthonormal basis and
/// rotate r by epsilon/(pi sqrt(n)) toward +/- each remaining basis vector.
/// Exactly 2n - 1 members, uniform weights.
inline NeighborSet<UnitNormal> rotation_neighborhood(const UnitNormal& r, double epsilon,
                                                     Rng& rng) {
  const std::size_t n = r.dimension();
  if (n < 2) throw std::invalid_argument("rotation_neighborhood: dimension must be >= 2");
  const double angle = epsilon / (3.14159265358979323846 * std::sqrt(static_cast<double>(n)));
  const double c = std::cos(angle), s = std::sin(angle);

  std::vector<std::vector<double>> basis{r.components()};
  basis.reserve(n);
  for (std::size_t i = 1; i < n; ++i)
    basis.push_back(detail::random_orthonormal(basis, n, rng));

  std::vector<UnitNormal> members{r};
  for (std::size_t i = 1; i < n; ++i) {
    for (double sign : {+1.0, -1.0}) {
      std::vector<double> v(n);
      for (std::size_t j = 0; j < n; ++j) v[j] = c * r[j] + sign * s * basis[i][j];
      members.emplace_back(std::move(v));
    }
  }
  std::vector<double> weights(members.size(), 1.0);
  return NeighborSet<UnitNormal>(std::move(members), std::move(weights), 0,
                                 2.0 * static_cast<double>(n) - 1.0);
}

/// Component-wise neighborhood for unknown product normal distributions with
/// variance exponent k: single-component sign flips plus shifts of each
/// component by j*eps^2/(12 n^k sqrt(n)) for j = 1..4n^(2k), renormalized.
/// The grid spans the needed scaled step for every sigma in the admissible
/// band. Size is bounded by 8n^(2k+1) + 2n.
inline NeighborSet<UnitNormal> componentwise_neighborhood(const UnitNormal& r, double epsilon,
                                                          int variance_exponent) {
  if (variance_exponent < 0) throw std::invalid_argument("variance exponent must be >= 0");
  const std::size_t n = r.dimension();
  const double nd = static_cast<double>(n);
  const double nk = std::pow(nd, variance_exponent);
  const double step = epsilon * epsilon / (12.0 * nk * std::sqrt(nd));
  const auto grid = static_cast<long long>(std::llround(4.0 * nk * nk));

  std::vector<UnitNormal> members{r};
  for (std::size_t i = 0; i < n; ++i) {
    if (r[i] == 0.0) continue;  // flip would duplicate r
    auto v = r.components();
    v[i] = -v[i];
    members.emplace_back(std::move(v));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (long long j = 1; j <= grid; ++j) {
      for (double sign : {+1.0, -1.0}) {
        auto v = r.components();
        v[i] += sign * static_cast<double>(j) * step;
        double norm2 = 0.0;
        for (double c : v) norm2 += c * c;
        if (!(norm2 > 1e-60)) continue;
        members.emplace_back(std::move(v));
      }
    }
  }
  const double bound = 8.0 * std::pow(nd, 2 * variance_exponent + 1) + 2.0 * nd;
  std::vector<double> weights(members.size(), 1.0);
  return NeighborSet<UnitNormal>(std::move(members), std::move(weights), 0, bound);
}

enum class RotationDriftPolicy { Constant, Steady, RandomWalk };

/// Rotate f by the angle pi*delta toward the unit direction u (orthogonal
/// to f); the resulting error under any spherically symmetric distribution
/// is exactly delta.
inline UnitNormal rotate_toward(const UnitNormal& f, const std::vector<double>& u, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta outside [0, 1]");
  const double a = 3.14159265358979323846 * delta;
  const double c = std::cos(a), s = std::sin(a);
  std::vector<double> v(f.dimension());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * f[i] + s * u[i];
  return UnitNormal(std::move(v));
}

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string vector_id(const UnitNormal& v) {
  const auto h =
      fnv1a(v.components().data(), v.components().size() * sizeof(double));
  char buf[20];
  std::snprintf(buf, sizeof buf, "v%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

/// Rotation-based separator evolution over a spherically symmetric
/// distribution (unit-sphere sampling).
class RotationHyperplaneFamily {
 public:
  using Rep = UnitNormal;
  using Concept = UnitNormal;

  RotationHyperplaneFamily(int n, double epsilon)
      : n_(n), epsilon_(epsilon), dist_(DistributionSpec::unit_sphere(n)) {
    if (n < 2) throw std::invalid_argument("dimension must be >= 2");
  }

  int dimension() const { return n_; }
  double epsilon() const { return epsilon_; }

  double exact_performance(const UnitNormal& f, const UnitNormal& r) const {
    return spherical_performance(f, r).value();
  }
  NeighborSet<UnitNormal> neighborhood(const UnitNormal& r, Rng& rng) const {
    return rotation_neighborhood(r, epsilon_, rng);
  }
  double benefit() const {
    const double pi = 3.14159265358979323846;
    return pi * pi * pi * n_ / (2.0 * epsilon_);
  }
  double neighborhood_bound() const { return 2.0 * n_ - 1.0; }

  ExamplePoint sample_point(Rng& rng) const { return sample(dist_, rng); }
  double eval_representation(const UnitNormal& r, std::span<const double> x) const {
    return r.evaluate(x);
  }
  double eval_concept(const UnitNormal& f, std::span<const double> x) const {
    return f.evaluate(x);
  }

  std::string rep_id(const UnitNormal& r) const { return detail::vector_id(r); }
  std::string concept_id(const UnitNormal& f) const { return detail::vector_id(f); }

 private:
  int n_;
  double epsilon_;
  DistributionSpec dist_;
};

/// Component-wise separator evolution over a product normal distribution
/// with known variance exponent but unknown per-dimension sigmas.
class ComponentwiseHyperplaneFamily {
 public:
  using Rep = UnitNormal;
  using Concept = UnitNormal;

  ComponentwiseHyperplaneFamily(int n, double epsilon, int variance_exponent,
                                std::vector<double> sigma)
      : n_(n),
        epsilon_(epsilon),
        k_(variance_exponent),
        dist_(DistributionSpec::product_normal(std::move(sigma), variance_exponent)) {
    if (static_cast<int>(dist_.sigma.size()) != n)
      throw std::invalid_argument("sigma dimension mismatch");
  }

  int dimension() const { return n_; }
  double epsilon() const { return epsilon_; }
  int variance_exponent() const { return k_; }
  const std::vector<double>& sigma() const { return dist_.sigma; }

  double exact_performance(const UnitNormal& f, const UnitNormal& r) const {
    return product_normal_performance(f, r, dist_.sigma).value();
  }
  NeighborSet<UnitNormal> neighborhood(const UnitNormal& r, Rng&) const {
    return componentwise_neighborhood(r, epsilon_, k_);
  }
  double benefit() const { return 144.0 * n_ / std::pow(epsilon_, 6); }
  double neighborhood_bound() const {
    return 8.0 * std::pow(static_cast<double>(n_), 2 * k_ + 1) + 2.0 * n_;
  }

  ExamplePoint sample_point(Rng& rng) const { return sample(dist_, rng); }
  double eval_representation(const UnitNormal& r, std::span<const double> x) const {
    return r.evaluate(x);
  }
  double eval_concept(const UnitNormal& f, std::span<const double> x) const {
    return f.evaluate(x);
  }

  std::string rep_id(const UnitNormal& r) const { return detail::vector_id(r); }
  std::string concept_id(const UnitNormal& f) const { return detail::vector_id(f); }

 private:
  int n_;
  double epsilon_;
  int k_;
  DistributionSpec dist_;
};

}  // namespace evodrift
