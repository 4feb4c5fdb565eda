#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evodrift/rng.hpp"

namespace evodrift {

/// Raised for invalid runtime configuration (bad flags, mismatched inputs).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Correlation with the ideal target, always in [-1, 1]; equals 1 - 2*err
/// for the 0/1 error err in [0, 1].
class PerformanceValue {
 public:
  PerformanceValue() = default;
  explicit PerformanceValue(double v) {
    if (!(v >= -1.0 - kSlack) || !(v <= 1.0 + kSlack))
      throw std::invalid_argument("PerformanceValue: outside [-1, 1]: " + std::to_string(v));
    v_ = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
  }

  static PerformanceValue from_error(double err) { return PerformanceValue(1.0 - 2.0 * err); }

  double value() const { return v_; }
  double error() const { return (1.0 - v_) / 2.0; }

 private:
  static constexpr double kSlack = 1e-9;
  double v_ = 0.0;
};

enum class SelectionClass { Beneficial, Neutral };

inline const char* to_string(SelectionClass c) {
  return c == SelectionClass::Beneficial ? "beneficial" : "neutral";
}

/// Candidate mutations of the current representation with their relative
/// mutation weights. The current representation is always a member, exactly
/// once, and every normalized weight is at least 1/p for the declared size
/// bound p (which also caps the member count).
template <typename R>
class NeighborSet {
 public:
  NeighborSet(std::vector<R> members, std::vector<double> weights, std::size_t current_index,
              double declared_bound)
      : members_(std::move(members)),
        weights_(std::move(weights)),
        current_(current_index),
        declared_bound_(declared_bound) {
    if (members_.empty()) throw std::invalid_argument("NeighborSet: empty");
    if (weights_.size() != members_.size())
      throw std::invalid_argument("NeighborSet: weight count mismatch");
    if (current_ >= members_.size()) throw std::invalid_argument("NeighborSet: bad current index");
    if (!(declared_bound_ >= 1.0)) throw std::invalid_argument("NeighborSet: bad size bound");
    if (static_cast<double>(members_.size()) > declared_bound_ + 1e-9)
      throw std::invalid_argument("NeighborSet: more members than the declared bound");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0)) throw std::invalid_argument("NeighborSet: nonpositive weight");
      total += w;
    }
    for (double w : weights_) {
      if (w / total < 1.0 / declared_bound_ - 1e-12)
        throw std::invalid_argument("NeighborSet: weight below 1/p");
    }
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (i != current_ && members_[i] == members_[current_])
        throw std::invalid_argument("NeighborSet: current representation appears twice");
    }
  }

  std::size_t size() const { return members_.size(); }
  const R& member(std::size_t i) const { return members_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::size_t current_index() const { return current_; }
  const R& current() const { return members_[current_]; }
  double declared_bound() const { return declared_bound_; }
  const std::vector<R>& members() const { return members_; }

 private:
  std::vector<R> members_;
  std::vector<double> weights_;
  std::size_t current_;
  double declared_bound_;
};

struct SelectionResult {
  std::size_t index;
  SelectionClass cls;
};

/// One selection step. Beneficial mutations are those whose estimate clears
/// the current estimate by at least the tolerance (boundary inclusive);
/// neutral ones lie strictly within the tolerance band. If any beneficial
/// mutation exists one is drawn with probability proportional to its weight,
/// otherwise a neutral one is drawn the same way. The current representation
/// is always neutral, so selection cannot fail.
///
/// min_class_weight, when positive, drops candidates whose weight renormalized
/// within the chosen class falls below the threshold; this realizes the
/// conditioning used by the reduction analyses (rare mutations never chosen).
template <typename R>
SelectionResult select_mutation(const NeighborSet<R>& neighbors,
                                std::span<const PerformanceValue> estimates, double tolerance,
                                Rng& rng, double min_class_weight = 0.0) {
  if (estimates.size() != neighbors.size())
    throw ConfigError("select_mutation: estimate missing for a neighbor");
  if (!(tolerance > 0.0)) throw ConfigError("select_mutation: tolerance must be positive");

  const double v_cur = estimates[neighbors.current_index()].value();
  std::vector<std::size_t> pool;
  SelectionClass cls = SelectionClass::Beneficial;
  for (std::size_t i = 0; i < neighbors.size(); ++i)
    if (estimates[i].value() >= v_cur + tolerance) pool.push_back(i);
  if (pool.empty()) {
    cls = SelectionClass::Neutral;
    for (std::size_t i = 0; i < neighbors.size(); ++i)
      if (std::fabs(estimates[i].value() - v_cur) < tolerance) pool.push_back(i);
  }

  std::vector<double> w;
  w.reserve(pool.size());
  for (std::size_t i : pool) w.push_back(neighbors.weight(i));
  if (min_class_weight > 0.0 && pool.size() > 1) {
    double total = 0.0;
    for (double x : w) total += x;
    std::vector<std::size_t> kept;
    std::vector<double> kept_w;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (w[j] / total >= min_class_weight) {
        kept.push_back(pool[j]);
        kept_w.push_back(w[j]);
      }
    }
    if (!kept.empty()) {
      pool.swap(kept);
      w.swap(kept_w);
    }
  }
  return {pool[rng.pick_weighted(w)], cls};
}

/// Smallest sample size that keeps every one of up to `neighborhood_bound`
/// estimates within `accuracy` of its mean with probability 1 - `confidence`,
/// by Hoeffding plus a union bound: ceil(2 ln(2N/delta) / Z^2).
inline long long hoeffding_sample_size(double accuracy, double confidence,
                                       double neighborhood_bound) {
  if (!(accuracy > 0.0 && accuracy <= 2.0)) throw std::invalid_argument("accuracy outside (0, 2]");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("confidence outside (0, 1)");
  if (!(neighborhood_bound >= 1.0)) throw std::invalid_argument("neighborhood bound < 1");
  const double s = 2.0 * std::log(2.0 * neighborhood_bound / confidence) / (accuracy * accuracy);
  const long long n = static_cast<long long>(std::ceil(s));
  return n < 1 ? 1 : n;
}

/// Evolution-schedule parameters derived from a benefit bound b (a gain of
/// 1/b is available whenever performance is below 1 - eps/2) and a
/// neighborhood size bound p. With drifting targets: t = 1/(2b), g = 16b,
/// s = ceil(128 b^2 ln(2 p g / eps)), drift bound 1/(16b). Without drift the
/// generation bound tightens to 8b and the drift bound is zero.
struct EvolutionParameters {
  double benefit = 0.0;             // b
  double neighborhood_bound = 0.0;  // p
  double tolerance = 0.0;           // t = 1/(2b)
  double generations_real = 0.0;    // 16b or 8b before rounding
  long long generations = 0;        // ceil of the above
  long long sample_size = 0;
  double drift_bound = 0.0;  // largest admissible per-round target err
  bool drifting = false;
};

inline EvolutionParameters evolution_parameters(double benefit, double neighborhood_bound,
                                                double epsilon, bool drifting) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon outside (0, 1)");
  if (!(neighborhood_bound >= 1.0)) throw std::invalid_argument("neighborhood bound < 1");
  if (!(benefit >= 2.0 / epsilon))
    throw std::invalid_argument("benefit bound must satisfy b >= 2/eps");
  EvolutionParameters p;
  p.benefit = benefit;
  p.neighborhood_bound = neighborhood_bound;
  p.drifting = drifting;
  p.tolerance = 1.0 / (2.0 * benefit);
  p.generations_real = (drifting ? 16.0 : 8.0) * benefit;
  p.generations = static_cast<long long>(std::ceil(p.generations_real));
  p.drift_bound = drifting ? 1.0 / (16.0 * benefit) : 0.0;
  p.sample_size = static_cast<long long>(std::ceil(
      128.0 * benefit * benefit *
      std::log(2.0 * neighborhood_bound * p.generations_real / epsilon)));
  return p;
}

enum class EstimateMode { Oracle, OracleNoiseUniform, OracleNoiseAdversarial, Sampling };

inline const char* to_string(EstimateMode m) {
  switch (m) {
    case EstimateMode::Oracle: return "oracle";
    case EstimateMode::OracleNoiseUniform: return "oracle-noise-uniform";
    case EstimateMode::OracleNoiseAdversarial: return "oracle-noise-adversarial";
    case EstimateMode::Sampling: return "sampling";
  }
  return "?";
}

struct EngineConfig {
  double tolerance = 0.0;   // default t; families may override per state
  long long sample_size = 1;
  EstimateMode mode = EstimateMode::Oracle;
  long long horizon = 1;    // generations to run (trajectory has horizon+1 rows)
  double epsilon = 0.1;
  std::uint64_t rng_seed = 0;
  double noise_bound = 0.0;        // Z for the bounded-noise modes
  double min_class_weight = 0.0;   // see select_mutation
  bool record_estimates = true;

  void validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("EngineConfig: tolerance must be > 0");
    if (sample_size < 1) throw ConfigError("EngineConfig: sample_size must be >= 1");
    if (horizon < 1) throw ConfigError("EngineConfig: horizon must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("EngineConfig: epsilon outside (0, 1)");
    if (mode == EstimateMode::OracleNoiseUniform || mode == EstimateMode::OracleNoiseAdversarial) {
      if (!(noise_bound > 0.0)) throw ConfigError("EngineConfig: noise mode needs noise_bound > 0");
    }
  }
};

}  // namespace evodrift
