#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evodrift/conjunction.hpp"
#include "evodrift/core.hpp"
#include "evodrift/hyperplane.hpp"
#include "evodrift/rng.hpp"

namespace evodrift {

/// A generator of target sequences f0, f1, ... whose consecutive pairs are
/// guaranteed (and checked by the family steppers) to satisfy
/// err(f_{i-1}, f_i) <= delta. Deterministic given its seed.
template <typename C>
class DriftSchedule {
 public:
  using Stepper = std::function<C(const C&, Rng&)>;

  DriftSchedule(C initial, double delta, Stepper stepper, std::uint64_t seed, std::string policy)
      : current_(std::move(initial)),
        delta_(delta),
        step_(std::move(stepper)),
        rng_(seed),
        policy_(std::move(policy)) {
    if (!(delta >= 0.0)) throw ConfigError("DriftSchedule: delta must be >= 0");
  }

  const C& current() const { return current_; }
  double delta() const { return delta_; }
  const std::string& policy() const { return policy_; }

  /// Advance to the next target and return it.
  const C& next_target() {
    current_ = step_(current_, rng_);
    return current_;
  }

 private:
  C current_;
  double delta_;
  Stepper step_;
  Rng rng_;
  std::string policy_;
};

template <typename C>
DriftSchedule<C> constant_schedule(C target) {
  return DriftSchedule<C>(std::move(target), 0.0,
                          [](const C& f, Rng&) { return f; }, 0, "constant");
}

inline DriftSchedule<Conjunction> conjunction_drift_schedule(Conjunction initial, double delta,
                                                             ConjunctionDriftPolicy policy, int n,
                                                             bool monotone_family,
                                                             std::uint64_t seed) {
  std::string name = "constant";
  if (policy != ConjunctionDriftPolicy::Constant) {
    if (std::ldexp(1.0, -static_cast<int>(initial.size())) > delta * (1.0 + 1e-12))
      throw ConfigError(
          "conjunction drift: target of length " + std::to_string(initial.size()) +
          " cannot drift within delta; a single-literal edit changes error by 2^-|f|");
    name = policy == ConjunctionDriftPolicy::LongSwap ? "long-swap" : "long-shrink-grow";
  }
  return DriftSchedule<Conjunction>(
      std::move(initial), delta,
      [policy, n, monotone_family, delta](const Conjunction& f, Rng& rng) {
        return conjunction_drift_step(f, delta, policy, n, monotone_family, rng);
      },
      seed, name);
}

/// Rotation drift: each step rotates the target by exactly pi*delta, either
/// inside a fixed plane (steady) or toward a fresh random orthogonal
/// direction (random walk).
inline DriftSchedule<UnitNormal> rotation_drift_schedule(UnitNormal initial, double delta,
                                                         RotationDriftPolicy policy,
                                                         std::uint64_t seed) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("rotation drift: delta outside [0, 1]");
  if (policy == RotationDriftPolicy::Constant || delta == 0.0)
    return DriftSchedule<UnitNormal>(std::move(initial), delta,
                                     [](const UnitNormal& f, Rng&) { return f; }, seed,
                                     "constant");
  if (initial.dimension() < 2) throw ConfigError("rotation drift: dimension must be >= 2");

  if (policy == RotationDriftPolicy::Steady) {
    // The companion vector keeps the rotation plane fixed across steps.
    auto companion = std::make_shared<std::vector<double>>();
    return DriftSchedule<UnitNormal>(
        std::move(initial), delta,
        [companion, delta](const UnitNormal& f, Rng& rng) {
          if (companion->empty()) {
            std::vector<std::vector<double>> basis{f.components()};
            *companion = detail::random_orthonormal(basis, f.dimension(), rng);
          }
          const UnitNormal next = rotate_toward(f, *companion, delta);
          const double a = 3.14159265358979323846 * delta;
          std::vector<double> u(f.dimension());
          for (std::size_t i = 0; i < u.size(); ++i)
            u[i] = -std::sin(a) * f[i] + std::cos(a) * (*companion)[i];
          *companion = std::move(u);
          return next;
        },
        seed, "steady-rotation");
  }
  return DriftSchedule<UnitNormal>(
      std::move(initial), delta,
      [delta](const UnitNormal& f, Rng& rng) {
        std::vector<std::vector<double>> basis{f.components()};
        const auto u = detail::random_orthonormal(basis, f.dimension(), rng);
        return rotate_toward(f, u, delta);
      },
      seed, "random-walk");
}

struct DriftCheck {
  bool ok = true;
  double max_step_error = 0.0;
};

/// Check a target list against the drift bound using an exact oracle:
/// err = (1 - Perf)/2 per consecutive pair, all required <= delta + 1e-12.
template <typename C, typename Oracle>
DriftCheck verify_drift_sequence(std::span<const C> targets, Oracle&& exact_performance,
                                 double delta) {
  if (targets.size() < 2) throw std::invalid_argument("verify_drift_sequence: need >= 2 targets");
  DriftCheck out;
  for (std::size_t i = 1; i < targets.size(); ++i) {
    const double perf = exact_performance(targets[i - 1], targets[i]);
    const double err = (1.0 - perf) / 2.0;
    if (err > out.max_step_error) out.max_step_error = err;
    if (err > delta + 1e-12) out.ok = false;
  }
  return out;
}

/// User-supplied (adversarial) schedule: steps through a fixed list, holding
/// the final target once exhausted. The list is verified against the oracle
/// and delta on construction.
template <typename C, typename Oracle>
DriftSchedule<C> fixed_sequence_schedule(std::vector<C> targets, double delta,
                                         Oracle&& exact_performance) {
  if (targets.empty()) throw ConfigError("fixed schedule: empty target list");
  if (targets.size() >= 2) {
    const auto check = verify_drift_sequence<C>(std::span<const C>(targets), exact_performance,
                                                delta);
    if (!check.ok)
      throw ConfigError("fixed schedule: a step has error " +
                        std::to_string(check.max_step_error) + " > delta");
  }
  auto list = std::make_shared<std::vector<C>>(std::move(targets));
  auto pos = std::make_shared<std::size_t>(0);
  C first = (*list)[0];
  return DriftSchedule<C>(
      std::move(first), delta,
      [list, pos](const C&, Rng&) -> C {
        if (*pos + 1 < list->size()) ++*pos;
        return (*list)[*pos];
      },
      0, "file");
}

/// One concept encoding per line; blank lines allowed for conjunctions only
/// through the empty encoding (a fully blank line is kept as the empty
/// conjunction when `allow_empty`).
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schedule file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::vector<Conjunction> load_conjunction_sequence(const std::string& path) {
  std::vector<Conjunction> out;
  for (const auto& line : read_lines(path)) out.push_back(Conjunction::parse(line));
  if (out.empty()) throw ConfigError("schedule file is empty: " + path);
  return out;
}

inline std::vector<UnitNormal> load_vector_sequence(const std::string& path) {
  std::vector<UnitNormal> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    out.push_back(UnitNormal::parse(line));
  }
  if (out.empty()) throw ConfigError("schedule file is empty: " + path);
  return out;
}

}  // namespace evodrift
