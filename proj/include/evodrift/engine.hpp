#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evodrift/core.hpp"
#include "evodrift/distributions.hpp"
#include "evodrift/drift.hpp"
#include "evodrift/rng.hpp"

namespace evodrift {

/// A concept family usable by the evolution engine: an exact performance
/// oracle, a neighborhood generator, and stable textual ids for logging.
template <typename F>
concept EvolutionFamily =
    std::equality_comparable<typename F::Rep> &&
    requires(const F& fam, const typename F::Concept& f, const typename F::Rep& r, Rng& rng) {
      { fam.exact_performance(f, r) } -> std::convertible_to<double>;
      { fam.neighborhood(r, rng) } -> std::same_as<NeighborSet<typename F::Rep>>;
      { fam.rep_id(r) } -> std::convertible_to<std::string>;
      { fam.concept_id(f) } -> std::convertible_to<std::string>;
    };

/// Additionally supports Monte Carlo estimation: a sampler for the example
/// distribution and pointwise evaluation of concepts and (possibly
/// randomized) representations, the latter by expected value in [-1, 1].
template <typename F>
concept SamplingFamily =
    EvolutionFamily<F> &&
    requires(const F& fam, const typename F::Concept& f, const typename F::Rep& r, Rng& rng,
             std::span<const double> x) {
      { fam.sample_point(rng) } -> std::same_as<ExamplePoint>;
      { fam.eval_representation(r, x) } -> std::convertible_to<double>;
      { fam.eval_concept(f, x) } -> std::convertible_to<double>;
    };

/// Families may override the selection tolerance per representation.
template <typename F>
concept HasStateTolerance = requires(const F& fam, const typename F::Rep& r) {
  { fam.tolerance(r) } -> std::convertible_to<double>;
};

/// Empirical performance on one shared sample of size s:
/// (1/s) sum f(x_i) * rbar(x_i), with randomized representations evaluated
/// by expected value.
template <SamplingFamily F>
PerformanceValue empirical_performance(const F& fam, const typename F::Concept& f,
                                       const typename F::Rep& r, long long s, Rng& rng) {
  if (s < 1) throw ConfigError("empirical_performance: sample count must be >= 1");
  double sum = 0.0;
  for (long long i = 0; i < s; ++i) {
    const ExamplePoint x = fam.sample_point(rng);
    sum += fam.eval_concept(f, x) * fam.eval_representation(r, x);
  }
  return PerformanceValue(sum / static_cast<double>(s));
}

struct GenerationLog {
  long long generation = 0;
  std::string target_id;
  std::string rep_id;
  SelectionClass selection = SelectionClass::Neutral;
  double perf_exact = 0.0;           // Perf of r_i against f_i
  double perf_vs_prev_target = 0.0;  // Perf of r_i against f_{i-1} (selection target)
  double chosen_estimate = 0.0;      // v(r_i) at selection time
  std::vector<double> estimates;     // v(r') for the whole neighborhood, set order
};

struct TrajectoryRecord {
  std::vector<GenerationLog> generations;  // horizon + 1 entries, row 0 is r0
  std::size_t size() const { return generations.size(); }
  const GenerationLog& operator[](std::size_t i) const { return generations[i]; }
};

namespace detail {

inline double clamp_unit(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace detail

/// Run the generation loop: at round i the mutator scores the neighborhood
/// of r_{i-1} against the pre-drift target f_{i-1}, selects r_i, and the
/// schedule then advances to f_i. Logged exact performance at row i is
/// Perf_{f_i}(r_i). Bit-reproducible for a fixed seed and config.
///
/// Estimates come from the exact oracle, the oracle plus bounded noise
/// (uniform in [-Z, Z], or the adversarial worst case: current raised by Z,
/// every other neighbor lowered by Z), or one shared sample per generation.
template <EvolutionFamily F>
TrajectoryRecord run_evolution(const F& fam, const typename F::Rep& start,
                               DriftSchedule<typename F::Concept>& drift,
                               const EngineConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  typename F::Rep rep = start;

  TrajectoryRecord traj;
  traj.generations.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
  {
    GenerationLog g0;
    g0.generation = 0;
    g0.target_id = fam.concept_id(drift.current());
    g0.rep_id = fam.rep_id(rep);
    g0.perf_exact = fam.exact_performance(drift.current(), rep);
    g0.perf_vs_prev_target = g0.perf_exact;
    g0.chosen_estimate = g0.perf_exact;
    traj.generations.push_back(std::move(g0));
  }

  std::vector<ExamplePoint> shared_sample;
  for (long long i = 1; i <= cfg.horizon; ++i) {
    const typename F::Concept& target = drift.current();  // f_{i-1}
    const NeighborSet<typename F::Rep> neighbors = fam.neighborhood(rep, rng);

    std::vector<PerformanceValue> estimates;
    estimates.reserve(neighbors.size());
    switch (cfg.mode) {
      case EstimateMode::Oracle:
        for (std::size_t j = 0; j < neighbors.size(); ++j)
          estimates.emplace_back(fam.exact_performance(target, neighbors.member(j)));
        break;
      case EstimateMode::OracleNoiseUniform:
        for (std::size_t j = 0; j < neighbors.size(); ++j) {
          const double exact = fam.exact_performance(target, neighbors.member(j));
          estimates.emplace_back(
              detail::clamp_unit(exact + rng.uniform(-cfg.noise_bound, cfg.noise_bound)));
        }
        break;
      case EstimateMode::OracleNoiseAdversarial:
        for (std::size_t j = 0; j < neighbors.size(); ++j) {
          const double exact = fam.exact_performance(target, neighbors.member(j));
          const double z = j == neighbors.current_index() ? cfg.noise_bound : -cfg.noise_bound;
          estimates.emplace_back(detail::clamp_unit(exact + z));
        }
        break;
      case EstimateMode::Sampling:
        if constexpr (SamplingFamily<F>) {
          shared_sample.clear();
          shared_sample.reserve(static_cast<std::size_t>(cfg.sample_size));
          std::vector<double> labels;
          labels.reserve(static_cast<std::size_t>(cfg.sample_size));
          for (long long k = 0; k < cfg.sample_size; ++k) {
            shared_sample.push_back(fam.sample_point(rng));
            labels.push_back(fam.eval_concept(target, shared_sample.back()));
          }
          for (std::size_t j = 0; j < neighbors.size(); ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < shared_sample.size(); ++k)
              sum += labels[k] * fam.eval_representation(neighbors.member(j), shared_sample[k]);
            estimates.emplace_back(sum / static_cast<double>(cfg.sample_size));
          }
        } else {
          throw ConfigError("run_evolution: family does not support sampling estimates");
        }
        break;
    }

    double tolerance = cfg.tolerance;
    if constexpr (HasStateTolerance<F>) tolerance = fam.tolerance(rep);
    const SelectionResult sel =
        select_mutation(neighbors, estimates, tolerance, rng, cfg.min_class_weight);
    rep = neighbors.member(sel.index);

    GenerationLog log;
    log.generation = i;
    log.selection = sel.cls;
    log.perf_vs_prev_target = fam.exact_performance(target, rep);
    log.chosen_estimate = estimates[sel.index].value();
    if (cfg.record_estimates) {
      log.estimates.reserve(estimates.size());
      for (const auto& e : estimates) log.estimates.push_back(e.value());
    }
    const typename F::Concept& next_target = drift.next_target();  // f_i
    log.target_id = fam.concept_id(next_target);
    log.rep_id = fam.rep_id(rep);
    log.perf_exact = fam.exact_performance(next_target, rep);
    traj.generations.push_back(std::move(log));
  }
  return traj;
}

struct TrajectoryAnalysis {
  bool monotone = false;          // every Perf_i >= Perf_0
  bool quasi_monotone = false;    // every Perf_i >= Perf_0 - eps
  bool strict_until_eps = false;  // per-step gain >= min_gain until 1 - eps
  double perpetual_accuracy = 0.0;  // fraction of i >= g with Perf_i >= 1 - eps
};

/// Analyze the logged exact performances. Monotonicity compares against the
/// initial representation (not the previous one); the strict check demands a
/// per-step gain of at least min_gain, measured against the selection-round
/// target, whenever the previous performance was below 1 - eps.
inline TrajectoryAnalysis analyze_trajectory(const TrajectoryRecord& traj, double epsilon,
                                             double min_gain, long long settle_generation) {
  if (traj.size() == 0) throw std::invalid_argument("analyze_trajectory: empty trajectory");
  constexpr double kTol = 1e-12;
  TrajectoryAnalysis out;
  const double p0 = traj[0].perf_exact;
  out.monotone = true;
  out.quasi_monotone = true;
  out.strict_until_eps = true;
  long long settled = 0, good = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double p = traj[i].perf_exact;
    if (p < p0 - kTol) out.monotone = false;
    if (p < p0 - epsilon - kTol) out.quasi_monotone = false;
    if (i >= 1) {
      const double prev = traj[i - 1].perf_exact;
      const double gain = traj[i].perf_vs_prev_target - prev;
      if (prev < 1.0 - epsilon - kTol && gain < min_gain - kTol) out.strict_until_eps = false;
    }
    if (static_cast<long long>(i) >= settle_generation) {
      ++settled;
      if (p >= 1.0 - epsilon - kTol) ++good;
    }
  }
  out.perpetual_accuracy =
      settled > 0 ? static_cast<double>(good) / static_cast<double>(settled) : 0.0;
  return out;
}

}  // namespace evodrift
