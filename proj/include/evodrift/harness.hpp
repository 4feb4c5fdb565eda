#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evodrift/conjunction.hpp"
#include "evodrift/core.hpp"
#include "evodrift/csq.hpp"
#include "evodrift/drift.hpp"
#include "evodrift/engine.hpp"
#include "evodrift/hyperplane.hpp"
#include "evodrift/rng.hpp"

namespace evodrift {

using Json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Flat run configuration. File values (a flat JSON object) are merged
/// first, then explicit CLI overrides.
struct ExperimentConfig {
  std::string family = "monotone-conj";
  int n = 8;
  double epsilon = 0.2;
  std::string mode = "oracle";
  double noise_bound = -1.0;      // < 0: theorem default 1/(8b)
  long long sample_size = -1;     // < 0: theorem default
  std::string drift_policy = "constant";
  std::string drift_delta = "theorem-default";
  std::string drift_file;
  std::string target;             // family encoding; empty = random per trial
  int target_length = -1;         // random conjunction targets
  std::string start;              // family encoding; empty = family default
  long long trials = 1;
  std::string horizon = "theorem-default-2g";
  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;
  int variance_exponent = 1;      // k (component-wise family)
  std::string sigma = "random-band";
  bool quasi_monotonic = false;   // csq-reduction
  std::string lpe = "suppressed";  // csq-reduction: suppressed | stochastic

  static ExperimentConfig from_json(const Json& j) {
    ExperimentConfig c;
    c.merge_json(j);
    return c;
  }

  void merge_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "family") family = value.get<std::string>();
      else if (key == "n") n = value.get<int>();
      else if (key == "epsilon") epsilon = value.get<double>();
      else if (key == "mode") mode = value.get<std::string>();
      else if (key == "noise_bound") noise_bound = value.get<double>();
      else if (key == "sample_size") sample_size = value.get<long long>();
      else if (key == "drift_policy") drift_policy = value.get<std::string>();
      else if (key == "drift_delta")
        drift_delta = value.is_string() ? value.get<std::string>() : format_double(value.get<double>());
      else if (key == "drift_file") drift_file = value.get<std::string>();
      else if (key == "target") target = value.get<std::string>();
      else if (key == "target_length") target_length = value.get<int>();
      else if (key == "start") start = value.get<std::string>();
      else if (key == "trials") trials = value.get<long long>();
      else if (key == "horizon")
        horizon = value.is_string() ? value.get<std::string>() : std::to_string(value.get<long long>());
      else if (key == "seed") seed = value.get<std::uint64_t>();
      else if (key == "out") out = value.get<std::string>();
      else if (key == "threads") threads = value.get<int>();
      else if (key == "variance_exponent") variance_exponent = value.get<int>();
      else if (key == "sigma")
        sigma = value.is_string() ? value.get<std::string>() : Json(value).dump();
      else if (key == "quasi_monotonic") quasi_monotonic = value.get<bool>();
      else if (key == "lpe") lpe = value.get<std::string>();
      else throw ConfigError("unknown config key: " + key);
    }
  }

  /// Experiment-defining fields only; `out` and `threads` are execution
  /// parameters that cannot change results, so they stay out of the
  /// embedded header and parallel runs stay byte-identical with serial ones.
  Json to_json() const {
    return Json{{"family", family},
                {"n", n},
                {"epsilon", epsilon},
                {"mode", mode},
                {"noise_bound", noise_bound},
                {"sample_size", sample_size},
                {"drift_policy", drift_policy},
                {"drift_delta", drift_delta},
                {"drift_file", drift_file},
                {"target", target},
                {"target_length", target_length},
                {"start", start},
                {"trials", trials},
                {"horizon", horizon},
                {"seed", seed},
                {"variance_exponent", variance_exponent},
                {"sigma", sigma},
                {"quasi_monotonic", quasi_monotonic},
                {"lpe", lpe}};
  }
};

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return ExperimentConfig::from_json(j);
}

struct TrialResult {
  double final_perf = 0.0;   // Perf at the last generation (vs its target)
  double settle_perf = 0.0;  // Perf at generation g
  double perpetual_fraction = 0.0;
  bool monotone = false;
  bool quasi_monotone = false;
  bool strict_until_eps = false;
  bool success = false;  // final_perf >= 1 - eps
};

struct ExperimentSummary {
  Json resolved_config;
  double epsilon = 0.0;
  long long generations = 0;  // g
  long long horizon = 0;
  double tolerance = 0.0;
  double drift_delta = 0.0;
  double benefit = 0.0;
  long long sample_size = 0;
  std::vector<TrialResult> per_trial;
  double success_rate = 0.0;

  Json to_json() const {
    Json trials_json = Json::array();
    for (const auto& t : per_trial)
      trials_json.push_back(Json{{"final_perf", t.final_perf},
                                 {"settle_perf", t.settle_perf},
                                 {"perpetual_fraction", t.perpetual_fraction},
                                 {"monotone", t.monotone},
                                 {"quasi_monotone", t.quasi_monotone},
                                 {"strict_until_eps", t.strict_until_eps},
                                 {"success", t.success}});
    return Json{{"config", resolved_config},
                {"epsilon", epsilon},
                {"generations", generations},
                {"horizon", horizon},
                {"tolerance", tolerance},
                {"drift_delta", drift_delta},
                {"benefit", benefit},
                {"sample_size", sample_size},
                {"success_rate", success_rate},
                {"trials", per_trial.size()},
                {"per_trial", trials_json}};
  }
};

struct RunOutput {
  ExperimentSummary summary;
  std::string csv;
};

namespace harness_detail {

struct TrialArtifacts {
  TrajectoryRecord trajectory;
  TrialResult result;
};

/// Run `trials` independent jobs over `threads` workers; results are kept in
/// trial order so serial and parallel execution emit identical output.
template <typename Job>
std::vector<TrialArtifacts> run_trials(long long trials, int threads, Job&& job) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  std::vector<TrialArtifacts> results(static_cast<std::size_t>(trials));
  if (threads == 1) {
    for (long long t = 0; t < trials; ++t) results[static_cast<std::size_t>(t)] = job(t);
    return results;
  }
  std::atomic<long long> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const long long t = next.fetch_add(1);
        if (t >= trials || failed.load()) return;
        try {
          results[static_cast<std::size_t>(t)] = job(t);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(failure);
  return results;
}

inline std::string render_csv(const Json& resolved_config,
                              const std::vector<TrialArtifacts>& trials) {
  std::string csv = "# evodrift run\n# config " + resolved_config.dump() + "\n";
  csv += "trial,generation,perf_exact,selection_class,target_id,rep_id\n";
  for (std::size_t t = 0; t < trials.size(); ++t) {
    for (const auto& g : trials[t].trajectory.generations) {
      csv += std::to_string(t);
      csv += ',';
      csv += std::to_string(g.generation);
      csv += ',';
      csv += format_double(g.perf_exact);
      csv += ',';
      csv += to_string(g.selection);
      csv += ',';
      csv += csv_quote(g.target_id);
      csv += ',';
      csv += csv_quote(g.rep_id);
      csv += '\n';
    }
  }
  return csv;
}

inline long long resolve_horizon(const std::string& text, long long g) {
  if (text == "theorem-default-g") return g;
  if (text == "theorem-default-2g") return 2 * g;
  try {
    const long long h = std::stoll(text);
    if (h < 1) throw ConfigError("horizon must be >= 1 (trajectories include generation 0)");
    return h;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad horizon: " + text);
  }
}

inline double resolve_delta(const std::string& text, double theorem_delta) {
  if (text == "theorem-default") return theorem_delta;
  try {
    const double d = std::stod(text);
    if (!(d >= 0.0)) throw ConfigError("drift_delta must be >= 0");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad drift_delta: " + text);
  }
}

inline EstimateMode resolve_mode(const std::string& text) {
  if (text == "oracle") return EstimateMode::Oracle;
  if (text == "oracle-noise-uniform") return EstimateMode::OracleNoiseUniform;
  if (text == "oracle-noise-adversarial") return EstimateMode::OracleNoiseAdversarial;
  if (text == "sampling") return EstimateMode::Sampling;
  throw ConfigError("unknown mode: " + text);
}

inline Conjunction random_monotone_conjunction(int n, int length, Rng& rng) {
  if (length > n) throw ConfigError("target length exceeds dimension");
  std::vector<int> vars;
  for (int v = 1; v <= n; ++v) vars.push_back(v);
  std::vector<int> lits;
  for (int i = 0; i < length; ++i) {
    const std::size_t j = rng.index(vars.size());
    lits.push_back(vars[j]);
    vars.erase(vars.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return Conjunction::of(std::move(lits));
}

inline Conjunction random_general_conjunction(int n, int length, Rng& rng) {
  auto c = random_monotone_conjunction(n, length, rng);
  std::vector<int> lits = c.literals();
  for (auto& l : lits)
    if (rng.next_u64() & 1ULL) l = -l;
  return Conjunction::of(std::move(lits));
}

inline UnitNormal random_unit(int n, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(n));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& c : v) {
      c = rng.normal();
      norm2 += c * c;
    }
  } while (!(norm2 > 0.0));
  return UnitNormal(std::move(v));
}

inline std::vector<double> resolve_sigma(const std::string& text, int n, int k, Rng& rng) {
  const double lo = std::pow(1.0 / n, k);
  if (text == "random-band") {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto& x : s) x = rng.uniform(lo, 1.0);
    return s;
  }
  std::vector<double> s;
  std::size_t pos = 0;
  const auto is_sep = [](char c) { return c == ' ' || c == ',' || c == '[' || c == ']'; };
  while (pos < text.size()) {
    while (pos < text.size() && is_sep(text[pos])) ++pos;
    if (pos >= text.size()) break;
    std::size_t used = 0;
    s.push_back(std::stod(text.substr(pos), &used));
    pos += used;
  }
  if (static_cast<int>(s.size()) != n)
    throw ConfigError("sigma needs exactly n entries or \"random-band\"");
  return s;
}

}  // namespace harness_detail

/// Execute `trials` seeded runs of the configured family and collect the
/// per-generation CSV plus a summary record.
inline RunOutput run_experiment(const ExperimentConfig& cfg) {
  using namespace harness_detail;
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ConfigError("epsilon outside (0, 1)");
  if (cfg.n < 1) throw ConfigError("n must be >= 1");

  if (cfg.mode == "sampling" && cfg.sample_size <= 0)
    throw ConfigError(
        "sampling mode needs an explicit sample_size; the derived worst-case bound is "
        "impractically large");

  ExperimentSummary summary;
  summary.resolved_config = cfg.to_json();
  summary.epsilon = cfg.epsilon;

  std::vector<TrialArtifacts> artifacts;

  auto finish_trial = [&](const TrajectoryRecord& traj, double epsilon, double min_gain,
                          long long g) {
    TrialArtifacts a;
    a.trajectory = traj;
    const auto analysis = analyze_trajectory(traj, epsilon, min_gain, g);
    a.result.final_perf = traj.generations.back().perf_exact;
    const auto gi = static_cast<std::size_t>(g);
    a.result.settle_perf =
        gi < traj.size() ? traj[gi].perf_exact : traj.generations.back().perf_exact;
    a.result.perpetual_fraction = analysis.perpetual_accuracy;
    a.result.monotone = analysis.monotone;
    a.result.quasi_monotone = analysis.quasi_monotone;
    a.result.strict_until_eps = analysis.strict_until_eps;
    a.result.success = a.result.final_perf >= 1.0 - epsilon - 1e-12;
    return a;
  };

  if (cfg.family == "monotone-conj" || cfg.family == "general-conj") {
    const bool monotone = cfg.family == "monotone-conj";
    const double b = 9.0 / (cfg.epsilon * cfg.epsilon);
    const double p = monotone
                         ? 1.0 + cfg.n + cfg.n * static_cast<double>(cfg.n) / 4.0
                         : 1.0 + 2.0 * cfg.n + cfg.n * static_cast<double>(cfg.n) + 6.0 / cfg.epsilon;
    const auto params = evolution_parameters(b, p, cfg.epsilon, true);
    const double delta = resolve_delta(cfg.drift_delta, params.drift_bound);
    const long long horizon = resolve_horizon(cfg.horizon, params.generations);
    summary.generations = params.generations;
    summary.horizon = horizon;
    summary.tolerance = params.tolerance;
    summary.drift_delta = delta;
    summary.benefit = b;
    summary.sample_size = cfg.sample_size > 0 ? cfg.sample_size : params.sample_size;
    const int q = representation_length_cap(cfg.epsilon);

    std::optional<Conjunction> fixed_target;
    if (!cfg.target.empty()) fixed_target = Conjunction::parse(cfg.target);
    std::optional<Conjunction> fixed_start;
    if (!cfg.start.empty()) fixed_start = Conjunction::parse(cfg.start);
    std::vector<Conjunction> file_targets;
    if (cfg.drift_policy == "file") file_targets = load_conjunction_sequence(cfg.drift_file);

    artifacts = run_trials(cfg.trials, cfg.threads, [&](long long trial) {
      const auto trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
      Rng setup(derive_seed(trial_seed, 2));
      Conjunction target =
          fixed_target ? *fixed_target
                       : (monotone ? random_monotone_conjunction(
                                         cfg.n,
                                         cfg.target_length >= 0
                                             ? cfg.target_length
                                             : static_cast<int>(setup.index(
                                                   static_cast<std::size_t>(cfg.n) + 1)),
                                         setup)
                                   : random_general_conjunction(
                                         cfg.n,
                                         cfg.target_length >= 0
                                             ? cfg.target_length
                                             : static_cast<int>(setup.index(
                                                   static_cast<std::size_t>(cfg.n) + 1)),
                                         setup));
      Conjunction start_rep = fixed_start ? *fixed_start : Conjunction();
      if (static_cast<int>(start_rep.size()) > q)
        throw ConfigError("start representation longer than the length cap");

      auto oracle = [](const Conjunction& a, const Conjunction& bnc) {
        return conjunction_performance(a, bnc).value();
      };
      DriftSchedule<Conjunction> schedule = [&] {
        if (cfg.drift_policy == "constant") return constant_schedule(target);
        if (cfg.drift_policy == "long-swap")
          return conjunction_drift_schedule(target, delta, ConjunctionDriftPolicy::LongSwap,
                                            cfg.n, monotone, derive_seed(trial_seed, 1));
        if (cfg.drift_policy == "shrink-grow")
          return conjunction_drift_schedule(target, delta, ConjunctionDriftPolicy::ShrinkGrow,
                                            cfg.n, monotone, derive_seed(trial_seed, 1));
        if (cfg.drift_policy == "file") return fixed_sequence_schedule(file_targets, delta, oracle);
        throw ConfigError("unknown drift policy for conjunctions: " + cfg.drift_policy);
      }();

      EngineConfig ec;
      ec.tolerance = params.tolerance;
      ec.mode = resolve_mode(cfg.mode);
      ec.noise_bound = cfg.noise_bound > 0 ? cfg.noise_bound : 1.0 / (8.0 * b);
      ec.sample_size = summary.sample_size;
      ec.horizon = horizon;
      ec.epsilon = cfg.epsilon;
      ec.rng_seed = derive_seed(trial_seed, 0);
      ec.record_estimates = false;

      TrajectoryRecord traj;
      if (monotone) {
        MonotoneConjunctionFamily fam(cfg.n, cfg.epsilon);
        traj = run_evolution(fam, start_rep, schedule, ec);
      } else {
        GeneralConjunctionFamily fam(cfg.n, cfg.epsilon);
        traj = run_evolution(fam, start_rep, schedule, ec);
      }
      return finish_trial(traj, cfg.epsilon, 1.0 / (4.0 * b), params.generations);
    });
  } else if (cfg.family == "hyperplane-rotation") {
    if (cfg.n < 2) throw ConfigError("hyperplane-rotation needs n >= 2");
    RotationHyperplaneFamily proto(cfg.n, cfg.epsilon);
    const auto params =
        evolution_parameters(proto.benefit(), proto.neighborhood_bound(), cfg.epsilon, true);
    const double delta = resolve_delta(cfg.drift_delta, params.drift_bound);
    const long long horizon = resolve_horizon(cfg.horizon, params.generations);
    summary.generations = params.generations;
    summary.horizon = horizon;
    summary.tolerance = params.tolerance;
    summary.drift_delta = delta;
    summary.benefit = proto.benefit();
    summary.sample_size = cfg.sample_size > 0 ? cfg.sample_size : params.sample_size;

    std::optional<UnitNormal> fixed_target;
    if (!cfg.target.empty()) fixed_target = UnitNormal::parse(cfg.target);
    std::optional<UnitNormal> fixed_start;
    if (!cfg.start.empty()) fixed_start = UnitNormal::parse(cfg.start);
    std::vector<UnitNormal> file_targets;
    if (cfg.drift_policy == "file") file_targets = load_vector_sequence(cfg.drift_file);

    artifacts = run_trials(cfg.trials, cfg.threads, [&](long long trial) {
      const auto trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
      Rng setup(derive_seed(trial_seed, 2));
      UnitNormal target = fixed_target ? *fixed_target : random_unit(cfg.n, setup);
      UnitNormal start_rep = fixed_start ? *fixed_start : random_unit(cfg.n, setup);

      auto oracle = [](const UnitNormal& a, const UnitNormal& bv) {
        return spherical_performance(a, bv).value();
      };
      DriftSchedule<UnitNormal> schedule = [&] {
        if (cfg.drift_policy == "constant") return constant_schedule(target);
        if (cfg.drift_policy == "steady-rotation")
          return rotation_drift_schedule(target, delta, RotationDriftPolicy::Steady,
                                         derive_seed(trial_seed, 1));
        if (cfg.drift_policy == "random-walk")
          return rotation_drift_schedule(target, delta, RotationDriftPolicy::RandomWalk,
                                         derive_seed(trial_seed, 1));
        if (cfg.drift_policy == "file") return fixed_sequence_schedule(file_targets, delta, oracle);
        throw ConfigError("unknown drift policy for rotation hyperplanes: " + cfg.drift_policy);
      }();

      EngineConfig ec;
      ec.tolerance = params.tolerance;
      ec.mode = resolve_mode(cfg.mode);
      ec.noise_bound = cfg.noise_bound > 0 ? cfg.noise_bound : 1.0 / (8.0 * proto.benefit());
      ec.sample_size = summary.sample_size;
      ec.horizon = horizon;
      ec.epsilon = cfg.epsilon;
      ec.rng_seed = derive_seed(trial_seed, 0);
      ec.record_estimates = false;

      RotationHyperplaneFamily fam(cfg.n, cfg.epsilon);
      const auto traj = run_evolution(fam, start_rep, schedule, ec);
      return finish_trial(traj, cfg.epsilon, 1.0 / (4.0 * proto.benefit()), params.generations);
    });
  } else if (cfg.family == "hyperplane-componentwise") {
    if (cfg.n < 2) throw ConfigError("hyperplane-componentwise needs n >= 2");
    const double b = 144.0 * cfg.n / std::pow(cfg.epsilon, 6);
    const double p =
        8.0 * std::pow(static_cast<double>(cfg.n), 2 * cfg.variance_exponent + 1) + 2.0 * cfg.n;
    const auto params = evolution_parameters(b, p, cfg.epsilon, true);
    const double delta = resolve_delta(cfg.drift_delta, params.drift_bound);
    const long long horizon = resolve_horizon(cfg.horizon, params.generations);
    summary.generations = params.generations;
    summary.horizon = horizon;
    summary.tolerance = params.tolerance;
    summary.drift_delta = delta;
    summary.benefit = b;
    summary.sample_size = cfg.sample_size > 0 ? cfg.sample_size : params.sample_size;

    if (cfg.drift_policy != "constant" && cfg.drift_policy != "file")
      throw ConfigError(
          "component-wise runs support constant or file schedules; rotation steps are not "
          "guaranteed to respect delta under a product normal distribution");

    std::optional<UnitNormal> fixed_target;
    if (!cfg.target.empty()) fixed_target = UnitNormal::parse(cfg.target);
    std::optional<UnitNormal> fixed_start;
    if (!cfg.start.empty()) fixed_start = UnitNormal::parse(cfg.start);
    std::vector<UnitNormal> file_targets;
    if (cfg.drift_policy == "file") file_targets = load_vector_sequence(cfg.drift_file);

    artifacts = run_trials(cfg.trials, cfg.threads, [&](long long trial) {
      const auto trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
      Rng setup(derive_seed(trial_seed, 2));
      Rng sigma_rng(derive_seed(trial_seed, 4));
      const auto sigma =
          resolve_sigma(cfg.sigma, cfg.n, cfg.variance_exponent, sigma_rng);
      ComponentwiseHyperplaneFamily fam(cfg.n, cfg.epsilon, cfg.variance_exponent, sigma);
      UnitNormal target = fixed_target ? *fixed_target : random_unit(cfg.n, setup);
      UnitNormal start_rep = fixed_start ? *fixed_start : random_unit(cfg.n, setup);

      auto oracle = [&fam](const UnitNormal& a, const UnitNormal& bv) {
        return fam.exact_performance(a, bv);
      };
      DriftSchedule<UnitNormal> schedule =
          cfg.drift_policy == "constant"
              ? constant_schedule(target)
              : fixed_sequence_schedule(file_targets, delta, oracle);

      EngineConfig ec;
      ec.tolerance = params.tolerance;
      ec.mode = resolve_mode(cfg.mode);
      ec.noise_bound = cfg.noise_bound > 0 ? cfg.noise_bound : 1.0 / (8.0 * b);
      ec.sample_size = summary.sample_size;
      ec.horizon = horizon;
      ec.epsilon = cfg.epsilon;
      ec.rng_seed = derive_seed(trial_seed, 0);
      ec.record_estimates = false;

      const auto traj = run_evolution(fam, start_rep, schedule, ec);
      return finish_trial(traj, cfg.epsilon, 1.0 / (4.0 * b), params.generations);
    });
  } else if (cfg.family == "csq-reduction") {
    ToyConjunctionCsq algo(cfg.n);
    CsqReductionFamily<ToyConjunctionCsq> fam(algo, cfg.epsilon, cfg.quasi_monotonic);
    const auto& rp = fam.params();
    const double delta = resolve_delta(cfg.drift_delta, rp.drift_bound);
    const long long horizon = resolve_horizon(cfg.horizon, rp.settle_generations);
    summary.generations = rp.settle_generations;
    summary.horizon = horizon;
    summary.tolerance = rp.tolerance_cap;
    summary.drift_delta = delta;
    summary.benefit = 0.0;
    summary.sample_size = cfg.sample_size > 0 ? cfg.sample_size : rp.sample_size;

    if (cfg.drift_policy != "constant" && cfg.drift_policy != "file")
      throw ConfigError(
          "csq-reduction supports constant or file schedules; the derived drift bound " +
          format_double(rp.drift_bound) +
          " is below the smallest nonzero step between conjunctions at this n");

    std::optional<Conjunction> fixed_target;
    if (!cfg.target.empty()) fixed_target = Conjunction::parse(cfg.target);
    std::vector<Conjunction> file_targets;
    if (cfg.drift_policy == "file") file_targets = load_conjunction_sequence(cfg.drift_file);

    artifacts = run_trials(cfg.trials, cfg.threads, [&](long long trial) {
      const auto trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
      Rng setup(derive_seed(trial_seed, 2));
      Conjunction target =
          fixed_target
              ? *fixed_target
              : random_monotone_conjunction(
                    cfg.n,
                    cfg.target_length >= 0
                        ? cfg.target_length
                        : static_cast<int>(setup.index(static_cast<std::size_t>(cfg.n) + 1)),
                    setup);

      auto start_rep =
          cfg.start.empty()
              ? fam.start(std::nullopt)
              : fam.start(std::optional<Conjunction>(Conjunction::parse(cfg.start)));

      auto oracle = [](const Conjunction& a, const Conjunction& bc) {
        return conjunction_performance(a, bc).value();
      };
      DriftSchedule<Conjunction> schedule =
          cfg.drift_policy == "constant" ? constant_schedule(target)
                                         : fixed_sequence_schedule(file_targets, delta, oracle);

      EngineConfig ec;
      ec.tolerance = rp.tolerance_cap;
      ec.mode = resolve_mode(cfg.mode);
      ec.noise_bound = cfg.noise_bound > 0 ? cfg.noise_bound : rp.estimate_accuracy;
      ec.sample_size = summary.sample_size;
      ec.horizon = horizon;
      ec.epsilon = cfg.epsilon;
      ec.rng_seed = derive_seed(trial_seed, 0);
      ec.record_estimates = false;
      if (cfg.lpe == "suppressed") ec.min_class_weight = 2.0 * rp.rare_weight;
      else if (cfg.lpe != "stochastic") throw ConfigError("lpe must be suppressed or stochastic");

      const auto traj = run_evolution(fam, start_rep, schedule, ec);
      return finish_trial(traj, cfg.epsilon, 0.0, rp.settle_generations);
    });
  } else {
    throw ConfigError("unknown family: " + cfg.family);
  }

  long long succeeded = 0;
  for (const auto& a : artifacts) {
    summary.per_trial.push_back(a.result);
    if (a.result.success) ++succeeded;
  }
  summary.success_rate =
      static_cast<double>(succeeded) / static_cast<double>(summary.per_trial.size());

  RunOutput out;
  out.csv = harness_detail::render_csv(summary.resolved_config, artifacts);
  out.summary = std::move(summary);
  return out;
}

// ---------------------------------------------------------------------------
// verify: strictly-beneficial sweeps against each family's exact oracle.

struct VerifyCell {
  std::string family;
  int n = 0;
  double epsilon = 0.0;
  long long cases = 0;
  long long triggered = 0;    // cases with Perf below the trigger threshold
  long long violations = 0;   // triggered cases with best gain < 1/b
  double min_gain = 2.0;      // smallest best-gain among triggered cases
  double bound = 0.0;         // 1/b
  double trigger = 0.0;       // threshold below which the gain is guaranteed
  double contradictory_fraction = 0.0;  // general conjunctions only
};

struct VerifyReport {
  std::vector<VerifyCell> cells;
  long long total_violations = 0;

  std::string to_csv() const {
    std::string s = "family,n,epsilon,cases,triggered,violations,min_gain,bound,trigger\n";
    for (const auto& c : cells) {
      s += c.family + ',' + std::to_string(c.n) + ',' + format_double(c.epsilon) + ',' +
           std::to_string(c.cases) + ',' + std::to_string(c.triggered) + ',' +
           std::to_string(c.violations) + ',' + format_double(c.min_gain) + ',' +
           format_double(c.bound) + ',' + format_double(c.trigger) + '\n';
    }
    return s;
  }
};

namespace harness_detail {

template <typename Fam, typename DrawCase>
VerifyCell verify_cell(const Fam& fam, const std::string& name, int n, double epsilon,
                       long long cases, double bound, double trigger, Rng& rng,
                       DrawCase&& draw) {
  VerifyCell cell;
  cell.family = name;
  cell.n = n;
  cell.epsilon = epsilon;
  cell.cases = cases;
  cell.bound = bound;
  cell.trigger = trigger;
  long long contradictory = 0;
  for (long long i = 0; i < cases; ++i) {
    auto [f, r, is_contradictory] = draw(rng);
    if (is_contradictory) ++contradictory;
    const double perf = fam.exact_performance(f, r);
    if (perf >= trigger) continue;
    ++cell.triggered;
    const auto neighbors = fam.neighborhood(r, rng);
    double best = -2.0;
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
      const double g = fam.exact_performance(f, neighbors.member(j)) - perf;
      if (g > best) best = g;
    }
    if (best < cell.min_gain) cell.min_gain = best;
    if (best < bound - 1e-12) ++cell.violations;
  }
  cell.contradictory_fraction =
      cases > 0 ? static_cast<double>(contradictory) / static_cast<double>(cases) : 0.0;
  return cell;
}

}  // namespace harness_detail

/// Random (target, representation) sweep asserting the guaranteed gain 1/b
/// whenever performance is below the family's proven trigger threshold.
///
/// The trigger is 1 - eps/2 for rotation separators; the conjunction and
/// component-wise analyses establish the gain below 1 - eps, and for
/// conjunctions the stronger 1 - eps/2 form is genuinely false: a long
/// target with a near-disjoint representation at the length cap (say
/// f = {1..8}, r = {1..5}, eps = 0.1, n = 8) sits in [1 - eps, 1 - eps/2)
/// with zero available gain.
inline VerifyReport run_verify(const std::string& family, const std::vector<int>& ns,
                               const std::vector<double>& epsilons, long long cases,
                               std::uint64_t seed, int variance_exponent = 1) {
  using namespace harness_detail;
  VerifyReport report;
  std::uint64_t cell_index = 0;
  for (int n : ns) {
    for (double eps : epsilons) {
      Rng rng(derive_seed(seed, cell_index++));
      const int q = representation_length_cap(eps);
      if (family == "monotone-conj") {
        MonotoneConjunctionFamily fam(n, eps);
        auto draw = [&](Rng& r) {
          const auto f = random_monotone_conjunction(n, static_cast<int>(r.index(
                                                            static_cast<std::size_t>(n) + 1)),
                                                     r);
          const auto rep = random_monotone_conjunction(
              n, static_cast<int>(r.index(static_cast<std::size_t>(std::min(q, n)) + 1)), r);
          return std::tuple<Conjunction, Conjunction, bool>(f, rep, false);
        };
        report.cells.push_back(verify_cell(fam, family, n, eps, cases, 1.0 / fam.benefit(),
                                           1.0 - eps, rng, draw));
      } else if (family == "general-conj") {
        GeneralConjunctionFamily fam(n, eps);
        auto draw = [&](Rng& r) {
          const auto f = random_general_conjunction(n, static_cast<int>(r.index(
                                                           static_cast<std::size_t>(n) + 1)),
                                                    r);
          auto rep = random_general_conjunction(
              n, static_cast<int>(r.index(static_cast<std::size_t>(std::min(q, n)) + 1)), r);
          bool contradictory = false;
          // Half the cases force a literal contradicting the target.
          if (!f.empty() && !rep.empty() && (r.next_u64() & 1ULL)) {
            auto lits = rep.literals();
            const int fl = f.literals()[r.index(f.size())];
            bool already = false;
            for (int l : lits) already = already || std::abs(l) == std::abs(fl);
            if (!already) {
              lits[r.index(lits.size())] = -fl;
              bool dup = false;
              for (std::size_t a = 0; a < lits.size(); ++a)
                for (std::size_t bq = a + 1; bq < lits.size(); ++bq)
                  dup = dup || std::abs(lits[a]) == std::abs(lits[bq]);
              if (!dup) rep = Conjunction::of(lits);
            }
          }
          const auto counts = detail::count_literals(f, rep);
          contradictory = counts.contradictory;
          return std::tuple<Conjunction, Conjunction, bool>(f, rep, contradictory);
        };
        report.cells.push_back(verify_cell(fam, family, n, eps, cases, 1.0 / fam.benefit(),
                                           1.0 - eps, rng, draw));
      } else if (family == "hyperplane-rotation") {
        if (n < 2) throw ConfigError("hyperplane-rotation needs n >= 2");
        RotationHyperplaneFamily fam(n, eps);
        auto draw = [&](Rng& r) {
          return std::tuple<UnitNormal, UnitNormal, bool>(random_unit(n, r), random_unit(n, r),
                                                          false);
        };
        report.cells.push_back(verify_cell(fam, family, n, eps, cases, 1.0 / fam.benefit(),
                                           1.0 - eps / 2.0, rng, draw));
      } else if (family == "hyperplane-componentwise") {
        if (n < 2) throw ConfigError("hyperplane-componentwise needs n >= 2");
        // Fresh sigma per case: rebuild the family each time.
        VerifyCell cell;
        cell.family = family;
        cell.n = n;
        cell.epsilon = eps;
        cell.cases = cases;
        cell.bound = std::pow(eps, 6) / (144.0 * n);
        cell.trigger = 1.0 - eps;
        cell.min_gain = 2.0;
        for (long long i = 0; i < cases; ++i) {
          const auto sigma = resolve_sigma("random-band", n, variance_exponent, rng);
          ComponentwiseHyperplaneFamily fam(n, eps, variance_exponent, sigma);
          const auto f = random_unit(n, rng);
          const auto rep = random_unit(n, rng);
          const double perf = fam.exact_performance(f, rep);
          if (perf >= cell.trigger) continue;
          ++cell.triggered;
          const auto neighbors = fam.neighborhood(rep, rng);
          double best = -2.0;
          for (std::size_t j = 0; j < neighbors.size(); ++j) {
            const double g = fam.exact_performance(f, neighbors.member(j)) - perf;
            if (g > best) best = g;
          }
          if (best < cell.min_gain) cell.min_gain = best;
          if (best < cell.bound - 1e-12) ++cell.violations;
        }
        report.cells.push_back(cell);
      } else {
        throw ConfigError("verify does not support family: " + family);
      }
    }
  }
  for (const auto& c : report.cells) report.total_violations += c.violations;
  return report;
}

// ---------------------------------------------------------------------------
// sweep: grid of success rates along one axis.

struct SweepCell {
  double axis_value = 0.0;
  double resolved_delta = 0.0;
  double resolved_epsilon = 0.0;
  long long generations = 0;
  double success_rate = 0.0;
  std::string error;
};

struct SweepTable {
  std::string axis;
  std::vector<SweepCell> cells;

  std::string to_csv() const {
    std::string s = "axis,value,delta,epsilon,generations,success_rate,error\n";
    for (const auto& c : cells) {
      s += axis + ',' + format_double(c.axis_value) + ',' + format_double(c.resolved_delta) +
           ',' + format_double(c.resolved_epsilon) + ',' + std::to_string(c.generations) + ',' +
           (c.error.empty() ? format_double(c.success_rate) : std::string("nan")) + ',' +
           csv_quote(c.error) + '\n';
    }
    return s;
  }
};

/// Axis "delta-multiplier" scales the theorem drift bound (values beyond 1
/// explore past the proven region); axis "epsilon" re-resolves every derived
/// parameter per cell.
inline SweepTable run_sweep(const ExperimentConfig& base, const std::string& axis,
                            const std::vector<double>& values) {
  SweepTable table;
  table.axis = axis;
  std::vector<double> cells = values.empty() ? std::vector<double>{1.0} : values;
  for (double v : cells) {
    ExperimentConfig cfg = base;
    SweepCell cell;
    cell.axis_value = v;
    try {
      if (axis == "delta-multiplier") {
        ExperimentConfig probe = base;
        probe.trials = 1;
        probe.horizon = "1";
        probe.drift_delta = "theorem-default";
        probe.drift_policy = "constant";
        const double theorem_delta = run_experiment(probe).summary.drift_delta;
        cfg.drift_delta = format_double(theorem_delta * v);
        if (theorem_delta * v == 0.0) cfg.drift_policy = "constant";
      } else if (axis == "epsilon") {
        cfg.epsilon = v;
      } else {
        throw ConfigError("unknown sweep axis: " + axis);
      }
      const auto out = run_experiment(cfg);
      cell.success_rate = out.summary.success_rate;
      cell.resolved_delta = out.summary.drift_delta;
      cell.resolved_epsilon = out.summary.epsilon;
      cell.generations = out.summary.generations;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    table.cells.push_back(cell);
  }
  return table;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write: " + path);
  out << content;
}

}  // namespace evodrift
