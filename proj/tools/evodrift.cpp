// Command line front end: run / verify / sweep.
//
// Exit codes: 0 success, 1 property violation found by verify,
// 2 configuration error.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evodrift/evodrift.hpp"

namespace {

using evodrift::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "flat JSON config file");
  cmd->add_option("--out", flags.out, "output path (CSV)");
  cmd->add_option("--seed", flags.seed, "base RNG seed")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--threads", flags.threads, "worker threads for trials");
}

std::string resolve_out_path(const std::string& out) {
  if (out.empty()) return out;
  if (out.find('/') != std::string::npos) return out;
  const char* dir = std::getenv("EVODRIFT_OUT_DIR");
  if (dir == nullptr || *dir == '\0') return out;
  return std::string(dir) + "/" + out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == ',')) ++pos;
    if (pos >= text.size()) break;
    std::size_t used = 0;
    out.push_back(std::stod(text.substr(pos), &used));
    pos += used;
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_double_list(text)) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolution with drifting targets: simulation harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "execute seeded trials and write CSV + summary");
  CommonFlags run_flags;
  add_common(run, run_flags);
  std::string family, mode, drift_policy, drift_delta, drift_file, target, start, horizon, sigma,
      lpe;
  int n = -1, target_length = -2, variance_exponent = -1;
  double epsilon = -1.0, noise_bound = -1.0;
  long long trials = -1, sample_size = -1;
  bool quasi = false;
  run->add_option("--family", family,
                  "monotone-conj | general-conj | hyperplane-rotation | "
                  "hyperplane-componentwise | csq-reduction");
  run->add_option("--n", n, "dimension");
  run->add_option("--epsilon", epsilon, "accuracy parameter");
  run->add_option("--mode", mode,
                  "oracle | oracle-noise-uniform | oracle-noise-adversarial | sampling");
  run->add_option("--noise-bound", noise_bound, "Z for the noise modes");
  run->add_option("--sample-size", sample_size, "s for sampling mode");
  run->add_option("--drift-policy", drift_policy,
                  "constant | long-swap | shrink-grow | steady-rotation | random-walk | file");
  run->add_option("--drift-delta", drift_delta, "number or theorem-default");
  run->add_option("--drift-file", drift_file, "adversarial schedule, one concept per line");
  run->add_option("--target", target, "fixed target encoding");
  run->add_option("--target-length", target_length, "random conjunction target length");
  run->add_option("--start", start, "start representation encoding");
  run->add_option("--trials", trials, "independent seeded trials");
  run->add_option("--horizon", horizon, "number or theorem-default-g / theorem-default-2g");
  run->add_option("--k", variance_exponent, "variance exponent (component-wise)");
  run->add_option("--sigma", sigma, "comma list or random-band");
  run->add_flag("--quasi", quasi, "quasi-monotonic reduction variant");
  run->add_option("--lpe", lpe, "suppressed | stochastic (csq-reduction)");

  // verify
  auto* verify = app.add_subcommand("verify", "strictly-beneficial property sweep");
  CommonFlags verify_flags;
  add_common(verify, verify_flags);
  std::string v_family, v_eps = "0.2", v_ns = "8";
  long long v_cases = 1000;
  int v_k = 1;
  verify->add_option("--family", v_family, "family to check")->required();
  verify->add_option("--epsilon", v_eps, "comma list of epsilons");
  verify->add_option("--n", v_ns, "comma list of dimensions");
  verify->add_option("--cases", v_cases, "random cases per cell");
  verify->add_option("--k", v_k, "variance exponent (component-wise)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "grid of success rates along one axis");
  CommonFlags sweep_flags;
  add_common(sweep, sweep_flags);
  std::string axis = "delta-multiplier", values = "0,1,2,10";
  sweep->add_option("--axis", axis, "delta-multiplier | epsilon");
  sweep->add_option("--values", values, "comma list of axis values");
  std::string s_family, s_mode, s_policy;
  int s_n = -1;
  double s_epsilon = -1.0;
  long long s_trials = -1;
  sweep->add_option("--family", s_family, "family");
  sweep->add_option("--n", s_n, "dimension");
  sweep->add_option("--epsilon", s_epsilon, "accuracy parameter");
  sweep->add_option("--trials", s_trials, "trials per cell");
  sweep->add_option("--drift-policy", s_policy, "drift policy");
  sweep->add_option("--mode", s_mode, "estimate mode");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig cfg;
      if (!run_flags.config_path.empty()) cfg = evodrift::load_config_file(run_flags.config_path);
      if (!family.empty()) cfg.family = family;
      if (n >= 0) cfg.n = n;
      if (epsilon >= 0) cfg.epsilon = epsilon;
      if (!mode.empty()) cfg.mode = mode;
      if (noise_bound >= 0) cfg.noise_bound = noise_bound;
      if (sample_size >= 0) cfg.sample_size = sample_size;
      if (!drift_policy.empty()) cfg.drift_policy = drift_policy;
      if (!drift_delta.empty()) cfg.drift_delta = drift_delta;
      if (!drift_file.empty()) cfg.drift_file = drift_file;
      if (!target.empty()) cfg.target = target;
      if (target_length != -2) cfg.target_length = target_length;
      if (!start.empty()) cfg.start = start;
      if (trials >= 0) cfg.trials = trials;
      if (!horizon.empty()) cfg.horizon = horizon;
      if (run_flags.seed_set) cfg.seed = run_flags.seed;
      if (variance_exponent >= 0) cfg.variance_exponent = variance_exponent;
      if (!sigma.empty()) cfg.sigma = sigma;
      if (quasi) cfg.quasi_monotonic = true;
      if (!lpe.empty()) cfg.lpe = lpe;
      if (run_flags.threads > 0) cfg.threads = run_flags.threads;
      if (!run_flags.out.empty()) cfg.out = run_flags.out;
      cfg.out = resolve_out_path(cfg.out);

      const auto out = evodrift::run_experiment(cfg);
      if (!cfg.out.empty()) {
        evodrift::write_file(cfg.out, out.csv);
        evodrift::write_file(cfg.out + ".summary.json", out.summary.to_json().dump(2) + "\n");
      }
      std::cout << out.summary.to_json().dump() << "\n";
      return 0;
    }
    if (verify->parsed()) {
      const auto report =
          evodrift::run_verify(v_family, parse_int_list(v_ns), parse_double_list(v_eps), v_cases,
                               verify_flags.seed, v_k);
      const std::string csv = report.to_csv();
      if (!verify_flags.out.empty())
        evodrift::write_file(resolve_out_path(verify_flags.out), csv);
      std::cout << csv;
      std::cout << "violations " << report.total_violations << "\n";
      return report.total_violations == 0 ? 0 : 1;
    }
    if (sweep->parsed()) {
      ExperimentConfig base;
      if (!sweep_flags.config_path.empty())
        base = evodrift::load_config_file(sweep_flags.config_path);
      if (!s_family.empty()) base.family = s_family;
      if (s_n >= 0) base.n = s_n;
      if (s_epsilon >= 0) base.epsilon = s_epsilon;
      if (s_trials >= 0) base.trials = s_trials;
      if (!s_policy.empty()) base.drift_policy = s_policy;
      if (!s_mode.empty()) base.mode = s_mode;
      if (sweep_flags.seed_set) base.seed = sweep_flags.seed;
      if (sweep_flags.threads > 0) base.threads = sweep_flags.threads;

      const auto table = evodrift::run_sweep(base, axis, parse_double_list(values));
      const std::string csv = table.to_csv();
      if (!sweep_flags.out.empty()) evodrift::write_file(resolve_out_path(sweep_flags.out), csv);
      std::cout << csv;
      return 0;
    }
  } catch (const evodrift::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
