#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "evodrift/conjunction.hpp"
#include "evodrift/engine.hpp"
#include "evodrift/hyperplane.hpp"

using namespace evodrift;

namespace {

EngineConfig oracle_config(double tolerance, long long horizon, double epsilon,
                           std::uint64_t seed) {
  EngineConfig c;
  c.tolerance = tolerance;
  c.horizon = horizon;
  c.epsilon = epsilon;
  c.rng_seed = seed;
  c.record_estimates = false;
  return c;
}

}  // namespace

TEST_CASE("empirical performance basics") {
  MonotoneConjunctionFamily fam(3, 0.2);
  Rng rng(1);
  const auto f = Conjunction::parse("1,2");

  SECTION("identical pair estimates exactly 1") {
    for (int s : {1, 7, 100})
      CHECK(empirical_performance(fam, f, f, s, rng).value() == 1.0);
  }
  SECTION("contradictory pair estimates exactly -1") {
    const auto r = Conjunction::parse("-1,-2");
    // f and -f disagree... use the true negation via a general family
    GeneralConjunctionFamily gf(3, 0.2);
    const auto target = Conjunction::parse("1");
    const auto neg = Conjunction::parse("-1");
    for (int s : {1, 13}) CHECK(empirical_performance(gf, target, neg, s, rng).value() == -1.0);
    (void)r;
  }
  SECTION("large-sample estimate approaches the enumerated value 0.5") {
    // Exact value for f={1}, r={1,2} over {-1,1}^3 by enumeration: err=1/4.
    const auto target = Conjunction::parse("1");
    const auto rep = Conjunction::parse("1,2");
    std::vector<double> x(3);
    long long disagreements = 0;
    for (int mask = 0; mask < 8; ++mask) {
      for (int j = 0; j < 3; ++j) x[static_cast<std::size_t>(j)] = (mask >> j) & 1 ? 1.0 : -1.0;
      if (target.evaluate(x) != rep.evaluate(x)) ++disagreements;
    }
    REQUIRE(disagreements == 2);  // err = 1/4, perf = 0.5
    const auto est = empirical_performance(fam, target, rep, 1000000, rng);
    CHECK(std::fabs(est.value() - 0.5) < 0.01);
  }
}

TEST_CASE("estimator calibration matches the Hoeffding sizing") {
  MonotoneConjunctionFamily fam(3, 0.2);
  const auto target = Conjunction::parse("1");
  const auto rep = Conjunction::parse("1,2");  // exact Perf = 0.5
  const double Z = 0.1, delta = 0.2;
  const auto s = hoeffding_sample_size(Z, delta, 1.0);
  Rng rng(55);
  int misses = 0;
  const int reps = 400;
  double mean = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double v = empirical_performance(fam, target, rep, s, rng).value();
    mean += v;
    if (std::fabs(v - 0.5) > Z) ++misses;
  }
  CHECK(misses <= static_cast<int>(delta * reps));  // bound is loose in practice
  CHECK(std::fabs(mean / reps - 0.5) < 0.01);       // unbiased
}

TEST_CASE("run at the optimum stays at the optimum") {
  // Short target: every move away from f is deleterious, so the trajectory
  // is pinned at performance 1.
  const int n = 10;
  const double eps = 0.2;
  MonotoneConjunctionFamily fam(n, eps);
  const auto f = Conjunction::parse("1,2");
  auto schedule = constant_schedule(f);
  const auto params = evolution_parameters(9.0 / (eps * eps), 1.0 + n + n * n / 4.0, eps, false);
  const auto traj =
      run_evolution(fam, f, schedule, oracle_config(params.tolerance, 300, eps, 3));
  REQUIRE(traj.size() == 301);
  for (const auto& g : traj.generations) {
    CHECK(g.perf_exact == 1.0);
    CHECK(g.rep_id == "1,2");
  }
}

TEST_CASE("oracle-mode convergence without drift within 8b generations") {
  const int n = 10;
  const double eps = 0.2;
  const double b = 9.0 / (eps * eps);
  MonotoneConjunctionFamily fam(n, eps);
  const auto params = evolution_parameters(b, 1.0 + n + n * n / 4.0, eps, false);
  for (std::uint64_t seed : {11u, 22u, 33u, 44u}) {
    Rng setup(seed);
    std::vector<int> lits;
    for (int v = 1; v <= 6; ++v) lits.push_back(v);
    auto schedule = constant_schedule(Conjunction::of(lits));
    const auto traj = run_evolution(fam, Conjunction(), schedule,
                                    oracle_config(params.tolerance, params.generations, eps, seed));
    CHECK(traj.generations.back().perf_exact >= 1.0 - eps - 1e-12);

    // Strict regime: every selection below 1 - eps/2 gains at least t.
    for (std::size_t i = 1; i < traj.size(); ++i) {
      const double prev = traj[i - 1].perf_exact;
      if (prev < 1.0 - eps / 2.0 - 1e-12) {
        CHECK(traj[i].selection == SelectionClass::Beneficial);
        CHECK(traj[i].perf_vs_prev_target - prev >= params.tolerance - 1e-12);
      }
    }
    const auto analysis = analyze_trajectory(traj, eps, 1.0 / (4.0 * b), params.generations);
    CHECK(analysis.strict_until_eps);
    CHECK(analysis.perpetual_accuracy == 1.0);
  }
}

TEST_CASE("convergence survives adversarial bounded noise") {
  const int n = 8;
  const double eps = 0.25;
  const double b = 9.0 / (eps * eps);
  MonotoneConjunctionFamily fam(n, eps);
  const auto params = evolution_parameters(b, 1.0 + n + n * n / 4.0, eps, true);
  EngineConfig cfg = oracle_config(params.tolerance, params.generations, eps, 6);
  cfg.mode = EstimateMode::OracleNoiseAdversarial;
  cfg.noise_bound = 1.0 / (8.0 * b);
  auto schedule = constant_schedule(Conjunction::parse("1,2,3"));
  const auto traj = run_evolution(fam, Conjunction(), schedule, cfg);
  CHECK(traj.generations.back().perf_exact >= 1.0 - eps - 1e-12);
}

TEST_CASE("sampling mode uses one shared sample per generation") {
  // With a shared sample the current representation's estimate equals the
  // estimate of the identical member, so selection stays well defined; we
  // just exercise the path end to end on a small run.
  const int n = 6;
  const double eps = 0.3;
  MonotoneConjunctionFamily fam(n, eps);
  EngineConfig cfg = oracle_config(0.05, 60, eps, 17);
  cfg.mode = EstimateMode::Sampling;
  cfg.sample_size = 4000;
  auto schedule = constant_schedule(Conjunction::parse("1,2"));
  const auto traj = run_evolution(fam, Conjunction(), schedule, cfg);
  CHECK(traj.generations.back().perf_exact >= 1.0 - eps - 1e-12);
}

TEST_CASE("rotation family converges under steady drift") {
  const int n = 4;
  const double eps = 0.3;
  RotationHyperplaneFamily fam(n, eps);
  const auto params = evolution_parameters(fam.benefit(), fam.neighborhood_bound(), eps, true);
  auto schedule = rotation_drift_schedule(UnitNormal::axis(n, 0), params.drift_bound,
                                          RotationDriftPolicy::Steady, 5);
  std::vector<double> start(static_cast<std::size_t>(n), 0.0);
  start[1] = -1.0;
  const auto traj = run_evolution(fam, UnitNormal(std::move(start)), schedule,
                                  oracle_config(params.tolerance, params.generations, eps, 5));
  CHECK(traj.generations.back().perf_exact >= 1.0 - eps - 1e-12);
  const auto analysis = analyze_trajectory(traj, eps, 1.0 / (4.0 * fam.benefit()), params.generations);
  CHECK(analysis.perpetual_accuracy >= 1.0 - eps);
}

TEST_CASE("trajectories are bit-reproducible for a fixed seed") {
  const int n = 12;
  const double eps = 0.25;
  GeneralConjunctionFamily fam(n, eps);
  const auto params =
      evolution_parameters(9.0 / (eps * eps), 1.0 + 2.0 * n + n * n + 6.0 / eps, eps, true);
  const auto run_once = [&] {
    auto schedule = conjunction_drift_schedule(
        Conjunction::parse("1,2,3,4,5,6,7,8"), 1.0 / 256.0, ConjunctionDriftPolicy::LongSwap,
        n, false, 99);
    EngineConfig cfg = oracle_config(params.tolerance, 400, eps, 41);
    cfg.record_estimates = true;
    return run_evolution(fam, Conjunction(), schedule, cfg);
  };
  const auto a = run_once();
  const auto b = run_once();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].rep_id == b[i].rep_id);
    REQUIRE(a[i].target_id == b[i].target_id);
    REQUIRE(a[i].perf_exact == b[i].perf_exact);
    REQUIRE(a[i].estimates == b[i].estimates);
  }
}

TEST_CASE("trajectory analysis definitions") {
  TrajectoryRecord traj;
  const auto mk = [](double perf, double prev_perf) {
    GenerationLog g;
    g.perf_exact = perf;
    g.perf_vs_prev_target = prev_perf;
    return g;
  };
  SECTION("constant trajectory is monotone and quasi-monotone") {
    for (int i = 0; i < 5; ++i) traj.generations.push_back(mk(0.9, 0.9));
    const auto a = analyze_trajectory(traj, 0.05, 0.0, 2);
    CHECK(a.monotone);
    CHECK(a.quasi_monotone);
    CHECK(a.perpetual_accuracy == 0.0);  // 0.9 < 1 - 0.05
  }
  SECTION("monotonicity compares against the initial representation") {
    traj.generations = {mk(0.0, 0.0), mk(0.5, 0.5), mk(0.4, 0.4)};
    const auto a = analyze_trajectory(traj, 0.05, 0.0, 1);
    CHECK(a.monotone);  // 0.4 >= 0.0
    CHECK(a.quasi_monotone);
  }
  SECTION("a dip below start - eps breaks quasi-monotonicity") {
    traj.generations = {mk(0.5, 0.5), mk(0.39, 0.39)};
    const auto a = analyze_trajectory(traj, 0.05, 0.0, 1);
    CHECK_FALSE(a.monotone);
    CHECK_FALSE(a.quasi_monotone);
  }
  SECTION("horizon-0 trajectories reject") {
    CHECK_THROWS_AS(analyze_trajectory(TrajectoryRecord{}, 0.1, 0.0, 1), std::invalid_argument);
  }
}

TEST_CASE("engine rejects invalid configurations") {
  MonotoneConjunctionFamily fam(4, 0.25);
  auto schedule = constant_schedule(Conjunction::parse("1"));
  EngineConfig cfg = oracle_config(0.1, 0, 0.25, 1);  // horizon 0
  CHECK_THROWS_AS(run_evolution(fam, Conjunction(), schedule, cfg), ConfigError);
  EngineConfig cfg2 = oracle_config(0.1, 5, 0.25, 1);
  // dimension mismatch between target and engine family
  auto bad_schedule = constant_schedule(Conjunction::parse("9"));
  CHECK_THROWS_AS(run_evolution(fam, Conjunction(), bad_schedule, cfg2), std::invalid_argument);
}
