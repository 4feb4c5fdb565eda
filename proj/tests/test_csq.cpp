#include <catch2/catch_amalgamated.hpp>

#include <climits>
#include <cmath>
#include <string>
#include <vector>

#include "evodrift/csq.hpp"
#include "evodrift/engine.hpp"

using namespace evodrift;

namespace {

// Fixed-threshold stub for parameter derivation and consistency checks.
struct StubCsq {
  using Concept = Conjunction;
  using Hypothesis = Conjunction;
  int q = 4;
  double tau = 0.1;
  double theta0 = 0.5;
  double theta_rest = 0.2;
  double corr = 0.3;

  int query_count() const { return q; }
  double tolerance() const { return tau; }
  double query_threshold(const BitString& z) const { return z.empty() ? theta0 : theta_rest; }
  double query_eval(const BitString&, std::span<const double> x) const { return x[0]; }
  double query_correlation(const BitString&, const Conjunction&) const { return corr; }
  Conjunction hypothesis(const BitString&) const { return Conjunction::parse("1"); }
  double hypothesis_performance(const Conjunction& h, const Conjunction& f) const {
    return conjunction_performance(f, h).value();
  }
  double hypothesis_eval(const Conjunction& h, std::span<const double> x) const {
    return h.evaluate(x);
  }
  std::string hypothesis_id(const Conjunction& h) const { return h.to_string(); }
  std::string concept_id(const Conjunction& f) const { return f.to_string(); }
  double concept_eval(const Conjunction& f, std::span<const double> x) const {
    return f.evaluate(x);
  }
  int dimension() const { return 2; }
  ExamplePoint sample_point(Rng& rng) const {
    return sample(DistributionSpec::uniform_hypercube(2), rng);
  }
};

struct ParsedRep {
  std::string h;
  std::string z;
  long long k = -1;
};

ParsedRep parse_rep_id(const std::string& id) {
  ParsedRep out;
  const auto zpos = id.find(";z=");
  const auto kpos = id.find(";k=");
  REQUIRE(id.rfind("h=", 0) == 0);
  REQUIRE(zpos != std::string::npos);
  REQUIRE(kpos != std::string::npos);
  out.h = id.substr(2, zpos - 2);
  out.z = id.substr(zpos + 3, kpos - zpos - 3);
  out.k = std::stoll(id.substr(kpos + 3));
  return out;
}

EngineConfig suppressed_config(const ReductionParameters& p, long long horizon,
                               std::uint64_t seed) {
  EngineConfig c;
  c.tolerance = p.tolerance_cap;
  c.horizon = horizon;
  c.epsilon = p.epsilon;
  c.rng_seed = seed;
  c.min_class_weight = 2.0 * p.rare_weight;
  c.record_estimates = false;
  return c;
}

}  // namespace

TEST_CASE("reduction parameter derivation") {
  StubCsq algo;
  const auto p = derive_reduction_parameters(algo, 0.25);
  CHECK(p.query_count == 4);
  CHECK(p.max_threshold == 0.5);
  CHECK(p.tolerance_cap == Catch::Approx(0.015625).epsilon(1e-14));
  CHECK(p.backslide_steps == 128);
  CHECK(p.rare_weight == Catch::Approx(1.0 / 1088.0).epsilon(1e-13));
  CHECK(p.estimate_accuracy == Catch::Approx(7.8125e-4).epsilon(1e-13));
  CHECK(p.sample_size == 6060083);
  CHECK(p.drift_bound == Catch::Approx(0.025 / 274.0).epsilon(1e-13));
  CHECK(p.settle_generations == 137);

  SECTION("thresholds below the tolerance are rejected") {
    StubCsq bad;
    bad.theta_rest = 0.05;  // below tau
    CHECK_THROWS_AS(derive_reduction_parameters(bad, 0.25), ConfigError);
  }
}

TEST_CASE("reduction representation evaluation") {
  StubCsq algo;
  CsqReductionFamily<StubCsq> fam(algo, 0.25, false);
  const auto h = Conjunction::parse("1");
  const std::vector<double> x{1.0, -1.0};
  const std::vector<double> xneg{-1.0, -1.0};

  SECTION("empty transcript evaluates to (1 - eps/2) h(x)") {
    const auto r = fam.start(h);
    CHECK(fam.eval_representation(r, x) == Catch::Approx(0.875));
    CHECK(fam.eval_representation(r, xneg) == Catch::Approx(-0.875));
  }
  SECTION("all-zero transcript contributes nothing") {
    const auto r = fam.simulating(h, "000");
    CHECK(fam.eval_representation(r, x) == Catch::Approx(0.875));
  }
  SECTION("one-bits add (eps/2q) per query function") {
    const auto r = fam.simulating(h, "10");
    // phi part: (1/q) * x[0] = 0.25; value = 0.875 + 0.125*0.25
    CHECK(fam.eval_representation(r, x) == Catch::Approx(0.875 + 0.125 * 0.25));
  }
  SECTION("the terminal backslide state is the zero function") {
    const auto wK = fam.backslide(h, "1010", fam.params().backslide_steps);
    CHECK(fam.eval_representation(wK, x) == Catch::Approx(0.0).margin(1e-12));
    CHECK(fam.exact_performance(Conjunction::parse("1"), wK) == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("missing hypothesis is the zero function") {
    const auto r = fam.start(std::nullopt);
    CHECK(fam.eval_representation(r, x) == 0.0);
  }
}

TEST_CASE("reduction neighborhoods") {
  StubCsq algo;
  CsqReductionFamily<StubCsq> fam(algo, 0.25, false);
  Rng rng(1);
  const auto h = Conjunction::parse("1");

  SECTION("simulating states always have three neighbors") {
    for (const char* z : {"", "0", "10", "110"}) {
      const auto ns = fam.neighborhood(fam.simulating(h, z), rng);
      CHECK(ns.size() == 3);
      CHECK(parse_rep_id(fam.rep_id(ns.member(1))).z == std::string(z) + "0");
      CHECK(parse_rep_id(fam.rep_id(ns.member(2))).z == std::string(z) + "1");
    }
  }
  SECTION("a full transcript becomes the first backslide state") {
    const auto ns = fam.neighborhood(fam.simulating(h, "101"), rng);
    CHECK(parse_rep_id(fam.rep_id(ns.member(1))).k == 0);
    CHECK(parse_rep_id(fam.rep_id(ns.member(2))).k == 0);
  }
  SECTION("interior backslide states offer the restart hypothesis") {
    const auto ns = fam.neighborhood(fam.backslide(h, "1010", 5), rng);
    REQUIRE(ns.size() == 3);
    const auto jump = parse_rep_id(fam.rep_id(ns.member(2)));
    CHECK(jump.k == -1);
    CHECK(jump.z.empty());
    CHECK(jump.h == "1");
  }
  SECTION("the terminal state pairs with the zero restart") {
    const auto ns = fam.neighborhood(fam.backslide(h, "1010", fam.params().backslide_steps), rng);
    REQUIRE(ns.size() == 2);
    const auto jump = parse_rep_id(fam.rep_id(ns.member(1)));
    CHECK(jump.h == "0");
    CHECK(jump.z.empty());
    CHECK(jump.k == -1);
  }
  SECTION("quasi-monotonic variant also offers the incumbent hypothesis") {
    CsqReductionFamily<StubCsq> qfam(algo, 0.25, true);
    const auto ns = qfam.neighborhood(qfam.backslide(h, "1010", 5), rng);
    REQUIRE(ns.size() == 4);
    const auto keep = parse_rep_id(qfam.rep_id(ns.member(3)));
    CHECK(keep.h == "1");
    CHECK(keep.z.empty());
  }
}

TEST_CASE("state tolerances") {
  StubCsq algo;
  CsqReductionFamily<StubCsq> fam(algo, 0.25, false);
  const auto h = Conjunction::parse("1");
  // eps*theta/(2q) with theta = 0.5 at the root, 0.2 later
  CHECK(fam.tolerance(fam.start(h)) == Catch::Approx(0.25 * 0.5 / 8.0));
  CHECK(fam.tolerance(fam.simulating(h, "0")) == Catch::Approx(0.25 * 0.2 / 8.0));
  CHECK(fam.tolerance(fam.backslide(h, "0000", 3)) == Catch::Approx(fam.params().tolerance_cap));
}

TEST_CASE("consistency of recorded answers") {
  StubCsq algo;  // theta0 = 0.5, tau = 0.1
  const auto f = Conjunction::parse("1");
  SECTION("correlation at or above theta + tau forces a one") {
    algo.corr = 0.6;
    CHECK(check_consistency(algo, "1", f));
    CHECK_FALSE(check_consistency(algo, "0", f));
  }
  SECTION("correlation at or below theta - tau forbids a one") {
    algo.corr = 0.4;
    CHECK_FALSE(check_consistency(algo, "1", f));
    CHECK(check_consistency(algo, "0", f));
  }
  SECTION("inside the band both answers are valid") {
    algo.corr = 0.45;
    CHECK(check_consistency(algo, "1", f));
    CHECK(check_consistency(algo, "0", f));
  }
}

TEST_CASE("drift query margin") {
  CHECK(drift_query_margin(0.1, 0.005) == 10);
  CHECK(drift_query_margin(0.1, 0.05) == 1);
  CHECK(drift_query_margin(0.1, 0.2) == 1);
  CHECK(drift_query_margin(0.1, 0.0) == LLONG_MAX);
}

TEST_CASE("toy learner answers are forced and recover the target") {
  const int n = 5;
  ToyConjunctionCsq algo(n);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> lits;
    for (int v = 1; v <= n; ++v)
      if (rng.next_u64() & 1ULL) lits.push_back(v);
    const auto f = Conjunction::of(lits);
    BitString z;
    for (int j = 0; j < n; ++j) {
      const double corr = algo.query_correlation(z, f);
      const double theta = algo.query_threshold(z);
      // every query is answered outside the ambiguous band
      REQUIRE((corr >= theta + algo.tolerance() || corr <= theta - algo.tolerance()));
      z += corr >= theta + algo.tolerance() ? '1' : '0';
    }
    CHECK(check_consistency(algo, z, f));
    CHECK(algo.hypothesis(z) == f);
  }
}

TEST_CASE("simulation lemmas at n = 4 in suppressed oracle mode") {
  const int n = 4;
  const double eps = 0.25;
  ToyConjunctionCsq algo(n);
  CsqReductionFamily<ToyConjunctionCsq> fam(algo, eps, false);
  const auto& p = fam.params();
  REQUIRE(p.backslide_steps == 1024);

  SECTION("a full pass records a transcript consistent with the target") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng setup(seed);
      std::vector<int> lits;
      for (int v = 1; v <= n; ++v)
        if (setup.next_u64() & 1ULL) lits.push_back(v);
      const auto f = Conjunction::of(lits);
      auto schedule = constant_schedule(f);
      const auto start = fam.start(std::optional<Conjunction>(Conjunction::parse("1")));
      const auto traj = run_evolution(fam, start, schedule,
                                      suppressed_config(p, p.query_count, seed));
      // one answer bit is appended per round
      for (std::size_t i = 0; i < traj.size(); ++i)
        CHECK(parse_rep_id(traj[i].rep_id).z.size() == i);
      const auto z = parse_rep_id(traj.generations.back().rep_id).z;
      REQUIRE(static_cast<int>(z.size()) == p.query_count);
      CHECK(check_consistency(algo, z, f));
      CHECK(algo.hypothesis(z) == f);
    }
  }

  SECTION("backslides terminate within K - k + 1 steps above the restart floor") {
    const auto f = Conjunction::parse("1,3");
    BitString consistent = "1010";
    const auto h_bad = Conjunction::parse("2,4");
    for (long long k : {0LL, 256LL, 512LL, 1000LL, p.backslide_steps}) {
      const auto start = fam.backslide(h_bad, consistent, k);
      auto schedule = constant_schedule(f);
      const auto traj = run_evolution(fam, start, schedule,
                                      suppressed_config(p, p.backslide_steps - k + 2, 7));
      const auto jump = fam.start(std::optional<Conjunction>(algo.hypothesis(consistent)));
      const double floor = fam.exact_performance(f, jump);
      long long reached = -1;
      for (std::size_t i = 1; i < traj.size(); ++i) {
        const auto rep = parse_rep_id(traj[i].rep_id);
        if (rep.k == -1 && rep.z.empty()) {
          reached = static_cast<long long>(i);
          break;
        }
        CHECK(traj[i].perf_exact >= floor - 1e-12);
      }
      REQUIRE(reached >= 1);
      CHECK(reached <= p.backslide_steps - k + 1);
    }
  }

  SECTION("from any start the performance settles above 1 - eps for [g, 2g]") {
    const auto f = Conjunction::parse("2,4");
    std::vector<CsqRep<Conjunction>> starts{
        fam.start(std::nullopt),
        fam.start(std::optional<Conjunction>(Conjunction::parse("1"))),
        fam.simulating(std::optional<Conjunction>(Conjunction::parse("1,2")), "110"),
        fam.backslide(std::optional<Conjunction>(Conjunction::parse("3")), "0011", 512),
        fam.backslide(std::nullopt, "1111", p.backslide_steps)};
    for (std::size_t s = 0; s < starts.size(); ++s) {
      auto schedule = constant_schedule(f);
      const auto traj = run_evolution(fam, starts[s], schedule,
                                      suppressed_config(p, 2 * p.settle_generations, s));
      for (long long i = p.settle_generations; i <= 2 * p.settle_generations; ++i)
        REQUIRE(traj[static_cast<std::size_t>(i)].perf_exact >= 1.0 - eps - 1e-12);
    }
  }

  SECTION("the quasi-monotonic variant never dips eps below the start") {
    CsqReductionFamily<ToyConjunctionCsq> qfam(algo, eps, true);
    const auto& qp = qfam.params();
    const auto f = Conjunction::parse("1,3");
    std::vector<CsqRep<Conjunction>> starts{
        qfam.start(std::optional<Conjunction>(Conjunction::parse("1,3"))),
        qfam.backslide(std::optional<Conjunction>(Conjunction::parse("1,3")), "1010", 100),
        qfam.start(std::optional<Conjunction>(Conjunction::parse("2"))),
        qfam.start(std::nullopt)};
    for (std::size_t s = 0; s < starts.size(); ++s) {
      auto schedule = constant_schedule(f);
      const auto traj = run_evolution(qfam, starts[s], schedule,
                                      suppressed_config(qp, 2 * qp.settle_generations, 100 + s));
      const double p0 = traj[0].perf_exact;
      for (const auto& g : traj.generations) REQUIRE(g.perf_exact >= p0 - eps - 1e-12);
    }
  }
}
