#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "evodrift/core.hpp"
#include "evodrift/dyadic.hpp"
#include "evodrift/rng.hpp"

using namespace evodrift;

TEST_CASE("dyadic arithmetic is exact") {
  CHECK(Dyadic::pow2(-3).to_double() == 0.125);
  CHECK(Dyadic::pow2(2).to_double() == 4.0);
  CHECK((Dyadic(1) - Dyadic::pow2(-1)).to_double() == 0.5);
  CHECK(Dyadic(1) - Dyadic::pow2(0) == Dyadic(0));
  // 1 - 2 - 2 + 4 = 1
  const auto v = Dyadic(1) - Dyadic::pow2(1) - Dyadic::pow2(1) + Dyadic::pow2(2);
  CHECK(v == Dyadic(1));
  CHECK(Dyadic::ratio(6, 2) == Dyadic::ratio(3, 1));  // 6/4 == 3/2
}

TEST_CASE("performance value bounds and error mapping") {
  CHECK(PerformanceValue(0.5).error() == 0.25);
  CHECK(PerformanceValue::from_error(1.0).value() == -1.0);
  CHECK(PerformanceValue::from_error(0.0).value() == 1.0);
  CHECK_THROWS_AS(PerformanceValue(1.5), std::invalid_argument);
  CHECK_THROWS_AS(PerformanceValue(-1.1), std::invalid_argument);
}

namespace {

NeighborSet<int> simple_set(std::vector<int> members, std::vector<double> weights,
                            std::size_t current, double bound) {
  return NeighborSet<int>(std::move(members), std::move(weights), current, bound);
}

std::vector<PerformanceValue> estimates(std::initializer_list<double> vs) {
  std::vector<PerformanceValue> out;
  for (double v : vs) out.emplace_back(v);
  return out;
}

}  // namespace

TEST_CASE("neighbor set invariants") {
  CHECK_THROWS_AS(simple_set({}, {}, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(simple_set({1, 2}, {1.0}, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(simple_set({1, 1}, {1.0, 1.0}, 0, 4), std::invalid_argument);  // duplicate
  CHECK_THROWS_AS(simple_set({1, 2, 3}, {1.0, 1.0, 1.0}, 0, 2.0), std::invalid_argument);
  // weight below 1/p
  CHECK_THROWS_AS(simple_set({1, 2}, {1.0, 1e-9}, 0, 4.0), std::invalid_argument);
  const auto ns = simple_set({1, 2, 3}, {1.0, 1.0, 2.0}, 0, 4.0);
  CHECK(ns.size() == 3);
  CHECK(ns.current() == 1);
}

TEST_CASE("select_mutation basics") {
  Rng rng(7);
  const auto ns = simple_set({0, 1}, {1.0, 1.0}, 0, 4.0);

  SECTION("singleton beneficial set is chosen with probability 1") {
    const auto est = estimates({0.0, 0.5});
    for (int i = 0; i < 20; ++i) {
      const auto sel = select_mutation(ns, est, 0.1, rng);
      CHECK(sel.index == 1);
      CHECK(sel.cls == SelectionClass::Beneficial);
    }
  }

  SECTION("boundary estimate exactly current + t is beneficial") {
    const auto est = estimates({0.0, 0.1});
    const auto sel = select_mutation(ns, est, 0.1, rng);
    CHECK(sel.index == 1);
    CHECK(sel.cls == SelectionClass::Beneficial);
  }

  SECTION("estimate below tolerance stays neutral") {
    const auto est = estimates({0.0, 0.0999});
    const auto sel = select_mutation(ns, est, 0.1, rng);
    CHECK(sel.cls == SelectionClass::Neutral);
  }

  SECTION("missing estimates are a configuration error") {
    const auto est = estimates({0.0});
    CHECK_THROWS_AS(select_mutation(ns, est, 0.1, rng), ConfigError);
  }
}

TEST_CASE("neutral selection follows the relative weights") {
  // All members inside the neutral band; frequencies must match weights
  // within 3 standard errors over 1e5 seeded draws.
  Rng rng(1234);
  const std::vector<double> weights{1.0, 2.0, 3.0, 4.0};
  const auto ns = simple_set({0, 1, 2, 3}, std::vector<double>(weights), 0, 10.0);
  const auto est = estimates({0.0, 0.01, -0.01, 0.02});
  const int draws = 100000;
  std::map<std::size_t, int> counts;
  for (int i = 0; i < draws; ++i) {
    const auto sel = select_mutation(ns, est, 0.1, rng);
    CHECK(sel.cls == SelectionClass::Neutral);
    counts[sel.index]++;
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double p = weights[i] / 10.0;
    const double se = std::sqrt(p * (1 - p) / draws);
    CHECK(std::fabs(counts[i] / static_cast<double>(draws) - p) <= 3 * se);
  }
}

TEST_CASE("selection fuzz: always a member, beneficial whenever one exists") {
  Rng rng(424242);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t size = 1 + rng.index(20);
    std::vector<int> members;
    std::vector<double> weights;
    std::vector<PerformanceValue> est;
    for (std::size_t i = 0; i < size; ++i) {
      members.push_back(static_cast<int>(i));
      weights.push_back(0.05 + rng.uniform01());
      est.emplace_back(rng.uniform(-1.0, 1.0));
    }
    const std::size_t cur = rng.index(size);
    const double t = 0.01 + 0.3 * rng.uniform01();
    const NeighborSet<int> ns(members, weights, cur, 10000.0);
    const auto sel = select_mutation<int>(ns, est, t, rng);
    REQUIRE(sel.index < size);
    bool any_beneficial = false;
    for (std::size_t i = 0; i < size; ++i)
      any_beneficial = any_beneficial || est[i].value() >= est[cur].value() + t;
    if (any_beneficial) {
      CHECK(sel.cls == SelectionClass::Beneficial);
      CHECK(est[sel.index].value() >= est[cur].value() + t);
    } else {
      CHECK(sel.cls == SelectionClass::Neutral);
      CHECK(std::fabs(est[sel.index].value() - est[cur].value()) < t);
    }
  }
}

TEST_CASE("min_class_weight drops rare members of the chosen class") {
  Rng rng(5);
  const auto ns = simple_set({0, 1, 2}, {1e-4, 1.0, 1e-4}, 0, 2e4);
  const auto est = estimates({0.0, 0.0, 0.0});
  for (int i = 0; i < 50; ++i) {
    const auto sel = select_mutation(ns, est, 0.1, rng, 0.01);
    CHECK(sel.index == 1);
  }
}

TEST_CASE("hoeffding sample size") {
  CHECK(hoeffding_sample_size(1.0, 0.5, 1.0) == 3);  // ceil(2 ln 4)
  CHECK(hoeffding_sample_size(2.0, 0.999999999, 1.0) >= 1);
  // Halving the accuracy multiplies the bound by 4 up to ceiling effects.
  for (double Z : {0.3, 0.11, 0.05}) {
    const auto s = hoeffding_sample_size(Z, 0.1, 20.0);
    const auto s2 = hoeffding_sample_size(Z / 2.0, 0.1, 20.0);
    CHECK(std::llabs(s2 - 4 * s) < 4);
  }
  CHECK(hoeffding_sample_size(0.05, 0.1, 36.0) == 5264);
  CHECK_THROWS_AS(hoeffding_sample_size(0.0, 0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(hoeffding_sample_size(0.1, 1.5, 1.0), std::invalid_argument);
}

TEST_CASE("evolution parameters from the benefit bound") {
  SECTION("monotone conjunction values at eps = 0.25") {
    const double eps = 0.25;
    const auto p = evolution_parameters(9.0 / (eps * eps), 1 + 8 + 16.0, eps, true);
    CHECK(p.tolerance == Catch::Approx(eps * eps / 18.0).epsilon(1e-14));
    CHECK(p.generations == 2304);
    CHECK(p.drift_bound == Catch::Approx(eps * eps / 144.0).epsilon(1e-14));
  }
  SECTION("rotation values at n = 5, eps = 0.2") {
    const double pi = 3.14159265358979323846, eps = 0.2;
    const int n = 5;
    const auto p = evolution_parameters(pi * pi * pi * n / (2 * eps), 2.0 * n - 1, eps, true);
    CHECK(p.tolerance == Catch::Approx(eps / (pi * pi * pi * n)).epsilon(1e-12));
    CHECK(p.generations == 6202);
    CHECK(p.drift_bound == Catch::Approx(eps / (8 * pi * pi * pi * n)).epsilon(1e-12));
  }
  SECTION("component-wise tolerance at n = 4, eps = 0.5") {
    const double eps = 0.5;
    const auto p = evolution_parameters(144.0 * 4 / std::pow(eps, 6), 520.0, eps, true);
    CHECK(p.tolerance == Catch::Approx(std::pow(eps, 6) / (288.0 * 4)).epsilon(1e-12));
  }
  SECTION("identities") {
    const auto p = evolution_parameters(100.0, 37.0, 0.3, true);
    CHECK(p.tolerance * 2.0 * p.benefit == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(p.generations_real * p.drift_bound <= 1.0 + 1e-14);
    const auto fixed = evolution_parameters(100.0, 37.0, 0.3, false);
    CHECK(fixed.drift_bound == 0.0);
    CHECK(fixed.generations == 800);
  }
  SECTION("benefit below 2/eps is rejected") {
    CHECK_THROWS_AS(evolution_parameters(3.0, 10.0, 0.25, true), std::invalid_argument);
  }
}

TEST_CASE("engine config validation") {
  EngineConfig c;
  c.tolerance = 0.1;
  c.horizon = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.horizon = 10;
  c.epsilon = 0.2;
  CHECK_NOTHROW(c.validate());
  c.mode = EstimateMode::OracleNoiseUniform;
  CHECK_THROWS_AS(c.validate(), ConfigError);  // needs noise_bound
}
