#pragma once

#include <climits>
#include <cmath>
#include <concepts>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evodrift/conjunction.hpp"
#include "evodrift/core.hpp"
#include "evodrift/distributions.hpp"
#include "evodrift/rng.hpp"

namespace evodrift {

/// Recorded oracle answers of a simulated thresholded-correlation-query run;
/// bit i is the answer to the i-th query.
using BitString = std::string;

/// A deterministic learner driven by thresholded correlational queries
/// (phi, theta, tau): the oracle answers 1 when E[phi(x) f(x)] >= theta+tau,
/// 0 when <= theta-tau, and either bit in between. The query asked after
/// answer prefix z is identified by z alone; theta >= tau for every query.
template <typename A>
concept CsqAlgorithm =
    requires(const A& a, const BitString& z, const typename A::Concept& f,
             const typename A::Hypothesis& h, std::span<const double> x, Rng& rng) {
      { a.query_count() } -> std::convertible_to<int>;
      { a.tolerance() } -> std::convertible_to<double>;
      { a.query_threshold(z) } -> std::convertible_to<double>;
      { a.query_eval(z, x) } -> std::convertible_to<double>;
      { a.query_correlation(z, f) } -> std::convertible_to<double>;
      { a.hypothesis(z) } -> std::same_as<typename A::Hypothesis>;
      { a.hypothesis_performance(h, f) } -> std::convertible_to<double>;
      { a.hypothesis_eval(h, x) } -> std::convertible_to<double>;
      { a.hypothesis_id(h) } -> std::convertible_to<std::string>;
      { a.concept_id(f) } -> std::convertible_to<std::string>;
      { a.concept_eval(f, x) } -> std::convertible_to<double>;
      { a.dimension() } -> std::convertible_to<int>;
      { a.sample_point(rng) } -> std::same_as<ExamplePoint>;
    };

template <typename A>
concept HasThresholdBound = requires(const A& a) {
  { a.threshold_upper_bound() } -> std::convertible_to<double>;
};

/// Derived constants of the compiled evolution algorithm.
struct ReductionParameters {
  int query_count = 0;          // q
  double query_tolerance = 0;   // tau
  double max_threshold = 0;     // largest reachable theta
  double tolerance_cap = 0;     // tu >= eps*theta/(2q) for every state
  long long backslide_steps = 0;  // K = ceil(2/tu)
  double rare_weight = 0;       // eta = eps/(4q + 2K)
  double estimate_accuracy = 0;   // tau' = min(eps*tau/(8q), tu/8)
  long long sample_size = 0;    // ceil(ln((6q+3K)/eps) / (2 tau'^2))
  double drift_bound = 0;       // eps*tau/(4q + 2K + 2)
  long long settle_generations = 0;  // g = 2q + K + 1
  double epsilon = 0;
};

namespace detail {

template <CsqAlgorithm A>
double max_reachable_threshold(const A& algo) {
  if constexpr (HasThresholdBound<A>) {
    return algo.threshold_upper_bound();
  } else {
    const int q = algo.query_count();
    if (q > 20)
      throw ConfigError("query tree too deep to enumerate; provide threshold_upper_bound()");
    double best = 0.0;
    std::vector<BitString> level{BitString{}};
    for (int depth = 0; depth < q; ++depth) {
      std::vector<BitString> next;
      for (const auto& z : level) {
        const double theta = algo.query_threshold(z);
        if (!(theta >= algo.tolerance()))
          throw ConfigError("query threshold below the query tolerance");
        if (theta > best) best = theta;
        if (depth + 1 < q) {
          next.push_back(z + '0');
          next.push_back(z + '1');
        }
      }
      level = std::move(next);
    }
    return best;
  }
}

}  // namespace detail

template <CsqAlgorithm A>
ReductionParameters derive_reduction_parameters(const A& algo, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon outside (0, 1)");
  ReductionParameters p;
  p.epsilon = epsilon;
  p.query_count = algo.query_count();
  if (p.query_count < 1) throw ConfigError("query count must be >= 1");
  p.query_tolerance = algo.tolerance();
  if (!(p.query_tolerance > 0.0)) throw ConfigError("query tolerance must be > 0");
  p.max_threshold = detail::max_reachable_threshold(algo);
  const double q = p.query_count;
  p.tolerance_cap = epsilon * p.max_threshold / (2.0 * q);
  p.backslide_steps = static_cast<long long>(std::ceil(2.0 / p.tolerance_cap));
  const double K = static_cast<double>(p.backslide_steps);
  p.rare_weight = epsilon / (4.0 * q + 2.0 * K);
  p.estimate_accuracy =
      std::min(epsilon * p.query_tolerance / (8.0 * q), p.tolerance_cap / 8.0);
  p.sample_size = static_cast<long long>(
      std::ceil(std::log((6.0 * q + 3.0 * K) / epsilon) /
                (2.0 * p.estimate_accuracy * p.estimate_accuracy)));
  p.drift_bound = epsilon * p.query_tolerance / (4.0 * q + 2.0 * K + 2.0);
  p.settle_generations = 2 * p.query_count + p.backslide_steps + 1;
  return p;
}

/// Representation of the compiled algorithm. slide == -1 is a simulating
/// state r[h, z] = (1 - eps/2) h + (eps/2) Phi_z with |z| < q; slide == k in
/// [0, K] is the backslide state (1 - k*tu/2) * r[h, z] with |z| == q. An
/// absent hypothesis is the constant-zero randomized function.
template <typename H>
struct CsqRep {
  std::optional<H> hypothesis;
  BitString answers;
  long long slide = -1;

  bool operator==(const CsqRep& o) const {
    return slide == o.slide && answers == o.answers && hypothesis == o.hypothesis;
  }
};

/// Was answer bit i a permitted oracle response for query i against f, for
/// every i? Bit 1 requires correlation > theta - tau, bit 0 requires
/// correlation < theta + tau (boundaries force the opposite bit).
template <CsqAlgorithm A>
bool check_consistency(const A& algo, const BitString& answers, const typename A::Concept& f) {
  if (static_cast<int>(answers.size()) > algo.query_count())
    throw std::invalid_argument("check_consistency: more answers than queries");
  const double tau = algo.tolerance();
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const BitString prefix = answers.substr(0, i);
    const double theta = algo.query_threshold(prefix);
    const double corr = algo.query_correlation(prefix, f);
    if (answers[i] == '1') {
      if (!(corr > theta - tau)) return false;
    } else {
      if (!(corr < theta + tau)) return false;
    }
  }
  return true;
}

/// Number of rounds for which an answer obtained at tolerance tau/2 stays a
/// valid tolerance-tau answer under per-round drift delta; unbounded when
/// delta is zero.
inline long long drift_query_margin(double tau, double delta) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (delta == 0.0) return LLONG_MAX;
  const double w = std::floor(tau / (2.0 * delta));
  return w < 1.0 ? 1 : static_cast<long long>(w);
}

/// The compiled evolution algorithm over CsqRep states.
///
/// Simulating states mutate to themselves and their two answer extensions;
/// the 1-extension carries weight 2*eta^2 so that, with sub-2*eta mutations
/// suppressed, a 1 is recorded only when the extension is beneficial, which
/// certifies correlation >= theta (>= theta - tau/2 under sampled
/// estimates). The state tolerance eps*theta/(2q) places that beneficial
/// boundary at the query threshold itself. Backslide states shed
/// performance in neutral tu/2 decrements until the restart representation
/// stops being deleterious.
template <CsqAlgorithm A>
class CsqReductionFamily {
 public:
  using Hypothesis = typename A::Hypothesis;
  using Rep = CsqRep<Hypothesis>;
  using Concept = typename A::Concept;

  CsqReductionFamily(A algo, double epsilon, bool quasi_monotonic)
      : algo_(std::move(algo)),
        epsilon_(epsilon),
        quasi_(quasi_monotonic),
        params_(derive_reduction_parameters(algo_, epsilon)) {
    // Both drift preconditions must hold for the derived drift bound.
    const double q = params_.query_count;
    if (params_.drift_bound > params_.query_tolerance / (2.0 * q) + 1e-15 ||
        params_.drift_bound > params_.tolerance_cap / 4.0 + 1e-15)
      throw std::logic_error("reduction drift bound violates a lemma precondition");
  }

  const A& algorithm() const { return algo_; }
  const ReductionParameters& params() const { return params_; }
  double epsilon() const { return epsilon_; }
  bool quasi_monotonic() const { return quasi_; }

  Rep start(std::optional<Hypothesis> h) const { return Rep{std::move(h), BitString{}, -1}; }

  Rep simulating(std::optional<Hypothesis> h, BitString z) const {
    if (static_cast<int>(z.size()) >= params_.query_count)
      throw std::invalid_argument("simulating state needs |z| < q");
    return Rep{std::move(h), std::move(z), -1};
  }

  Rep backslide(std::optional<Hypothesis> h, BitString z, long long k) const {
    if (static_cast<int>(z.size()) != params_.query_count)
      throw std::invalid_argument("backslide state needs |z| == q");
    if (k < 0 || k > params_.backslide_steps)
      throw std::invalid_argument("backslide index outside [0, K]");
    return Rep{std::move(h), std::move(z), k};
  }

  double scale(const Rep& r) const {
    if (r.slide < 0) return 1.0;
    const double s = 1.0 - static_cast<double>(r.slide) * params_.tolerance_cap / 2.0;
    return s > 0.0 ? s : 0.0;
  }

  double exact_performance(const Concept& f, const Rep& r) const {
    const double hp =
        r.hypothesis ? algo_.hypothesis_performance(*r.hypothesis, f) : 0.0;
    double phi = 0.0;
    for (std::size_t j = 0; j < r.answers.size(); ++j)
      if (r.answers[j] == '1') phi += algo_.query_correlation(r.answers.substr(0, j), f);
    phi /= static_cast<double>(params_.query_count);
    return scale(r) * ((1.0 - epsilon_ / 2.0) * hp + (epsilon_ / 2.0) * phi);
  }

  /// Expected value of the randomized representation at x.
  double eval_representation(const Rep& r, std::span<const double> x) const {
    const double hv = r.hypothesis ? algo_.hypothesis_eval(*r.hypothesis, x) : 0.0;
    double phi = 0.0;
    for (std::size_t j = 0; j < r.answers.size(); ++j)
      if (r.answers[j] == '1') phi += algo_.query_eval(r.answers.substr(0, j), x);
    phi /= static_cast<double>(params_.query_count);
    return scale(r) * ((1.0 - epsilon_ / 2.0) * hv + (epsilon_ / 2.0) * phi);
  }

  double eval_concept(const Concept& f, std::span<const double> x) const {
    return algo_.concept_eval(f, x);
  }

  ExamplePoint sample_point(Rng& rng) const { return algo_.sample_point(rng); }

  NeighborSet<Rep> neighborhood(const Rep& r, Rng&) const {
    const double eta = params_.rare_weight;
    std::vector<Rep> members;
    std::vector<double> weights;
    double bound;
    if (r.slide < 0) {
      if (static_cast<int>(r.answers.size()) >= params_.query_count)
        throw std::logic_error("simulating state with a full transcript");
      members = {r, extend(r, '0'), extend(r, '1')};
      weights = {eta, 1.0 - eta - 2.0 * eta * eta, 2.0 * eta * eta};
      bound = 1.0 / (2.0 * eta * eta);
    } else if (r.slide < params_.backslide_steps) {
      const Hypothesis restart = algo_.hypothesis(r.answers);
      members = {r, Rep{r.hypothesis, r.answers, r.slide + 1},
                 Rep{std::optional<Hypothesis>(restart), BitString{}, -1}};
      if (quasi_) {
        weights = {eta * eta, (eta - eta * eta) / 2.0, (eta - eta * eta) / 2.0, 1.0 - eta};
        members.push_back(Rep{r.hypothesis, BitString{}, -1});
      } else {
        weights = {eta * eta, eta - eta * eta, 1.0 - eta};
      }
      bound = 1.0 / (eta * eta);
    } else {
      members = {r, Rep{std::nullopt, BitString{}, -1}};
      weights = {eta, 1.0 - eta};
      bound = 1.0 / eta;
    }
    return NeighborSet<Rep>(std::move(members), std::move(weights), 0, bound);
  }

  /// Per-state tolerance: eps*theta_z/(2q) while simulating, tu on the
  /// backslide chain.
  double tolerance(const Rep& r) const {
    if (r.slide >= 0) return params_.tolerance_cap;
    return epsilon_ * algo_.query_threshold(r.answers) /
           (2.0 * static_cast<double>(params_.query_count));
  }

  std::string rep_id(const Rep& r) const {
    std::string id = "h=";
    id += r.hypothesis ? algo_.hypothesis_id(*r.hypothesis) : std::string("0");
    id += ";z=";
    id += r.answers;
    id += ";k=";
    id += std::to_string(r.slide);
    return id;
  }

  std::string concept_id(const Concept& f) const { return algo_.concept_id(f); }

 private:
  Rep extend(const Rep& r, char bit) const {
    BitString z = r.answers;
    z += bit;
    if (static_cast<int>(z.size()) == params_.query_count)
      return Rep{r.hypothesis, std::move(z), 0};
    return Rep{r.hypothesis, std::move(z), -1};
  }

  A algo_;
  double epsilon_;
  bool quasi_;
  ReductionParameters params_;
};

/// Test learner: monotone conjunctions over the uniform cube, one
/// correlation query per variable with theta = tau = 2^-n. Every answer is
/// forced (correlation is 2^(1-|f|) >= 2*tau for members, 0 for
/// non-members), so the unique consistent transcript is the indicator of f
/// and the emitted hypothesis is f itself.
class ToyConjunctionCsq {
 public:
  using Concept = Conjunction;
  using Hypothesis = Conjunction;

  explicit ToyConjunctionCsq(int n) : n_(n), dist_(DistributionSpec::uniform_hypercube(n)) {
    if (n < 1 || n > 62) throw std::invalid_argument("toy learner needs n in [1, 62]");
  }

  int dimension() const { return n_; }
  int query_count() const { return n_; }
  double tolerance() const { return std::ldexp(1.0, -n_); }
  double query_threshold(const BitString&) const { return std::ldexp(1.0, -n_); }

  double query_eval(const BitString& prefix, std::span<const double> x) const {
    return x[prefix.size()];
  }

  /// E[x_j f(x)] over the uniform cube: +/- 2^(1-|f|) when f contains the
  /// variable (sign by polarity), else 0.
  double query_correlation(const BitString& prefix, const Conjunction& f) const {
    const int var = static_cast<int>(prefix.size()) + 1;
    for (int l : f.literals()) {
      if (l == var) return std::ldexp(1.0, 1 - static_cast<int>(f.size()));
      if (l == -var) return -std::ldexp(1.0, 1 - static_cast<int>(f.size()));
    }
    return 0.0;
  }

  Conjunction hypothesis(const BitString& z) const {
    if (static_cast<int>(z.size()) != n_)
      throw std::invalid_argument("toy hypothesis needs a full transcript");
    std::vector<int> lits;
    for (int j = 0; j < n_; ++j)
      if (z[static_cast<std::size_t>(j)] == '1') lits.push_back(j + 1);
    return Conjunction::of(std::move(lits));
  }

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
  double threshold_upper_bound() const { return std::ldexp(1.0, -n_); }
  ExamplePoint sample_point(Rng& rng) const { return sample(dist_, rng); }

 private:
  int n_;
  DistributionSpec dist_;
};

}  // namespace evodrift
