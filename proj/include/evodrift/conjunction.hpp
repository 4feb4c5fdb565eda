#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evodrift/core.hpp"
#include "evodrift/distributions.hpp"
#include "evodrift/dyadic.hpp"
#include "evodrift/rng.hpp"

namespace evodrift {

/// A conjunction of literals over variables 1..n, stored as signed indices
/// (positive = variable, negative = negated variable), sorted by variable.
/// A variable never appears with both polarities. The empty conjunction is
/// the always-true function.
class Conjunction {
 public:
  Conjunction() = default;

  static Conjunction of(std::vector<int> literals) {
    Conjunction c;
    c.lits_ = std::move(literals);
    std::sort(c.lits_.begin(), c.lits_.end(),
              [](int a, int b) { return std::abs(a) < std::abs(b); });
    for (std::size_t i = 0; i < c.lits_.size(); ++i) {
      if (c.lits_[i] == 0) throw std::invalid_argument("Conjunction: zero literal");
      if (i > 0 && std::abs(c.lits_[i]) == std::abs(c.lits_[i - 1]))
        throw std::invalid_argument("Conjunction: variable listed twice");
    }
    return c;
  }

  /// Comma-separated signed indices, e.g. "1,-3,7"; empty string is the
  /// empty conjunction.
  static Conjunction parse(const std::string& text) {
    std::vector<int> lits;
    std::size_t pos = 0;
    while (pos < text.size()) {
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == ',')) ++pos;
      if (pos >= text.size()) break;
      std::size_t used = 0;
      const int v = std::stoi(text.substr(pos), &used);
      lits.push_back(v);
      pos += used;
    }
    return of(std::move(lits));
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < lits_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(lits_[i]);
    }
    return s;
  }

  std::size_t size() const { return lits_.size(); }
  bool empty() const { return lits_.empty(); }
  const std::vector<int>& literals() const { return lits_; }

  bool monotone() const {
    for (int l : lits_)
      if (l < 0) return false;
    return true;
  }

  bool has_variable(int var) const {
    for (int l : lits_)
      if (std::abs(l) == var) return true;
    return false;
  }

  int max_variable() const {
    int m = 0;
    for (int l : lits_) m = std::max(m, std::abs(l));
    return m;
  }

  /// +1 iff every literal is satisfied (coordinate +1 for a positive literal,
  /// -1 for a negated one).
  double evaluate(std::span<const double> x) const {
    for (int l : lits_) {
      const auto idx = static_cast<std::size_t>(std::abs(l)) - 1;
      if (idx >= x.size()) throw std::invalid_argument("Conjunction: variable beyond dimension");
      const bool coord_true = x[idx] > 0.0;
      if ((l > 0) != coord_true) return -1.0;
    }
    return 1.0;
  }

  bool operator==(const Conjunction& o) const { return lits_ == o.lits_; }

 private:
  std::vector<int> lits_;
};

namespace detail {

struct LiteralCounts {
  int shared = 0;        // same literal in both
  bool contradictory = false;  // some variable with opposite polarities
};

inline LiteralCounts count_literals(const Conjunction& f, const Conjunction& r) {
  LiteralCounts c;
  auto fi = f.literals().begin();
  auto ri = r.literals().begin();
  while (fi != f.literals().end() && ri != r.literals().end()) {
    const int fv = std::abs(*fi), rv = std::abs(*ri);
    if (fv == rv) {
      if (*fi == *ri) ++c.shared;
      else c.contradictory = true;
      ++fi;
      ++ri;
    } else if (fv < rv) {
      ++fi;
    } else {
      ++ri;
    }
  }
  return c;
}

}  // namespace detail

/// Exact uniform-distribution performance of r against target f, as a
/// dyadic rational. With m shared literals, u literals only in f, and w only
/// in r (no contradictory pair): 1 - 2^(1-|f|) - 2^(1-|r|) + 2^(2-m-u-w).
/// When r negates some literal of f the two are never simultaneously true
/// and the last term vanishes.
inline Dyadic conjunction_performance_rational(const Conjunction& f, const Conjunction& r) {
  const auto c = detail::count_literals(f, r);
  const int a = static_cast<int>(f.size());
  const int b = static_cast<int>(r.size());
  Dyadic perf = Dyadic(1) - Dyadic::pow2(1 - a) - Dyadic::pow2(1 - b);
  if (!c.contradictory) {
    const int span = a + b - c.shared;  // m + u + w
    perf = perf + Dyadic::pow2(2 - span);
  }
  return perf;
}

inline PerformanceValue conjunction_performance(const Conjunction& f, const Conjunction& r) {
  const auto c = detail::count_literals(f, r);
  const int a = static_cast<int>(f.size());
  const int b = static_cast<int>(r.size());
  double perf = 1.0 - std::ldexp(1.0, 1 - a) - std::ldexp(1.0, 1 - b);
  if (!c.contradictory) perf += std::ldexp(1.0, 2 - (a + b - c.shared));
  return PerformanceValue(perf);
}

/// Length cap q = ceil(log2(3/eps)) for representation-side conjunctions.
inline int representation_length_cap(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon outside (0, 1)");
  return static_cast<int>(std::ceil(std::log2(3.0 / epsilon)));
}

/// Monotone neighborhood: single-variable additions (below the length cap),
/// removals, and swaps, plus r itself. Uniform weights; size is bounded by
/// 1 + n + n^2/4.
inline NeighborSet<Conjunction> monotone_neighborhood(const Conjunction& r, double epsilon,
                                                      int n) {
  if (!r.monotone()) throw std::invalid_argument("monotone_neighborhood: negated literal");
  const int q = representation_length_cap(epsilon);
  const int len = static_cast<int>(r.size());
  if (len > q) throw std::invalid_argument("monotone_neighborhood: representation beyond cap");
  if (r.max_variable() > n) throw std::invalid_argument("monotone_neighborhood: variable beyond n");

  std::vector<Conjunction> members{r};
  if (len < q) {
    for (int v = 1; v <= n; ++v) {
      if (r.has_variable(v)) continue;
      auto lits = r.literals();
      lits.push_back(v);
      members.push_back(Conjunction::of(std::move(lits)));
    }
  }
  for (int out : r.literals()) {
    std::vector<int> base;
    for (int l : r.literals())
      if (l != out) base.push_back(l);
    members.push_back(Conjunction::of(base));
    for (int v = 1; v <= n; ++v) {
      if (r.has_variable(v)) continue;
      auto lits = base;
      lits.push_back(v);
      members.push_back(Conjunction::of(std::move(lits)));
    }
  }
  const double bound = 1.0 + n + n * n / 4.0;
  std::vector<double> weights(members.size(), 1.0);
  return NeighborSet<Conjunction>(std::move(members), std::move(weights), 0, bound);
}

/// General-conjunction neighborhood: additions/removals/swaps over signed
/// literals (added literals take either polarity) plus every proper
/// sign-flip variant of r. Uniform weights; size bounded by
/// 1 + 2n + n^2 + 6/eps.
inline NeighborSet<Conjunction> general_neighborhood(const Conjunction& r, double epsilon,
                                                     int n) {
  const int q = representation_length_cap(epsilon);
  const int len = static_cast<int>(r.size());
  if (len > q) throw std::invalid_argument("general_neighborhood: representation beyond cap");
  if (r.max_variable() > n) throw std::invalid_argument("general_neighborhood: variable beyond n");
  if (len > 25) throw std::invalid_argument("general_neighborhood: sign-flip set too large");

  std::vector<Conjunction> members{r};
  if (len < q) {
    for (int v = 1; v <= n; ++v) {
      if (r.has_variable(v)) continue;
      for (int sign : {+1, -1}) {
        auto lits = r.literals();
        lits.push_back(sign * v);
        members.push_back(Conjunction::of(std::move(lits)));
      }
    }
  }
  for (int out : r.literals()) {
    std::vector<int> base;
    for (int l : r.literals())
      if (l != out) base.push_back(l);
    members.push_back(Conjunction::of(base));
    for (int v = 1; v <= n; ++v) {
      if (r.has_variable(v)) continue;
      for (int sign : {+1, -1}) {
        auto lits = base;
        lits.push_back(sign * v);
        members.push_back(Conjunction::of(std::move(lits)));
      }
    }
  }
  // Every nonempty subset of literals to negate.
  const auto& lits = r.literals();
  for (unsigned mask = 1; mask < (1u << len); ++mask) {
    std::vector<int> flipped(lits.begin(), lits.end());
    for (int i = 0; i < len; ++i)
      if (mask & (1u << i)) flipped[static_cast<std::size_t>(i)] *= -1;
    members.push_back(Conjunction::of(std::move(flipped)));
  }
  const double bound = 1.0 + 2.0 * n + static_cast<double>(n) * n + 6.0 / epsilon;
  std::vector<double> weights(members.size(), 1.0);
  return NeighborSet<Conjunction>(std::move(members), std::move(weights), 0, bound);
}

enum class ConjunctionDriftPolicy { Constant, LongSwap, ShrinkGrow };

inline double conjunction_step_error(const Conjunction& a, const Conjunction& b) {
  return conjunction_performance(a, b).error();
}

/// One drift step on a conjunction target. Long-swap replaces one variable
/// by a fresh one (per-step error exactly 2^-|f|); shrink-grow adds or
/// removes one variable (error 2^-max(|f|,|f'|)). Every emitted step is
/// checked against the exact oracle.
inline Conjunction conjunction_drift_step(const Conjunction& f, double delta,
                                          ConjunctionDriftPolicy policy, int n,
                                          bool monotone_family, Rng& rng) {
  if (policy == ConjunctionDriftPolicy::Constant) return f;
  const double tol = 1e-12;
  Conjunction next = f;
  if (policy == ConjunctionDriftPolicy::LongSwap) {
    if (f.empty()) throw ConfigError("long-swap drift: empty target has no variable to swap");
    if (static_cast<int>(f.size()) >= n)
      throw ConfigError("long-swap drift: no fresh variable available");
    if (std::ldexp(1.0, -static_cast<int>(f.size())) > delta * (1.0 + tol))
      throw ConfigError("long-swap drift: target too short to drift within delta");
    const auto& lits = f.literals();
    const int out = lits[rng.index(lits.size())];
    std::vector<int> fresh;
    for (int v = 1; v <= n; ++v)
      if (!f.has_variable(v)) fresh.push_back(v);
    if (fresh.empty()) throw ConfigError("long-swap drift: no fresh variable available");
    int in = fresh[rng.index(fresh.size())];
    if (!monotone_family && (rng.next_u64() & 1ULL)) in = -in;
    std::vector<int> lits2;
    for (int l : lits)
      if (l != out) lits2.push_back(l);
    lits2.push_back(in);
    next = Conjunction::of(std::move(lits2));
  } else {  // ShrinkGrow
    const bool can_grow = static_cast<int>(f.size()) < n;
    const bool can_shrink =
        !f.empty() && std::ldexp(1.0, -static_cast<int>(f.size())) <= delta * (1.0 + tol);
    if (!can_grow && !can_shrink)
      throw ConfigError("shrink-grow drift: no single-literal edit stays within delta");
    const bool grow = can_grow && (!can_shrink || (rng.next_u64() & 1ULL));
    if (grow) {
      std::vector<int> fresh;
      for (int v = 1; v <= n; ++v)
        if (!f.has_variable(v)) fresh.push_back(v);
      int in = fresh[rng.index(fresh.size())];
      if (!monotone_family && (rng.next_u64() & 1ULL)) in = -in;
      auto lits = f.literals();
      lits.push_back(in);
      next = Conjunction::of(std::move(lits));
      if (conjunction_step_error(f, next) > delta * (1.0 + tol))
        throw ConfigError("shrink-grow drift: growth step exceeds delta");
    } else {
      const auto& lits = f.literals();
      const int out = lits[rng.index(lits.size())];
      std::vector<int> lits2;
      for (int l : lits)
        if (l != out) lits2.push_back(l);
      next = Conjunction::of(std::move(lits2));
    }
  }
  if (conjunction_step_error(f, next) > delta + tol)
    throw std::logic_error("conjunction drift step exceeded delta");
  return next;
}

namespace detail {

template <bool Monotone>
class ConjunctionFamilyBase {
 public:
  using Rep = Conjunction;
  using Concept = Conjunction;

  ConjunctionFamilyBase(int n, double epsilon)
      : n_(n), epsilon_(epsilon), dist_(DistributionSpec::uniform_hypercube(n)) {
    if (n < 1) throw std::invalid_argument("dimension must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon outside (0, 1)");
  }

  int dimension() const { return n_; }
  double epsilon() const { return epsilon_; }
  int length_cap() const { return representation_length_cap(epsilon_); }

  double exact_performance(const Conjunction& f, const Conjunction& r) const {
    if (f.max_variable() > n_ || r.max_variable() > n_)
      throw std::invalid_argument("conjunction refers to a variable beyond the family dimension");
    return conjunction_performance(f, r).value();
  }

  NeighborSet<Conjunction> neighborhood(const Conjunction& r, Rng&) const {
    if constexpr (Monotone) return monotone_neighborhood(r, epsilon_, n_);
    else return general_neighborhood(r, epsilon_, n_);
  }

  double benefit() const { return 9.0 / (epsilon_ * epsilon_); }

  double neighborhood_bound() const {
    if constexpr (Monotone) return 1.0 + n_ + n_ * static_cast<double>(n_) / 4.0;
    else return 1.0 + 2.0 * n_ + n_ * static_cast<double>(n_) + 6.0 / epsilon_;
  }

  ExamplePoint sample_point(Rng& rng) const { return sample(dist_, rng); }
  double eval_representation(const Conjunction& r, std::span<const double> x) const {
    return r.evaluate(x);
  }
  double eval_concept(const Conjunction& f, std::span<const double> x) const {
    return f.evaluate(x);
  }

  std::string rep_id(const Conjunction& r) const { return r.to_string(); }
  std::string concept_id(const Conjunction& f) const { return f.to_string(); }

 private:
  int n_;
  double epsilon_;
  DistributionSpec dist_;
};

}  // namespace detail

using MonotoneConjunctionFamily = detail::ConjunctionFamilyBase<true>;
using GeneralConjunctionFamily = detail::ConjunctionFamilyBase<false>;

}  // namespace evodrift
