#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace evodrift {

/// Exact dyadic rational num / 2^exp. Covers every value the uniform-cube
/// conjunction oracle can produce; arithmetic throws instead of rounding
/// when a result would not fit (exponent spread beyond 62 bits).
class Dyadic {
 public:
  constexpr Dyadic() = default;
  constexpr explicit Dyadic(long long integer) : num_(integer), exp_(0) {}

  /// 2^p for any p in [-62, 62].
  static Dyadic pow2(int p) {
    if (p > 62 || p < -62) throw std::overflow_error("Dyadic::pow2: exponent out of range");
    Dyadic d;
    if (p >= 0) {
      d.num_ = 1LL << p;
      d.exp_ = 0;
    } else {
      d.num_ = 1;
      d.exp_ = -p;
    }
    return d;
  }

  static Dyadic ratio(long long num, int pow2_denominator) {
    if (pow2_denominator < 0 || pow2_denominator > 62)
      throw std::overflow_error("Dyadic::ratio: denominator exponent out of range");
    Dyadic d;
    d.num_ = num;
    d.exp_ = pow2_denominator;
    d.normalize();
    return d;
  }

  long long numerator() const { return num_; }
  int log2_denominator() const { return exp_; }

  Dyadic operator+(const Dyadic& o) const {
    const int e = exp_ > o.exp_ ? exp_ : o.exp_;
    Dyadic r;
    r.num_ = shifted(num_, e - exp_) + shifted(o.num_, e - o.exp_);
    r.exp_ = e;
    r.normalize();
    return r;
  }

  Dyadic operator-(const Dyadic& o) const { return *this + o.negated(); }

  Dyadic negated() const {
    Dyadic r = *this;
    r.num_ = -r.num_;
    return r;
  }

  bool operator==(const Dyadic& o) const { return num_ == o.num_ && exp_ == o.exp_; }
  bool operator!=(const Dyadic& o) const { return !(*this == o); }

  double to_double() const { return std::ldexp(static_cast<double>(num_), -exp_); }

 private:
  void normalize() {
    if (num_ == 0) {
      exp_ = 0;
      return;
    }
    while (exp_ > 0 && (num_ & 1LL) == 0) {
      num_ >>= 1;
      --exp_;
    }
  }

  static long long shifted(long long v, int by) {
    if (by > 62) throw std::overflow_error("Dyadic: exponent spread too large");
    if (v != 0 && by > 0) {
      const long long limit = (1LL << 62) / (1LL << by);
      if (v > limit || v < -limit) throw std::overflow_error("Dyadic: shift overflow");
    }
    return v << by;
  }

  long long num_ = 0;
  int exp_ = 0;
};

}  // namespace evodrift
