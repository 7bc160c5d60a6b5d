#pragma once

// Closed interval arithmetic over binary64 with outward rounding.
//
// Rounding policy ("eft-directed"): every endpoint operation is computed in
// round-to-nearest together with its exact floating-point error via an
// error-free transformation (TwoSum for +/-, an FMA residual for * and /).
// The sign of the error decides whether the endpoint moves one ulp outward,
// so the result equals what hardware directed rounding would produce, without
// touching the FPU rounding mode.  Exact operations stay exact.
//
// Near the subnormal range the FMA residual of * and / can itself round; all
// such cases are caught by a magnitude guard and widened unconditionally.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace rigor {

struct IntervalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivisionByZeroInterval : IntervalError {
  DivisionByZeroInterval() : IntervalError("interval division: denominator contains zero") {}
};

namespace detail {

inline double next_up(double x) {
  return std::nextafter(x, std::numeric_limits<double>::infinity());
}

inline double next_down(double x) {
  return std::nextafter(x, -std::numeric_limits<double>::infinity());
}

[[noreturn]] inline void overflow() {
  throw IntervalError("interval arithmetic overflow: endpoint left the finite range");
}

inline void check_finite(double x) {
  if (!std::isfinite(x)) overflow();
}

// Exact error of a+b (Knuth TwoSum); valid whenever s is finite.
inline double two_sum_err(double a, double b, double s) {
  double bb = s - a;
  double aa = s - bb;
  return (a - aa) + (b - bb);
}

inline double add_down(double a, double b) {
  double s = a + b;
  check_finite(s);
  return two_sum_err(a, b, s) < 0 ? next_down(s) : s;
}

inline double add_up(double a, double b) {
  double s = a + b;
  check_finite(s);
  return two_sum_err(a, b, s) > 0 ? next_up(s) : s;
}

// Below this magnitude the FMA residual of a product or quotient may itself
// be inexact (subnormal); widen unconditionally there.
inline constexpr double kEftGuard = 1e-290;

inline double mul_down(double a, double b) {
  double p = a * b;
  check_finite(p);
  if (std::fabs(p) < kEftGuard) return p == 0 && (a == 0 || b == 0) ? p : next_down(p);
  return std::fma(a, b, -p) < 0 ? next_down(p) : p;
}

inline double mul_up(double a, double b) {
  double p = a * b;
  check_finite(p);
  if (std::fabs(p) < kEftGuard) return p == 0 && (a == 0 || b == 0) ? p : next_up(p);
  return std::fma(a, b, -p) > 0 ? next_up(p) : p;
}

// Exact quotient q* = a/b relates to the rounded q by q* - q = -r/b with
// r = fma(q, b, -a); r is exact away from the subnormal guard zone.
inline double div_down(double a, double b) {
  double q = a / b;
  check_finite(q);
  if (std::fabs(q) < kEftGuard || std::fabs(a) < kEftGuard)
    return a == 0 ? q : next_down(q);
  double r = std::fma(q, b, -a);
  return (r != 0 && ((r > 0) == (b > 0))) ? next_down(q) : q;
}

inline double div_up(double a, double b) {
  double q = a / b;
  check_finite(q);
  if (std::fabs(q) < kEftGuard || std::fabs(a) < kEftGuard)
    return a == 0 ? q : next_up(q);
  double r = std::fma(q, b, -a);
  return (r != 0 && ((r > 0) != (b > 0))) ? next_up(q) : q;
}

}  // namespace detail

class Interval {
 public:
  Interval() : lo_(0), hi_(0) {}

  // Exact point interval.
  Interval(double v) : lo_(v), hi_(v) { validate(); }

  Interval(double lo, double hi) : lo_(lo), hi_(hi) { validate(); }

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  bool is_point() const { return lo_ == hi_; }

  // Tightest double enclosure of pi (the lower endpoint is the nearest
  // double, which lies below pi).
  static Interval pi() {
    return Interval(0x1.921fb54442d18p+1, 0x1.921fb54442d19p+1);
  }

  // Upward-rounded diameter; safe for "width below tolerance" claims.
  double width() const { return detail::add_up(hi_, -lo_); }

  double mid() const {
    double m = 0.5 * (lo_ + hi_);
    if (!std::isfinite(m)) m = 0.5 * lo_ + 0.5 * hi_;
    return std::min(std::max(m, lo_), hi_);
  }

  // Upward-rounded max distance from mid() to an endpoint.
  double rad() const {
    double m = mid();
    return std::max(detail::add_up(m, -lo_), detail::add_up(hi_, -m));
  }

  double mag() const { return std::max(std::fabs(lo_), std::fabs(hi_)); }

  double mig() const {
    if (contains(0.0)) return 0.0;
    return std::min(std::fabs(lo_), std::fabs(hi_));
  }

  bool contains(double x) const { return lo_ <= x && x <= hi_; }
  bool contains(const Interval& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }

  // o lies in the topological interior of this interval.
  bool contains_in_interior(const Interval& o) const {
    return lo_ < o.lo_ && o.hi_ < hi_;
  }

  bool strictly_positive() const { return lo_ > 0; }
  bool strictly_negative() const { return hi_ < 0; }

  Interval operator-() const { return Interval(-hi_, -lo_); }

  Interval& operator+=(const Interval& o) { return *this = *this + o; }
  Interval& operator-=(const Interval& o) { return *this = *this - o; }
  Interval& operator*=(const Interval& o) { return *this = *this * o; }
  Interval& operator/=(const Interval& o) { return *this = *this / o; }

  friend Interval operator+(const Interval& a, const Interval& b) {
    return Interval(detail::add_down(a.lo_, b.lo_), detail::add_up(a.hi_, b.hi_));
  }

  friend Interval operator-(const Interval& a, const Interval& b) {
    return Interval(detail::add_down(a.lo_, -b.hi_), detail::add_up(a.hi_, -b.lo_));
  }

  friend Interval operator*(const Interval& a, const Interval& b) {
    if (a.is_point() && b.is_point())
      return Interval(detail::mul_down(a.lo_, b.lo_), detail::mul_up(a.lo_, b.lo_));
    double lo = std::min(std::min(detail::mul_down(a.lo_, b.lo_), detail::mul_down(a.lo_, b.hi_)),
                         std::min(detail::mul_down(a.hi_, b.lo_), detail::mul_down(a.hi_, b.hi_)));
    double hi = std::max(std::max(detail::mul_up(a.lo_, b.lo_), detail::mul_up(a.lo_, b.hi_)),
                         std::max(detail::mul_up(a.hi_, b.lo_), detail::mul_up(a.hi_, b.hi_)));
    return Interval(lo, hi);
  }

  friend Interval operator/(const Interval& a, const Interval& b) {
    if (b.contains(0.0)) throw DivisionByZeroInterval();
    double lo = std::min(std::min(detail::div_down(a.lo_, b.lo_), detail::div_down(a.lo_, b.hi_)),
                         std::min(detail::div_down(a.hi_, b.lo_), detail::div_down(a.hi_, b.hi_)));
    double hi = std::max(std::max(detail::div_up(a.lo_, b.lo_), detail::div_up(a.lo_, b.hi_)),
                         std::max(detail::div_up(a.hi_, b.lo_), detail::div_up(a.hi_, b.hi_)));
    return Interval(lo, hi);
  }

 private:
  void validate() const {
    if (!(std::isfinite(lo_) && std::isfinite(hi_)))
      throw IntervalError("interval bounds must be finite");
    if (lo_ > hi_) throw IntervalError("interval bounds out of order");
  }

  double lo_, hi_;
};

inline Interval hull(const Interval& a, const Interval& b) {
  return Interval(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

// Empty intersection is an explicit outcome, not a sentinel value.
inline std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  double lo = std::max(a.lo(), b.lo());
  double hi = std::min(a.hi(), b.hi());
  if (lo > hi) return std::nullopt;
  return Interval(lo, hi);
}

inline bool disjoint(const Interval& a, const Interval& b) {
  return a.hi() < b.lo() || b.hi() < a.lo();
}

inline Interval sqr(const Interval& a) {
  double m = a.mig(), M = a.mag();
  return Interval(detail::mul_down(m, m), detail::mul_up(M, M));
}

namespace detail {

// x^n with one-sided rounding, n >= 1; dir=+1 rounds up, -1 down.
inline double pow_dir(double x, unsigned n, int dir) {
  bool neg = x < 0 && (n % 2 == 1);
  double ax = std::fabs(x);
  // A negative result rounds outward in the opposite magnitude direction.
  int mdir = neg ? -dir : dir;
  double r = 1.0;
  for (unsigned i = 0; i < n; ++i)
    r = mdir > 0 ? mul_up(r, ax) : mul_down(r, ax);
  return neg ? -r : r;
}

}  // namespace detail

inline Interval pow(const Interval& a, unsigned n) {
  if (n == 0) return Interval(1.0);
  if (n == 1) return a;
  if (n % 2 == 0) {
    double m = a.mig(), M = a.mag();
    return Interval(detail::pow_dir(m, n, -1), detail::pow_dir(M, n, +1));
  }
  return Interval(detail::pow_dir(a.lo(), n, -1), detail::pow_dir(a.hi(), n, +1));
}

// IEEE sqrt rounds to nearest, so a one-ulp outward nudge wherever the
// result is inexact gives a rigorous enclosure; the FMA residual decides
// exactness.
inline Interval sqrt(const Interval& a) {
  if (a.lo() < 0) throw IntervalError("sqrt of an interval reaching below zero");
  double lo = std::sqrt(a.lo()), hi = std::sqrt(a.hi());
  if (std::fma(lo, lo, -a.lo()) != 0) lo = detail::next_down(lo);
  if (std::fma(hi, hi, -a.hi()) != 0) hi = detail::next_up(hi);
  return Interval(lo < 0 ? 0.0 : lo, hi);
}

// Rigorous upper bound for e^x, x >= 0, via e^t <= 1/(1-t) on [0, 1/2]
// and repeated squaring.  Used for logarithmic-norm growth bounds.
inline double exp_upper(double x) {
  if (x < 0) throw IntervalError("exp_upper expects a nonnegative argument");
  int k = 0;
  double t = x;
  while (t > 0.5 && k < 64) {
    t = detail::mul_up(t, 0.5) ;
    ++k;
  }
  if (t > 0.5) detail::overflow();
  Interval b = Interval(1.0) / (Interval(1.0) - Interval(t));
  double r = b.hi();
  for (int i = 0; i < k; ++i) r = detail::mul_up(r, r);
  detail::check_finite(r);
  return r;
}

// Plain bracket rendering; 17 significant digits round-trip binary64 exactly.
inline std::string to_string(const Interval& v) {
  char buf[64];
  std::string s = "[";
  std::snprintf(buf, sizeof buf, "%.17g", v.lo());
  s += buf;
  s += ",";
  std::snprintf(buf, sizeof buf, "%.17g", v.hi());
  s += buf;
  s += "]";
  return s;
}

namespace detail {

inline std::string shortest_repr(double x) {
  char buf[48];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

}  // namespace detail

// Compressed rendering "prefix_{lo tail}^{hi tail}": the shared leading digits
// are printed once, the subscript completes the lower bound and the
// superscript the upper.  Falls back to bracket form when the bounds do not
// share a usable prefix.
inline std::string to_string_compressed(const Interval& v) {
  if (v.is_point()) return detail::shortest_repr(v.lo());
  std::string a = detail::shortest_repr(v.lo());
  std::string b = detail::shortest_repr(v.hi());
  if (a.find_first_of("eE") != std::string::npos ||
      b.find_first_of("eE") != std::string::npos)
    return to_string(v);
  size_t dot_a = a.find('.'), dot_b = b.find('.');
  if (dot_a == std::string::npos || dot_a != dot_b) return to_string(v);
  size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  // Require the split to happen after the decimal point and leave both tails
  // nonempty, so each bound reconstructs as prefix + tail.
  if (n <= dot_a + 1 || n >= a.size() || n >= b.size()) return to_string(v);
  return a.substr(0, n) + "_{" + a.substr(n) + "}^{" + b.substr(n) + "}";
}

}  // namespace rigor
