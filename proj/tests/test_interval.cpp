#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rigor/interval.hpp"
#include "rigor/vec.hpp"

#if RIGOR_HAVE_MPFR
#include <mpfr.h>
#endif

using namespace rigor;

static double ulp_gap(double a, double b) {
  return std::abs(a - b) / std::max(std::ldexp(1.0, -1074), std::abs(std::nexttoward(a, b) - a));
}

TEST_CASE("arithmetic encloses the exact result on small examples") {
  Interval s = Interval(1, 2) + Interval(3, 4);
  REQUIRE(s.contains(4.0));
  REQUIRE(s.contains(6.0));
  REQUIRE(ulp_gap(s.lo(), 4.0) <= 1.0);
  REQUIRE(ulp_gap(s.hi(), 6.0) <= 1.0);

  Interval p = Interval(-1, 2) * Interval(3, 4);
  REQUIRE(p.contains(-4.0));
  REQUIRE(p.contains(8.0));

  Interval q = Interval(1) / Interval(2, 4);
  REQUIRE(q.contains(0.25));
  REQUIRE(q.contains(0.5));

  REQUIRE_THROWS_AS(Interval(1) / Interval(-1, 1), DivisionByZeroInterval);
}

TEST_CASE("construction rejects invalid bounds") {
  REQUIRE_THROWS_AS(Interval(2, 1), IntervalError);
  REQUIRE_THROWS_AS(Interval(0, std::numeric_limits<double>::infinity()), IntervalError);
  REQUIRE_THROWS_AS(Interval(std::nan("")), IntervalError);
}

TEST_CASE("set operations") {
  auto i = intersect(Interval(1, 3), Interval(2, 4));
  REQUIRE(i);
  REQUIRE(i->lo() == 2.0);
  REQUIRE(i->hi() == 3.0);
  REQUIRE(!intersect(Interval(1, 2), Interval(3, 4)));
  REQUIRE(disjoint(Interval(1, 2), Interval(3, 4)));

  REQUIRE(Interval(1, 2).contains_in_interior(Interval(1.1, 1.9)));
  REQUIRE(!Interval(1, 2).contains_in_interior(Interval(1.0, 1.9)));

  REQUIRE(hull(Interval(1, 2), Interval(5, 6)).lo() == 1.0);
  REQUIRE(hull(Interval(1, 2), Interval(5, 6)).hi() == 6.0);
  REQUIRE(Interval(1, 3).mid() == 2.0);
  REQUIRE(Interval(1, 3).width() >= 2.0);
}

TEST_CASE("invert2x2 examples") {
  IMat2 d;
  d(0, 0) = Interval(2);
  d(1, 1) = Interval(4);
  IMat2 inv = invert2x2(d);
  REQUIRE(inv(0, 0).contains(0.5));
  REQUIRE(inv(1, 1).contains(0.25));
  REQUIRE(inv(0, 1).contains(0.0));

  IMat2 id = IMat2::identity();
  IMat2 idinv = invert2x2(id);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) REQUIRE(idinv(i, j).contains(i == j ? 1.0 : 0.0));

  IMat2 sing;
  sing(0, 0) = Interval(1);
  sing(0, 1) = Interval(2);
  sing(1, 0) = Interval(2);
  sing(1, 1) = Interval(4);
  REQUIRE_THROWS_AS(invert2x2(sing), SingularEnclosure);
}

TEST_CASE("subdivide covers the box") {
  IVec2 b;
  b[0] = Interval(0, 1);
  b[1] = Interval(0, 1);
  auto parts = subdivide<2>(b, {2, 2});
  REQUIRE(parts.size() == 4);
  IVec2 h = parts[0];
  for (const auto& p : parts) {
    REQUIRE(b.contains(p));
    h = hull(h, p);
  }
  for (int i = 0; i < 2; ++i) {
    REQUIRE(h[i].lo() == b[i].lo());
    REQUIRE(h[i].hi() == b[i].hi());
  }

  auto one = subdivide<2>(b, {1, 1});
  REQUIRE(one.size() == 1);
  REQUIRE(one[0][0].lo() == 0.0);
  REQUIRE(one[0][1].hi() == 1.0);

  IVec<1> line;
  line[0] = Interval(0, 1);
  auto thirds = subdivide<1>(line, {3});
  REQUIRE(thirds.size() == 3);
  REQUIRE(thirds[0][0].hi() == thirds[1][0].lo());
  REQUIRE(thirds[1][0].hi() == thirds[2][0].lo());
}

namespace {

std::mt19937_64 rng(20260822);

double random_value(double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return u(rng);
}

Interval random_interval() {
  std::uniform_int_distribution<int> mag(-6, 6);
  double scale = std::pow(10.0, mag(rng));
  double a = random_value(scale), b = random_value(scale);
  return Interval(std::min(a, b), std::max(a, b));
}

double random_in(const Interval& v) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double t = u(rng);
  double x = v.lo() + t * (v.hi() - v.lo());
  return std::min(std::max(x, v.lo()), v.hi());
}

}  // namespace

#if RIGOR_HAVE_MPFR
TEST_CASE("containment fuzzing against a 256-bit oracle") {
  mpfr_t xm, ym, rm;
  mpfr_inits2(256, xm, ym, rm, (mpfr_ptr) nullptr);
  const int per_op = 250000;
  for (int op = 0; op < 4; ++op) {
    for (int it = 0; it < per_op; ++it) {
      Interval a = random_interval(), b = random_interval();
      if (op == 3 && b.contains(0.0)) continue;
      double x = random_in(a), y = random_in(b);
      Interval r;
      switch (op) {
        case 0: r = a + b; break;
        case 1: r = a - b; break;
        case 2: r = a * b; break;
        default: r = a / b; break;
      }
      mpfr_set_d(xm, x, MPFR_RNDN);
      mpfr_set_d(ym, y, MPFR_RNDN);
      switch (op) {
        case 0: mpfr_add(rm, xm, ym, MPFR_RNDN); break;
        case 1: mpfr_sub(rm, xm, ym, MPFR_RNDN); break;
        case 2: mpfr_mul(rm, xm, ym, MPFR_RNDN); break;
        default: mpfr_div(rm, xm, ym, MPFR_RNDN); break;
      }
      bool inside = mpfr_cmp_d(rm, r.lo()) >= 0 && mpfr_cmp_d(rm, r.hi()) <= 0;
      if (!inside) {
        CAPTURE(op, x, y, r.lo(), r.hi());
        REQUIRE(inside);
      }
    }
  }
  mpfr_clears(xm, ym, rm, (mpfr_ptr) nullptr);
}
#else
TEST_CASE("containment fuzzing against a long-double oracle") {
  const int per_op = 250000;
  for (int op = 0; op < 4; ++op) {
    for (int it = 0; it < per_op; ++it) {
      Interval a = random_interval(), b = random_interval();
      if (op == 3 && b.contains(0.0)) continue;
      long double x = random_in(a), y = random_in(b);
      Interval r;
      long double e;
      switch (op) {
        case 0: r = a + b; e = x + y; break;
        case 1: r = a - b; e = x - y; break;
        case 2: r = a * b; e = x * y; break;
        default: r = a / b; e = x / y; break;
      }
      REQUIRE((e >= r.lo() && e <= r.hi()));
    }
  }
}
#endif

TEST_CASE("inclusion monotonicity") {
  for (int it = 0; it < 10000; ++it) {
    Interval ap = random_interval(), bp = random_interval();
    // shrink to random sub-intervals
    double l1 = random_in(ap), l2 = random_in(ap);
    Interval a(std::min(l1, l2), std::max(l1, l2));
    double m1 = random_in(bp), m2 = random_in(bp);
    Interval b(std::min(m1, m2), std::max(m1, m2));
    for (int op = 0; op < 4; ++op) {
      if (op == 3 && bp.contains(0.0)) continue;
      Interval small, big;
      switch (op) {
        case 0: small = a + b; big = ap + bp; break;
        case 1: small = a - b; big = ap - bp; break;
        case 2: small = a * b; big = ap * bp; break;
        default: small = a / b; big = ap / bp; break;
      }
      REQUIRE(big.contains(small));
    }
  }
}

TEST_CASE("invert2x2 contains the extended-precision inverse") {
  for (int it = 0; it < 2000; ++it) {
    double m[4];
    for (double& v : m) v = random_value(10.0);
    long double det = (long double)m[0] * m[3] - (long double)m[1] * m[2];
    if (std::abs((double)det) < 0.5) continue;  // keep the sample well-conditioned
    IMat2 im;
    im(0, 0) = Interval(m[0]);
    im(0, 1) = Interval(m[1]);
    im(1, 0) = Interval(m[2]);
    im(1, 1) = Interval(m[3]);
    IMat2 inv = invert2x2(im);
    long double ex[4] = {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
    REQUIRE(inv(0, 0).lo() <= ex[0]);
    REQUIRE(inv(0, 0).hi() >= ex[0]);
    REQUIRE(inv(0, 1).lo() <= ex[1]);
    REQUIRE(inv(0, 1).hi() >= ex[1]);
    REQUIRE(inv(1, 0).lo() <= ex[2]);
    REQUIRE(inv(1, 0).hi() >= ex[2]);
    REQUIRE(inv(1, 1).lo() <= ex[3]);
    REQUIRE(inv(1, 1).hi() >= ex[3]);
  }
}

TEST_CASE("sqrt and pow are outward") {
  Interval r = sqrt(Interval(2));
  REQUIRE(r.lo() <= 1.4142135623730950488L);
  REQUIRE(r.hi() >= 1.4142135623730950488L);
  REQUIRE(sqrt(Interval(4)).contains(2.0));
  REQUIRE(sqrt(Interval(0, 9)).contains(0.0));
  REQUIRE_THROWS_AS(sqrt(Interval(-1, 1)), IntervalError);

  REQUIRE(pow(Interval(-2, 3), 2).contains(9.0));
  REQUIRE(pow(Interval(-2, 3), 2).contains(0.0));
  REQUIRE(pow(Interval(-2, 3), 3).contains(-8.0));
}

TEST_CASE("17-digit rendering round-trips exactly") {
  for (int it = 0; it < 1000; ++it) {
    Interval v = random_interval();
    std::string s = to_string(v);
    double lo, hi;
    REQUIRE(std::sscanf(s.c_str(), "[%lg,%lg]", &lo, &hi) == 2);
    REQUIRE(lo == v.lo());
    REQUIRE(hi == v.hi());
  }
}

TEST_CASE("compressed rendering splits at the shared prefix") {
  Interval v(-3.466415205012922, -3.466415205008744);
  REQUIRE(to_string_compressed(v) == "-3.4664152050_{12922}^{08744}");
  // falls back to bracket form when no usable prefix exists
  REQUIRE(to_string_compressed(Interval(1, 2)) == to_string(Interval(1, 2)));
  // point intervals render as the bare number
  REQUIRE(to_string_compressed(Interval(0.5)) == "0.5");
}
