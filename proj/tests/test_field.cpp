#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rigor/nonrigorous.hpp"
#include "rigor/polyfield.hpp"

using namespace rigor;

namespace {

const Interval kA525 = rational_enclosure(525, 100);
const Interval kA47 = rational_enclosure(47, 10);
const Interval kB = rational_enclosure(2, 10);

IVec<3> pt(double x, double y, double z) { return to_ivec<3>({x, y, z}); }

}  // namespace

TEST_CASE("parameters arrive as enclosures of the exact rationals") {
  // 0.2 and 4.7 have no exact binary64 form; the enclosures stay within a
  // couple of ulps but never collapse to a point.
  REQUIRE(kB.contains(0.2));
  REQUIRE(kB.width() > 0);
  REQUIRE(kB.width() < 1e-16);
  REQUIRE(kA47.contains(4.7));
  REQUIRE(kA47.width() > 0);
  // 5.25 = 21/4 is exact
  REQUIRE(kA525.lo() == 5.25);
  REQUIRE(kA525.hi() == 5.25);
}

TEST_CASE("eval matches hand substitution") {
  PolyField<3> f525 = rossler_field(kA525, kB);
  IVec<3> v = f525.eval(pt(0, 0, 0));
  REQUIRE(v[0].contains(0.0));
  REQUIRE(v[0].width() == 0);
  REQUIRE(v[1].contains(0.0));
  REQUIRE(v[2].contains(0.2));
  REQUIRE(v[2].width() < 1e-16);

  PolyField<3> f47 = rossler_field(kA47, kB);
  IVec<3> w = f47.eval(pt(1, 1, 1));
  REQUIRE(w[0].contains(-2.0));
  REQUIRE(w[0].width() == 0);
  REQUIRE(w[1].contains(1.2));
  REQUIRE(w[1].width() < 1e-15);
  REQUIRE(w[2].contains(-3.5));
  REQUIRE(w[2].width() < 1e-14);

  IVec<3> box;
  box[0] = Interval(0, 1);
  box[1] = Interval(0);
  box[2] = Interval(0);
  IVec<3> r = f525.eval(box);
  REQUIRE(r[0].contains(0.0));
  REQUIRE(r[0].width() == 0);
  REQUIRE(r[1].contains(Interval(0, 1)));
  REQUIRE(r[2].contains(0.2));
}

TEST_CASE("jacobian matches the formal derivative") {
  PolyField<3> f525 = rossler_field(kA525, kB);
  IMat<3, 3> j = f525.jacobian(pt(0, 0, 0));
  double expect525[3][3] = {{0, -1, -1}, {1, 0.2, 0}, {0, 0, -5.25}};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      REQUIRE(j(i, k).contains(expect525[i][k]));
      REQUIRE(j(i, k).width() < 1e-15);
    }

  PolyField<3> f47 = rossler_field(kA47, kB);
  IMat<3, 3> j2 = f47.jacobian(pt(1, 0, 2));
  double expect47[3][3] = {{0, -1, -1}, {1, 0.2, 0}, {2, 0, -3.7}};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) REQUIRE(j2(i, k).contains(expect47[i][k]));

  // constant field: zero Jacobian
  std::array<std::vector<Monomial<1>>, 1> c;
  c[0] = {{Interval(7.0), {0}}};
  PolyField<1> constant = PolyField<1>::make(std::move(c), "constant");
  IVec<1> x;
  x[0] = Interval(3, 4);
  REQUIRE(constant.jacobian(x)(0, 0).lo() == 0.0);
  REQUIRE(constant.jacobian(x)(0, 0).hi() == 0.0);
}

TEST_CASE("taylor coefficients of the shipped test fields") {
  IVec<1> one;
  one[0] = Interval(1.0);
  auto b = taylor_coefficients(exp_field(), one, 4);
  double factorial[5] = {1, 1, 0.5, 1.0 / 6, 1.0 / 24};
  REQUIRE(b.sol.size() == 5);
  for (int n = 0; n <= 4; ++n) {
    REQUIRE(b.sol[size_t(n)][0].contains(factorial[n]));
    REQUIRE(b.sol[size_t(n)][0].width() < 1e-15);
  }

  IVec<2> e1;
  e1[0] = Interval(1.0);
  e1[1] = Interval(0.0);
  auto rot = taylor_coefficients(rotation_field(), e1, 2);
  double expect[3][2] = {{1, 0}, {0, 1}, {-0.5, 0}};
  for (int n = 0; n <= 2; ++n)
    for (int i = 0; i < 2; ++i) {
      REQUIRE(rot.sol[size_t(n)][size_t(i)].contains(expect[n][i]));
      REQUIRE(rot.sol[size_t(n)][size_t(i)].width() < 1e-15);
    }
}

TEST_CASE("first taylor coefficient equals the field value") {
  PolyField<3> f = rossler_field(kA525, kB);
  IVec<3> x0 = pt(0, -5, 0.03);
  auto b = taylor_coefficients(f, x0, 3);
  IVec<3> v = f.eval(x0);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(b.sol[0][i].lo() == x0[i].lo());
    REQUIRE(b.sol[1][i].contains(v[i]));
    REQUIRE(v[i].contains(b.sol[1][i]));
  }
}

TEST_CASE("eval and jacobian are inclusion-monotone") {
  PolyField<3> f = rossler_field(kA47, kB);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5, 5), w(0, 0.5);
  for (int it = 0; it < 200; ++it) {
    IVec<3> big, small;
    for (int i = 0; i < 3; ++i) {
      double c = u(rng), r = w(rng) + 0.01;
      big[i] = Interval(c - r, c + r);
      double rr = r * 0.3;
      small[i] = Interval(c - rr, c + rr);
    }
    IVec<3> eb = f.eval(big), es = f.eval(small);
    for (int i = 0; i < 3; ++i) REQUIRE(eb[i].contains(es[i]));
    IMat<3, 3> jb = f.jacobian(big), js = f.jacobian(small);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) REQUIRE(jb(i, j).contains(js(i, j)));
  }
}

TEST_CASE("jacobian agrees with central finite differences") {
  PolyField<3> f = rossler_field(kA525, kB);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-8, 8);
  const double h = 1e-6;
  for (int it = 0; it < 100; ++it) {
    double p[3] = {u(rng), u(rng), u(rng)};
    IMat<3, 3> j = f.jacobian(pt(p[0], p[1], p[2]));
    for (int col = 0; col < 3; ++col) {
      double hi[3] = {p[0], p[1], p[2]}, lo[3] = {p[0], p[1], p[2]};
      hi[col] += h;
      lo[col] -= h;
      IVec<3> fp = f.eval(pt(hi[0], hi[1], hi[2]));
      IVec<3> fm = f.eval(pt(lo[0], lo[1], lo[2]));
      for (int row = 0; row < 3; ++row) {
        double fd = (fp[row].mid() - fm[row].mid()) / (2 * h);
        double jv = j(row, col).mid();
        double scale = std::max(1.0, std::abs(jv));
        REQUIRE(std::abs(fd - jv) < 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("truncated series agrees with a high-order reference step") {
  const double a = 5.25, h = 1e-3;
  const int k = 12;
  PolyField<3> f = rossler_field(kA525, kB);
  IVec<3> x0 = pt(0, -5, 0.03);
  auto b = taylor_coefficients(f, x0, k + 5);

  // Horner evaluation of the truncated series at h, in interval arithmetic.
  IVec<3> acc = b.sol[size_t(k)];
  for (int n = k - 1; n >= 0; --n)
    for (int i = 0; i < 3; ++i) acc[i] = acc[i] * Interval(h) + b.sol[size_t(n)][i];

  // Tail estimate from the next few computed coefficients.
  double tail = 0;
  for (int n = k + 1; n <= k + 5; ++n)
    for (int i = 0; i < 3; ++i)
      tail = std::max(tail, std::max(std::abs(b.sol[size_t(n)][i].lo()),
                                     std::abs(b.sol[size_t(n)][i].hi())) *
                                std::pow(h, n));
  double budget = 10 * tail + 1e-14;

  // Independent double-precision reference: one order-20 step, obtained by
  // capping the return budget below a single step.
  ExploreSettings s1;
  s1.order = 20;
  s1.step = h;
  s1.max_time_per_return = h * 0.5;
  FastRossler one(a, s1);
  one.set_state(0, -5, 0.03);
  one.next_return();
  auto st = one.state();
  for (int i = 0; i < 3; ++i) {
    double d = std::min(std::abs(st[size_t(i)] - acc[i].lo()),
                        std::abs(st[size_t(i)] - acc[i].hi()));
    if (acc[i].contains(st[size_t(i)])) d = 0;
    REQUIRE(d <= budget);
  }
}
