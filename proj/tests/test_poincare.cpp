#include <catch2/catch_amalgamated.hpp>

#include <rigor/rigor.hpp>

#include <array>
#include <cmath>
#include <random>

using namespace rigor;

namespace {

// Non-validated return map used as an oracle: high-order fixed-step Taylor
// with bisected crossing detection.  Restarting from x = 0 at each return
// matches the validated map's repeated section projection.
std::array<double, 2> fast_return(double a, double y, double z, int n) {
  ExploreSettings s;
  s.order = 30;
  s.step = 1.0 / 1024;
  FastRossler fr(a, s);
  fr.set_state(0.0, y, z);
  std::array<double, 2> out{0, 0};
  for (int i = 0; i < n; ++i) {
    auto r = fr.next_return();
    REQUIRE(r.has_value());
    out = *r;
    fr.set_state(0.0, out[0], out[1]);
  }
  return out;
}

IVec2 point_box(double y, double z) {
  IVec2 b;
  b[0] = Interval(y);
  b[1] = Interval(z);
  return b;
}

IVec2 box2(double ylo, double yhi, double zlo, double zhi) {
  IVec2 b;
  b[0] = Interval(ylo, yhi);
  b[1] = Interval(zlo, zhi);
  return b;
}

bool meets(const IVec2& a, const IVec2& b) {
  return intersect(a[0], b[0]).has_value() && intersect(a[1], b[1]).has_value();
}

bool subset(const IVec2& inner, const IVec2& outer) {
  return outer[0].contains(inner[0]) && outer[1].contains(inner[1]);
}

// Largest/smallest singular value of the midpoint of a 2x2 enclosure.
std::array<double, 2> singular_values(const IMat2& D) {
  double m00 = D(0, 0).mid(), m01 = D(0, 1).mid();
  double m10 = D(1, 0).mid(), m11 = D(1, 1).mid();
  double t = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
  double det = m00 * m11 - m01 * m10;
  double disc = std::sqrt(std::max(0.0, t * t - 4 * det * det));
  return {std::sqrt((t + disc) / 2), std::sqrt(std::max(0.0, (t - disc) / 2))};
}

}  // namespace

TEST_CASE("transversality is the sign of -y-z over the box") {
  // Bounding box of the forward-invariant region at a = 4.7: speed >= 3.4.
  IVec2 region = box2(-8.87, -3.52, 0.031, 0.040);
  REQUIRE(check_transversality(region));
  REQUIRE(section_speed(region).lo() >= 3.4);

  REQUIRE_FALSE(check_transversality(box2(-0.01, -0.005, 0.02, 0.03)));
  REQUIRE(check_transversality(box2(-1.0, -0.5, 0.0, 0.0)));
}

TEST_CASE("section boxes outside the half-plane y < 0 are rejected") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  REQUIRE_THROWS_AS(poincare_map(s.field, box2(-0.01, 0.01, 0.02, 0.03), 1, st),
                    IntervalError);
}

TEST_CASE("printed period-3 rectangle returns onto itself in three steps") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  const IVec2& b = s.reference_orbits.at(3)[0];
  auto ce = poincare_map(s.field, b, 3, st);
  REQUIRE(meets(ce.image, b));
  REQUIRE(ce.time.lo() > 0.0);
}

TEST_CASE("printed period-5 rectangle returns onto itself in five steps") {
  const auto& s = get_system("a47");
  IntegratorSettings st;
  const IVec2& b = s.reference_orbits.at(5)[0];
  auto ce = poincare_map(s.field, b, 5, st);
  REQUIRE(meets(ce.image, b));
  REQUIRE(ce.time.lo() > 0.0);
}

TEST_CASE("subdivided image hulls are no wider than the single-box image") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  const IVec2& b = s.reference_orbits.at(3)[0];
  auto coarse = poincare_map(s.field, b, 1, st, GridSpec{1, 1});
  auto fine = poincare_map(s.field, b, 1, st, GridSpec{4, 1});
  REQUIRE(subset(fine.image, coarse.image));
}

TEST_CASE("each period-3 point has exactly one successor among the rectangles") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  const auto& orb = s.reference_orbits.at(3);

  const IVec2& b = orb[0];
  auto ce = poincare_map(s.field, b, 1, st);
  int hits = 0, successor = -1;
  for (int i = 0; i < 3; ++i)
    if (meets(ce.image, orb[size_t(i)])) {
      ++hits;
      successor = i;
    }
  REQUIRE(hits == 1);

  // The non-validated oracle must predict the same successor, and its image
  // point must land inside the validated enclosure.
  auto f = fast_return(5.25, b[0].mid(), b[1].mid(), 1);
  REQUIRE(orb[size_t(successor)][0].contains(f[0]));
  REQUIRE(orb[size_t(successor)][1].contains(f[1]));
  REQUIRE(ce.image[0].contains(f[0]));
  REQUIRE(ce.image[1].contains(f[1]));
}

TEST_CASE("derivative of the return map matches finite differences") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  const auto& orb = s.reference_orbits.at(3);
  const double eps = 1e-5;

  struct Probe {
    int n;
    double y, z;
  };
  const Probe probes[] = {{1, orb[0][0].mid(), orb[0][1].mid()},
                          {3, orb[1][0].mid(), orb[1][1].mid()}};
  for (const Probe& pr : probes) {
    IMat2 D = poincare_derivative(s.field, point_box(pr.y, pr.z), pr.n, st);
    for (int j = 0; j < 2; ++j) {
      auto hi = fast_return(5.25, pr.y + (j == 0 ? eps : 0), pr.z + (j == 1 ? eps : 0), pr.n);
      auto lo = fast_return(5.25, pr.y - (j == 0 ? eps : 0), pr.z - (j == 1 ? eps : 0), pr.n);
      for (int i = 0; i < 2; ++i) {
        double fd = (hi[i] - lo[i]) / (2 * eps);
        double tol = 1e-5 * std::max(1.0, std::abs(fd));
        REQUIRE(std::abs(fd - D(i, j).mid()) < tol);
      }
    }
  }
}

TEST_CASE("third-return derivative along the attracting orbit") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  const auto& orb = s.reference_orbits.at(3);

  // One matrix per orbit point.  All three are conjugate, so they share a
  // spectrum; the singular values are coordinate-dependent and differ.
  std::array<IMat2, 3> D;
  std::array<double, 3> dominant{};
  for (int i = 0; i < 3; ++i) {
    D[size_t(i)] = poincare_derivative(
        s.field, point_box(orb[size_t(i)][0].mid(), orb[size_t(i)][1].mid()), 3, st);
    double tr = D[size_t(i)](0, 0).mid() + D[size_t(i)](1, 1).mid();
    double det = D[size_t(i)](0, 0).mid() * D[size_t(i)](1, 1).mid() -
                 D[size_t(i)](0, 1).mid() * D[size_t(i)](1, 0).mid();

    // Both eigenvalues strictly inside the unit disk: the orbit attracts.
    REQUIRE(std::abs(det) < 1.0);
    REQUIRE(std::abs(tr) < 1.0 + det);

    double disc = tr * tr - 4 * det;
    REQUIRE(disc > 0.0);
    dominant[size_t(i)] = (tr - std::sqrt(disc)) / 2;
  }

  // Shared spectrum: the dominant multiplier agrees point to point.
  REQUIRE(std::abs(dominant[0] - dominant[1]) < 1e-6);
  REQUIRE(std::abs(dominant[1] - dominant[2]) < 1e-6);
  REQUIRE(dominant[0] < -0.1);
  REQUIRE(dominant[0] > -1.0);

  // At the first and third points the matrix norm itself is below one.  At
  // the second it is not (2.02: strong non-normality), so contraction there
  // is only spectral; asserting a norm bound at that point would be false.
  REQUIRE(singular_values(D[0])[0] < 1.0);
  REQUIRE(singular_values(D[2])[0] < 1.0);
  REQUIRE(singular_values(D[1])[0] > 1.0);
}

TEST_CASE("derivative enclosures grow with the input box") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  const auto& b = s.reference_orbits.at(3)[0];
  double y = b[0].mid(), z = b[1].mid();

  auto widen = [&](double r) { return box2(y - r, y + r, z - r, z + r); };
  IMat2 small = poincare_derivative(s.field, widen(1e-7), 1, st);
  IMat2 large = poincare_derivative(s.field, widen(1e-6), 1, st);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) REQUIRE(large(i, j).contains(small(i, j)));
}

TEST_CASE("an identity chart reproduces the raw return map bit for bit") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  const IVec2& b = s.reference_orbits.at(3)[0];
  auto raw = poincare_map(s.field, b, 1, st);
  auto idn = chart_poincare(s.field, AffineChart::identity(), b, 1, st);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(raw.image[i].lo() == idn.image[i].lo());
    REQUIRE(raw.image[i].hi() == idn.image[i].hi());
  }
  REQUIRE(raw.time.lo() == idn.time.lo());
  REQUIRE(raw.time.hi() == idn.time.hi());
}

TEST_CASE("the image of the long strip avoids its own horizontal boundary") {
  // Every image piece either stays strictly inside the band |v| < r or has
  // left the strip's u-range entirely; the horizontal edges {(u, +-r)} are
  // never touched.  This is the geometric heart of the self-covering.
  const auto& s = get_system("a525");
  IntegratorSettings st;
  const HSet& N1 = s.main;

  std::vector<CrossingEnclosure> pieces;
  chart_poincare(s.field, s.chart, N1.body(), 1, st, GridSpec{120, 1}, 1, &pieces);
  REQUIRE(pieces.size() == 120);
  for (const auto& ce : pieces) {
    const IVec2& im = ce.image;
    bool v_hits = im[1].contains(N1.r) || im[1].contains(-N1.r);
    bool u_hits = !(im[0].hi() < N1.base.lo() || im[0].lo() > N1.base.hi());
    REQUIRE_FALSE((v_hits && u_hits));
  }
}

TEST_CASE("chart round trips enclose the input") {
  const auto& s = get_system("a525");
  const AffineChart& C = s.chart;

  // Narrow box: the round-trip excess stays far below the box scale.
  IVec2 b = s.reference_orbits.at(3)[1];
  IVec2 rt = C.inverse(C.forward(b));
  REQUIRE(subset(b, rt));
  REQUIRE(rt[0].width() - b[0].width() < 1e-12);
  REQUIRE(rt[1].width() - b[1].width() < 1e-12);

  // Wide box: still a superset (the excess is the usual dependency cost).
  IVec2 body = s.main.body();
  REQUIRE(subset(body, C.inverse(C.forward(body))));
}

TEST_CASE("random section points stay inside their validated images") {
  const auto& s = get_system("a47");
  IntegratorSettings st;
  const HSet& A = *s.trap;

  std::mt19937_64 rng(20260822);
  std::uniform_real_distribution<double> du(A.base.lo(), A.base.hi());
  std::uniform_real_distribution<double> dv(-A.r, A.r);
  for (int k = 0; k < 20; ++k) {
    IVec2 c;
    c[0] = Interval(du(rng));
    c[1] = Interval(dv(rng));
    IVec2 sec = A.chart.forward(c);
    double y = sec[0].mid(), z = sec[1].mid();
    auto f = fast_return(4.7, y, z, 1);
    auto ce = poincare_map(s.field, point_box(y, z), 1, st);
    REQUIRE(ce.image[0].contains(f[0]));
    REQUIRE(ce.image[1].contains(f[1]));
  }
}

TEST_CASE("return times of the reference orbits are positive and short") {
  IntegratorSettings st;
  for (const char* name : {"a525", "a47"}) {
    const auto& s = get_system(name);
    for (const auto& [period, boxes] : s.reference_orbits) {
      if (period != 3 && period != 5) continue;
      for (const IVec2& b : boxes) {
        auto ce = poincare_map(s.field, b, 1, st);
        REQUIRE(ce.time.lo() > 0.0);
        REQUIRE(ce.time.hi() < 10.0);
      }
    }
  }
}
