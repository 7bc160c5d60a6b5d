#include <catch2/catch_amalgamated.hpp>

#include <rigor/rigor.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

using namespace rigor;

namespace {

HSet unit_strip(const char* name) {
  HSet h;
  h.name = name;
  h.chart = AffineChart::identity();
  h.base = Interval(-1.0, 1.0);
  h.r = 0.1;
  return h;
}

// Evidence for a coordinate-wise linear map (u,v) -> (su*u, sv*v), built the
// same way covers() builds it: tile the body and both edges, record each
// image with the clause it satisfies against the target geometry.
CoveringEdge linear_map_evidence(const HSet& n, double su, double sv) {
  auto classify = [&](const IVec2& img, bool body) {
    if (body && img[1].lo() > -n.r && img[1].hi() < n.r) return 0;
    if (img[0].hi() < n.base.lo()) return -1;
    if (img[0].lo() > n.base.hi()) return 1;
    return 99;  // no clause; recheck must reject
  };
  auto fill = [&](RegionStats& st, const IVec2& region, int n1, int n2, bool body) {
    for (const IVec2& cell : subdivide<2>(region, {n1, n2})) {
      CoveringLeaf l;
      l.box = cell;
      l.image[0] = Interval(su) * cell[0];
      l.image[1] = Interval(sv) * cell[1];
      l.branch = classify(l.image, body);
      st.image_hull = st.leaves.empty() ? l.image : hull(st.image_hull, l.image);
      st.leaves.push_back(l);
    }
    st.pieces = long(st.leaves.size());
  };
  CoveringEdge e;
  e.source = e.target = n.name;
  e.k = 1;
  fill(e.body, n.body(), 8, 1, true);
  int ls = 0, rs = 0;
  fill(e.left, n.edge(false), 1, 8, false);
  fill(e.right, n.edge(true), 1, 8, false);
  if (!e.left.leaves.empty()) ls = e.left.leaves[0].branch;
  if (!e.right.leaves.empty()) rs = e.right.leaves[0].branch;
  e.orientation_preserving = ls < 0;
  (void)rs;
  return e;
}

}  // namespace

TEST_CASE("a horizontally expanding, vertically squeezing map self-covers") {
  HSet n = unit_strip("S");
  CoveringEdge e = linear_map_evidence(n, 3.0, 0.5);
  REQUIRE(recheck(e, n, n));
  REQUIRE(e.orientation_preserving);
}

TEST_CASE("reflection through the vertical axis flips the orientation flag") {
  HSet n = unit_strip("S");
  CoveringEdge e = linear_map_evidence(n, -3.0, 0.5);
  REQUIRE(recheck(e, n, n));
  REQUIRE_FALSE(e.orientation_preserving);
}

TEST_CASE("the identity map never self-covers") {
  // Edge images coincide with the edges themselves, so neither exits
  // through a strip; the band condition also fails at the boundary.
  HSet n = unit_strip("S");
  CoveringEdge e = linear_map_evidence(n, 1.0, 1.0);
  REQUIRE_FALSE(recheck(e, n, n));
}

TEST_CASE("contraction onto the base fails the stretching direction") {
  HSet n = unit_strip("S");
  CoveringEdge e = linear_map_evidence(n, 0.25, 0.5);
  REQUIRE_FALSE(recheck(e, n, n));
}

TEST_CASE("recheck rejects tampered evidence") {
  HSet n = unit_strip("S");
  const CoveringEdge good = linear_map_evidence(n, 3.0, 0.5);
  REQUIRE(recheck(good, n, n));

  CoveringEdge e = good;
  e.body.leaves[3].image[1] = Interval(-0.2, 0.2);  // band clause broken
  REQUIRE_FALSE(recheck(e, n, n));

  e = good;
  e.orientation_preserving = !e.orientation_preserving;
  REQUIRE_FALSE(recheck(e, n, n));

  e = good;
  e.body.leaves.pop_back();  // leaf count no longer matches
  REQUIRE_FALSE(recheck(e, n, n));

  e = good;
  e.body.leaves.back().box[0] = Interval(0.75, 0.9);  // boxes no longer tile
  REQUIRE_FALSE(recheck(e, n, n));

  e = good;
  e.left.leaves[0].branch = 1;  // one left leaf claims the right strip
  REQUIRE_FALSE(recheck(e, n, n));
}

TEST_CASE("the first chain edge verifies against the flow and rechecks") {
  const auto& s = get_system("a525");
  IntegratorSettings st;
  CoveringGrids g = s.default_grids;

  CoveringEdge e = covers(s.field, s.inner, s.main, 1, st, g);
  REQUIRE(e.orientation_preserving);
  REQUIRE(e.body.margin > 0.0);
  REQUIRE(e.left.margin > 0.0);
  REQUIRE(e.right.margin > 0.0);
  REQUIRE(recheck(e, s.inner, s.main));

  // A finer grid must reproduce the same orientation flag.
  CoveringGrids fine = g;
  fine.body_n1 = 2 * g.body_n1;
  CoveringEdge e2 = covers(s.field, s.inner, s.main, 1, st, fine);
  REQUIRE(e2.orientation_preserving == e.orientation_preserving);
  REQUIRE(recheck(e2, s.inner, s.main));
}

TEST_CASE("a failed covering reports the offending box and image") {
  const auto& s = get_system("a525");
  IntegratorSettings st;

  // Undivided body: the affine set is too wide to integrate at all.  The
  // failure carries the cell; no image exists to carry.
  CoveringGrids g;
  g.body_n1 = 1;
  g.body_n2 = 1;
  g.max_depth = 0;
  try {
    covers(s.field, s.main, s.main, 1, st, g);
    FAIL("covering unexpectedly verified");
  } catch (const CoveringFailure& f) {
    REQUIRE(f.box[0].lo() == s.main.body()[0].lo());
    REQUIRE(f.box[0].hi() == s.main.body()[0].hi());
    REQUIRE(std::string(f.what()).find("depth 0") != std::string::npos);
  }

  // Against a target whose band is too thin every integrable cell violates
  // the clause outright; the failure then carries the computed image.
  HSet thin = s.main;
  thin.name = "thin";
  thin.r = 1e-5;
  CoveringGrids g2 = s.default_grids;
  g2.max_depth = 0;
  try {
    covers(s.field, s.main, thin, 1, st, g2);
    FAIL("covering unexpectedly verified");
  } catch (const CoveringFailure& f) {
    REQUIRE(f.image[0].width() > 0.0);
    REQUIRE(f.box[0].width() > 0.0);
    REQUIRE(std::string(f.what()).find("covering condition") != std::string::npos);
  }
}

TEST_CASE("loop construction lays out inner, repeated main, closing edges") {
  const auto& a525 = get_system("a525");
  LoopPattern pat = a525.pattern();

  PeriodLoopSpec one = build_period_loop(pat, 1);
  REQUIRE(one.edges.size() == 1);
  REQUIRE(one.edges[0].source == pat.main);
  REQUIRE(one.edges[0].target == pat.main);
  REQUIRE(one.itinerary.size() == 1);

  PeriodLoopSpec three = build_period_loop(pat, 3);
  REQUIRE(three.edges.size() == 3);
  REQUIRE(three.edges[0].source == pat.inner);
  REQUIRE(three.edges[0].target == pat.main);
  REQUIRE(three.edges[1].source == pat.main);
  REQUIRE(three.edges[2].target == pat.inner);
  REQUIRE(three.itinerary[0] == pat.inner);
  REQUIRE(three.itinerary[1] == pat.main);
  REQUIRE(three.itinerary[2] == pat.main);
}

TEST_CASE("loop labels always sum to the period and edges compose") {
  for (const char* name : {"a525", "a47"}) {
    const auto& s = get_system(name);
    LoopPattern pat = s.pattern();
    for (int n = 1; n <= 12; ++n) {
      PeriodLoopSpec spec;
      try {
        spec = build_period_loop(pat, n);
      } catch (const PeriodNotConstructible&) {
        continue;
      }
      REQUIRE(spec.period == n);
      int sum = 0;
      for (size_t i = 0; i < spec.edges.size(); ++i) {
        sum += spec.edges[i].k;
        REQUIRE(spec.edges[i].target == spec.edges[(i + 1) % spec.edges.size()].source);
      }
      REQUIRE(sum == n);
      REQUIRE(spec.itinerary.size() == size_t(n));
    }
  }
}

TEST_CASE("three-return closing edge rules out periods two through four") {
  const auto& s = get_system("a47");
  LoopPattern pat = s.pattern();

  PeriodLoopSpec five = build_period_loop(pat, 5);
  REQUIRE(five.edges.size() == 3);
  REQUIRE(five.edges.back().k == 3);

  REQUIRE_THROWS_AS(build_period_loop(pat, 2), PeriodNotConstructible);
  REQUIRE_THROWS_AS(build_period_loop(pat, 3), PeriodNotConstructible);
  REQUIRE_THROWS_AS(build_period_loop(pat, 4), PeriodNotConstructible);
  REQUIRE_THROWS_AS(build_period_loop(pat, 0), PeriodNotConstructible);

  // Constructible periods from this pattern: exactly {1} and {5, 6, ...}.
  for (int n = 1; n <= 20; ++n) {
    bool built = true;
    try {
      build_period_loop(pat, n);
    } catch (const PeriodNotConstructible&) {
      built = false;
    }
    REQUIRE(built == (n == 1 || n >= 5));
  }
}

TEST_CASE("itineraries justify fundamental periods only via disjoint visits") {
  const auto& a525 = get_system("a525");
  const auto& a47 = get_system("a47");

  // Period 4: the single visit to the inner set separates every divisor.
  std::vector<const HSet*> it4 = {&a525.inner, &a525.main, &a525.main, &a525.main};
  FundamentalJustification j4 = fundamental_period_argument(it4);
  REQUIRE(j4.period == 4);
  REQUIRE(j4.witnesses.size() == 2);  // divisors 1 and 2
  REQUIRE(j4.witnesses[0].first == 1);
  REQUIRE(j4.witnesses[1].first == 2);

  // Two laps around a self-covering set never force period 2.
  std::vector<const HSet*> it2 = {&a525.main, &a525.main};
  REQUIRE_THROWS_AS(fundamental_period_argument(it2), JustificationUnavailable);

  // Period 7 with the three-return closing edge: positions 5 and 6 are
  // unconstrained, the lone inner visit still separates divisors 1 and 7
  // has none others.
  std::vector<const HSet*> it7 = {&a47.inner, &a47.main, &a47.main, &a47.main,
                                  &a47.main,  nullptr,   nullptr};
  FundamentalJustification j7 = fundamental_period_argument(it7);
  REQUIRE(j7.witnesses.size() == 1);
  REQUIRE(j7.witnesses[0].first == 1);

  // Disjointness is only readable inside one chart.
  std::vector<const HSet*> mixed = {&a525.inner, &a47.main};
  REQUIRE_THROWS_AS(fundamental_period_argument(mixed), JustificationUnavailable);
}

TEST_CASE("the period order starts at three and ends at the powers of two") {
  REQUIRE(sharkovskii_less(3, 5));
  REQUIRE(sharkovskii_less(8, 2));
  REQUIRE(sharkovskii_less(2, 1));
  REQUIRE(sharkovskii_less(3, 1024));
  REQUIRE_FALSE(sharkovskii_less(5, 3));
  REQUIRE_FALSE(sharkovskii_less(1, 2));
  for (long n : {1L, 2L, 3L, 7L, 12L, 96L, 1000L}) REQUIRE_FALSE(sharkovskii_less(n, n));
  REQUIRE_THROWS_AS(sharkovskii_less(0, 3), IntervalError);
}

TEST_CASE("the period order is a strict total order on 1..1000") {
  std::vector<long> v(1000);
  std::iota(v.begin(), v.end(), 1L);
  std::sort(v.begin(), v.end(), [](long m, long n) { return sharkovskii_less(m, n); });

  // Sorting is only trustworthy if the comparator is consistent; verify the
  // rank order against every pair directly.
  long mismatches = 0;
  for (size_t i = 0; i < v.size(); ++i)
    for (size_t j = 0; j < v.size(); ++j)
      if (sharkovskii_less(v[i], v[j]) != (i < j)) ++mismatches;
  REQUIRE(mismatches == 0);

  REQUIRE(v[0] == 3);    // odd block first
  REQUIRE(v[499] == 6);  // 499 odd values >= 3, then twice the odds
  REQUIRE(v[990] == 512);
  REQUIRE(v[998] == 2);
  REQUIRE(v[999] == 1);
}

TEST_CASE("covering graphs serialize to dot with labeled edges") {
  HSet n = unit_strip("S");
  CoveringEdge a = linear_map_evidence(n, 3.0, 0.5);
  CoveringEdge b = a;
  b.source = "S";
  b.target = "T";
  b.k = 3;
  b.orientation_preserving = false;
  std::string dot = dump_dot({a, b});
  REQUIRE(dot.find("digraph") != std::string::npos);
  REQUIRE(dot.find("\"S\" -> \"S\" [label=\"k=1, +\"]") != std::string::npos);
  REQUIRE(dot.find("\"S\" -> \"T\" [label=\"k=3, -\"]") != std::string::npos);
}
