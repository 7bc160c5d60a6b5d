#pragma once

// Interval Newton certification for fixed points of iterated planar maps,
// plus the region-level operators built on it: strict forward invariance of
// an h-set, the scan for cells a given iterate cannot move off themselves,
// and the exclusion argument that combines both with two uniqueness
// certificates to rule out orbits of a given fundamental period.
//
// Everything here runs through the PlaneMap interface so the same operators
// apply to the section return map and to synthetic linear controls used as
// negative tests.  Implementations must be callable concurrently through a
// const reference.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rigor/covering.hpp"
#include "rigor/parallel.hpp"
#include "rigor/poincare.hpp"

namespace rigor {

struct RefinementStalled : IntervalError {
  explicit RefinementStalled(const std::string& what) : IntervalError(what) {}
};

// A planar map and its k-fold iterate, with rigorous box enclosures of the
// image and the derivative.  image(b, k) over a degenerate box is the tight
// evaluation at a point.
class PlaneMap {
 public:
  virtual ~PlaneMap() = default;
  virtual IVec2 image(const IVec2& b, int k) const = 0;
  virtual std::pair<IVec2, IMat2> image_with_derivative(const IVec2& b, int k) const = 0;
};

// Section return map, optionally conjugated by an affine chart so that the
// operators above it work in chart coordinates.  Each call builds its own
// integration state, so one instance serves all worker threads.
class SectionPoincareMap final : public PlaneMap {
 public:
  SectionPoincareMap(const PolyField<3>& field, const IntegratorSettings& st)
      : field_(&field), st_(st) {}
  SectionPoincareMap(const PolyField<3>& field, const IntegratorSettings& st,
                     const AffineChart& chart)
      : field_(&field), st_(st), chart_(chart) {}

  IVec2 image(const IVec2& b, int k) const override {
    ReturnMap rm(*field_, st_);
    if (chart_) return rm.map_chart(*chart_, b, k, false).image;
    return rm.map(b, k, false).image;
  }

  std::pair<IVec2, IMat2> image_with_derivative(const IVec2& b, int k) const override {
    ReturnMap rm(*field_, st_);
    CrossingEnclosure ce = chart_ ? rm.map_chart(*chart_, b, k, true) : rm.map(b, k, true);
    return {ce.image, *ce.derivative};
  }

  const std::optional<AffineChart>& chart() const { return chart_; }

 private:
  const PolyField<3>* field_;
  IntegratorSettings st_;
  std::optional<AffineChart> chart_;
};

// x |-> A x + c, iterated exactly.  Control map for the operator tests.
class AffineMap2 final : public PlaneMap {
 public:
  AffineMap2(const IMat2& A, const IVec2& c) : A_(A), c_(c) {}

  IVec2 image(const IVec2& b, int k) const override {
    IVec2 x = b;
    for (int i = 0; i < k; ++i) x = A_ * x + c_;
    return x;
  }

  std::pair<IVec2, IMat2> image_with_derivative(const IVec2& b, int k) const override {
    IMat2 D = IMat2::identity();
    for (int i = 0; i < k; ++i) D = A_ * D;
    return {image(b, k), D};
  }

 private:
  IMat2 A_;
  IVec2 c_;
};

enum class NewtonVerdict { UniqueFixedPoint, Inconclusive, NoFixedPoint };

inline const char* to_string(NewtonVerdict v) {
  switch (v) {
    case NewtonVerdict::UniqueFixedPoint: return "unique-fixed-point";
    case NewtonVerdict::Inconclusive: return "inconclusive";
    case NewtonVerdict::NoFixedPoint: return "no-fixed-point";
  }
  return "?";
}

// One application of the operator N = x0 - [DF(X)]^{-1} F(x0) with
// F(x) = P^k(x) - x.  N strictly inside X certifies a unique fixed point of
// P^k in X (it lies in refined = N meet X); N disjoint from X certifies
// there is none.  Anything else, including a derivative enclosure whose
// determinant straddles zero or an image enclosure failure, is Inconclusive
// and claims nothing.
struct NewtonResult {
  IVec2 x0;
  IVec2 X;
  int n = 1;
  std::optional<IVec2> N;
  NewtonVerdict verdict = NewtonVerdict::Inconclusive;
  IVec2 refined;
  std::string note;
};

namespace detail {

inline NewtonResult newton_core(const IVec2& x0, const IVec2& X, int n,
                                const IVec2& Pnx0, const IMat2& D) {
  NewtonResult out;
  out.x0 = x0;
  out.X = X;
  out.n = n;
  out.refined = X;

  IMat2 A = D - IMat2::identity();
  Interval det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  if (det.contains(0.0)) {
    out.note = "derivative enclosure of P^n - id is singular, det = " + to_string(det);
    return out;
  }
  IVec2 rhs = Pnx0 - x0;
  IVec2 u;
  u[0] = (A(1, 1) * rhs[0] - A(0, 1) * rhs[1]) / det;
  u[1] = (A(0, 0) * rhs[1] - A(1, 0) * rhs[0]) / det;
  IVec2 N = x0 - u;
  out.N = N;

  if (X.contains_in_interior(N)) {
    out.verdict = NewtonVerdict::UniqueFixedPoint;
    out.refined = *intersect(N, X);
  } else if (auto cap = intersect(N, X)) {
    out.refined = *cap;
    out.note = "operator output meets the boundary of the search box";
  } else {
    out.verdict = NewtonVerdict::NoFixedPoint;
    out.note = "operator output is disjoint from the search box";
  }
  return out;
}

inline IVec2 point_box(const DVec<2>& x) {
  IVec2 b;
  b[0] = Interval(x[0]);
  b[1] = Interval(x[1]);
  return b;
}

}  // namespace detail

inline NewtonResult interval_newton(const IVec2& x0, const IVec2& X, int n,
                                    const PlaneMap& map) {
  if (!X.contains(x0)) throw IntervalError("interval_newton: x0 outside the search box");
  try {
    IVec2 Pnx0 = map.image(x0, n);
    IMat2 D = map.image_with_derivative(X, n).second;
    return detail::newton_core(x0, X, n, Pnx0, D);
  } catch (const IntervalError& e) {
    NewtonResult out;
    out.x0 = x0;
    out.X = X;
    out.n = n;
    out.refined = X;
    out.note = std::string("enclosure failed: ") + e.what();
    return out;
  }
}

// Derivative enclosure hulled over a subdivision of X instead of one
// evaluation, centered at the midpoint of X.  The hull over the grid still
// encloses DF at every point of X, so the certificate logic is unchanged;
// the grid only fights the wrapping of one wide evaluation.
inline NewtonResult newton_divided(const IVec2& X, int n, GridSpec subdivision,
                                   const PlaneMap& map, int jobs = 1) {
  IVec2 x0 = detail::point_box(X.mid());
  auto parts = subdivide<2>(X, {std::max(1, subdivision.n1), std::max(1, subdivision.n2)});
  std::vector<IMat2> ds(parts.size());
  std::vector<std::string> errs(parts.size());
  parallel_for(jobs, int(parts.size()), [&](int i) {
    try {
      ds[i] = map.image_with_derivative(parts[i], n).second;
    } catch (const IntervalError& e) {
      errs[i] = e.what();
    }
  });
  for (size_t i = 0; i < parts.size(); ++i) {
    if (!errs[i].empty()) {
      NewtonResult out;
      out.x0 = x0;
      out.X = X;
      out.n = n;
      out.refined = X;
      out.note = "derivative enclosure failed on a grid cell: " + errs[i];
      return out;
    }
  }
  IMat2 D = ds[0];
  for (size_t i = 1; i < ds.size(); ++i) D = hull(D, ds[i]);
  try {
    IVec2 Pnx0 = map.image(x0, n);
    return detail::newton_core(x0, X, n, Pnx0, D);
  } catch (const IntervalError& e) {
    NewtonResult out;
    out.x0 = x0;
    out.X = X;
    out.n = n;
    out.refined = X;
    out.note = std::string("enclosure failed: ") + e.what();
    return out;
  }
}

// A certified fixed point of P^n together with the boxes of its whole orbit,
// obtained by pushing the refined enclosure through P rigorously n-1 times.
struct StationaryOrbit {
  NewtonResult certificate;
  std::vector<IVec2> orbit;
  int rounds = 0;
};

// Polish an approximate fixed point into a certificate: run the Newton
// operator on a shrinking box around the current iterate, re-centering on
// the refined enclosure after every success, until the width stops
// improving.  Rounds that fail before any success shrink the trial radius;
// the seed is trusted, the radius is not.
inline StationaryOrbit any_stationary_point(const DVec<2>& seed, int n, const PlaneMap& map,
                                            double r0 = 1e-7) {
  DVec<2> x = seed;
  double r = r0;
  std::optional<NewtonResult> best;
  double best_width = std::numeric_limits<double>::infinity();
  int rounds = 0;

  for (int round = 0; round < 20; ++round) {
    ++rounds;
    IVec2 X;
    X[0] = Interval(x[0] - r, x[0] + r);
    X[1] = Interval(x[1] - r, x[1] + r);
    NewtonResult res = interval_newton(detail::point_box(x), X, n, map);
    if (res.verdict == NewtonVerdict::UniqueFixedPoint) {
      double w = res.refined.max_width();
      bool improved = w < 0.9 * best_width;
      if (!best || w < best_width) {
        best = res;
        best_width = w;
      }
      if (!improved && round > 0) break;
      x = res.refined.mid();
      r = std::max(10.0 * w, 1e-14);
    } else {
      if (best) break;
      if (res.N) x = res.N->mid();
      r *= 0.25;
    }
  }
  if (!best) {
    throw RefinementStalled("no unique-fixed-point certificate after 20 rounds from seed " +
                            to_string(detail::point_box(seed)));
  }

  StationaryOrbit out;
  out.certificate = *best;
  out.rounds = rounds;
  out.orbit.push_back(best->refined);
  for (int i = 1; i < n; ++i) out.orbit.push_back(map.image(out.orbit.back(), 1));
  return out;
}

// A grid cell the invariance or exclusion scan could not handle: either its
// image enclosure violated the required condition or it failed to integrate
// at all (empty image, note says why).
struct CellIssue {
  IVec2 cell;
  std::optional<IVec2> image;
  std::string note;
};

// Strict forward invariance of an h-set body under the iterate: every grid
// cell must map into the interior.  Counts are exact; the offending list is
// capped.  margin is the smallest distance from any verified cell image to
// the boundary, a plain-double diagnostic (the verdict itself uses only
// endpoint comparisons).
struct InvarianceReport {
  HSet region;
  GridSpec grid;
  int iterate = 1;
  long cells = 0;
  long ok = 0;
  long offending_count = 0;
  std::vector<CellIssue> offending;
  IVec2 image_hull;
  double margin = std::numeric_limits<double>::infinity();
  bool invariant = false;
};

inline InvarianceReport inside(const HSet& A, GridSpec grid, const PlaneMap& map,
                               int iterate = 1, int jobs = 1) {
  InvarianceReport rep;
  rep.region = A;
  rep.grid = grid;
  rep.iterate = iterate;
  IVec2 body = A.body();
  auto cells = subdivide<2>(body, {std::max(1, grid.n1), std::max(1, grid.n2)});
  rep.cells = long(cells.size());

  std::vector<std::optional<IVec2>> images(cells.size());
  std::vector<std::string> errs(cells.size());
  parallel_for(jobs, int(cells.size()), [&](int i) {
    try {
      images[i] = map.image(cells[i], iterate);
    } catch (const IntervalError& e) {
      errs[i] = e.what();
    }
  });

  bool first = true;
  for (size_t i = 0; i < cells.size(); ++i) {
    bool good = images[i] && body.contains_in_interior(*images[i]);
    if (good) {
      ++rep.ok;
      const IVec2& im = *images[i];
      rep.image_hull = first ? im : hull(rep.image_hull, im);
      first = false;
      double m = std::min(std::min(im[0].lo() - body[0].lo(), body[0].hi() - im[0].hi()),
                          std::min(im[1].lo() - body[1].lo(), body[1].hi() - im[1].hi()));
      rep.margin = std::min(rep.margin, m);
    } else {
      ++rep.offending_count;
      if (rep.offending.size() < 100) {
        rep.offending.push_back({cells[i], images[i],
                                 errs[i].empty() ? "image not strictly inside" : errs[i]});
      }
    }
  }
  rep.invariant = rep.offending_count == 0;
  return rep;
}

// Which part of the h-set could contain a fixed point of P^n: a grid cell
// survives the scan iff its P^n-image enclosure intersects it (or fails to
// integrate, which proves nothing and must be kept).  S is the interval hull
// of the survivors, reported both in chart coordinates and pushed forward to
// section coordinates.  Every fixed point of P^n in the body lies in some
// surviving cell, hence in S.
//
// An optional second pass re-tests each survivor subdivided refine x finer.
// The surviving sub-cells together with the first pass's excluded cells
// still partition the body, so the hull argument is unchanged; the point is
// that enclosure slack scales with cell width, and near the fixed point it
// is the slack, not the dynamics, that keeps whole cells alive.
struct ExclusionScan {
  HSet region;
  int n = 1;
  GridSpec grid;
  GridSpec refine{1, 1};
  long cells = 0;
  long retained = 0;        // first pass
  long refined_cells = 0;   // second pass, 0 when refine is trivial
  long refined_retained = 0;
  long errors = 0;          // both passes
  IVec2 S_chart;
  IVec2 S_section;
  std::vector<IVec2> retained_boxes;  // final survivors, chart coordinates, capped at 100

  long final_retained() const { return refined_cells > 0 ? refined_retained : retained; }
};

namespace detail {

// 0 excluded, 1 retained, 2 enclosure failure (also retained).
inline std::vector<int> scan_cells(const std::vector<IVec2>& cells, int n,
                                   const PlaneMap& map, int jobs) {
  std::vector<int> verdicts(cells.size());
  parallel_for(jobs, int(cells.size()), [&](int i) {
    try {
      IVec2 im = map.image(cells[i], n);
      verdicts[i] = disjoint(im, cells[i]) ? 0 : 1;
    } catch (const IntervalError&) {
      verdicts[i] = 2;
    }
  });
  return verdicts;
}

}  // namespace detail

inline ExclusionScan what_is_not_mapped_outside(const HSet& A, int n, GridSpec grid,
                                                const PlaneMap& map, int jobs = 1,
                                                GridSpec refine = {1, 1}) {
  ExclusionScan scan;
  scan.region = A;
  scan.n = n;
  scan.grid = grid;
  scan.refine = refine;
  auto cells = subdivide<2>(A.body(), {std::max(1, grid.n1), std::max(1, grid.n2)});
  scan.cells = long(cells.size());

  std::vector<int> verdicts = detail::scan_cells(cells, n, map, jobs);
  std::vector<IVec2> survivors;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (verdicts[i] == 0) continue;
    ++scan.retained;
    if (verdicts[i] == 2) ++scan.errors;
    survivors.push_back(cells[i]);
  }

  if (refine.n1 * refine.n2 > 1 && !survivors.empty()) {
    std::vector<IVec2> fine;
    for (const IVec2& c : survivors) {
      auto sub = subdivide<2>(c, {std::max(1, refine.n1), std::max(1, refine.n2)});
      fine.insert(fine.end(), sub.begin(), sub.end());
    }
    scan.refined_cells = long(fine.size());
    verdicts = detail::scan_cells(fine, n, map, jobs);
    survivors.clear();
    for (size_t i = 0; i < fine.size(); ++i) {
      if (verdicts[i] == 0) continue;
      ++scan.refined_retained;
      if (verdicts[i] == 2) ++scan.errors;
      survivors.push_back(fine[i]);
    }
  }

  bool first = true;
  for (const IVec2& c : survivors) {
    IVec2 fwd = A.chart.forward(c);
    scan.S_chart = first ? c : hull(scan.S_chart, c);
    scan.S_section = first ? fwd : hull(scan.S_section, fwd);
    first = false;
    if (scan.retained_boxes.size() < 100) scan.retained_boxes.push_back(c);
  }
  return scan;
}

enum class ExclusionVerdict { Excluded, Unproven };

// No orbit of fundamental period n inside the h-set.  The argument:
//   1. the body maps strictly into itself, so its orbits stay in it;
//   2. every fixed point of P^n in the body lies in S (the scan);
//   3. P^n has exactly one fixed point q in S, and P has exactly one fixed
//      point p in S; p is itself a fixed point of P^n, so p = q.
// A point of fundamental period n in the body would be a fixed point of P^n,
// hence equal to q = p, which has period 1.  For n >= 2 that is a
// contradiction, with no need to enumerate divisors of n.  Any stage that
// fails leaves the verdict Unproven and names itself; nothing is claimed.
struct ExclusionReport {
  HSet region;
  int n = 1;
  InvarianceReport invariance;
  ExclusionScan scan;
  std::optional<NewtonResult> unique_pn;
  std::optional<NewtonResult> unique_p;
  ExclusionVerdict verdict = ExclusionVerdict::Unproven;
  std::string failing_stage;  // empty iff Excluded
};

struct ExclusionSettings {
  GridSpec invariance_grid{200, 4};
  GridSpec scan_grid{500, 10};
  GridSpec scan_refine{4, 2};
  GridSpec newton_grid{8, 2};
};

inline ExclusionReport no_period_n(const HSet& A, int n, const PlaneMap& map,
                                   const ExclusionSettings& cfg = {}, int jobs = 1) {
  if (n < 2) throw std::invalid_argument("no_period_n: the argument needs n >= 2");
  ExclusionReport rep;
  rep.region = A;
  rep.n = n;

  rep.invariance = inside(A, cfg.invariance_grid, map, 1, jobs);
  if (!rep.invariance.invariant) {
    rep.failing_stage = "invariance";
    return rep;
  }

  rep.scan = what_is_not_mapped_outside(A, n, cfg.scan_grid, map, jobs, cfg.scan_refine);
  if (rep.scan.final_retained() == 0) {
    // No cell can hold a fixed point of P^n at all.
    rep.verdict = ExclusionVerdict::Excluded;
    return rep;
  }

  rep.unique_pn = newton_divided(rep.scan.S_chart, n, cfg.newton_grid, map, jobs);
  if (rep.unique_pn->verdict != NewtonVerdict::UniqueFixedPoint) {
    rep.failing_stage = "uniqueness-for-iterate";
    return rep;
  }
  rep.unique_p = newton_divided(rep.scan.S_chart, 1, cfg.newton_grid, map, jobs);
  if (rep.unique_p->verdict != NewtonVerdict::UniqueFixedPoint) {
    rep.failing_stage = "uniqueness-for-base";
    return rep;
  }

  rep.verdict = ExclusionVerdict::Excluded;
  return rep;
}

}  // namespace rigor
