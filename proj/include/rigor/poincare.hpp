#pragma once

// Rigorous return map to the section {x = 0, y < 0} crossed in the x' > 0
// direction, with enclosures of the crossing time, the image in section
// coordinates (y, z), and optionally the 2x2 derivative of the return map.
//
// Crossing location is a two-phase argument.  While flowing, every step is
// either certified to contain no positive-direction crossing (its tube has
// definite x-sign, or x' has definite sign ruling one out) or recognized as
// part of the crossing bracket: the set's x-enclosure was strictly negative
// at a step start and becomes strictly positive at a later step end.  Inside
// the bracket, binary searches on the step polynomials pin times sigma_a
// (every trajectory still has x < 0) and sigma_b (every trajectory has
// x > 0); transversality of the tube between them makes each trajectory's
// crossing unique there.
//
// The crossing itself is a mean-value time elimination applied to the affine
// set, not to its hull.  With position-at-sigma_a affine in the set
// parameters, P(sigma_a) + K d, and R_i = f_i(Q)/f_x(Q) over the bracket
// tube Q, each crossing coordinate satisfies
//
//   P_i* (d)  in  [P_i - P_x R_i] + [K_i - R_i K_x] d,
//
// so the result is again an affine set over the original parameters d.  The
// whole n-fold return map therefore stays one doubleton, and projecting the
// final set to chart coordinates multiplies matrices before taking a hull,
// which is what cancels the near-linear tilt of the attractor.

#include <optional>
#include <vector>

#include "rigor/integrator.hpp"
#include "rigor/parallel.hpp"

namespace rigor {

struct CrossingNotLocated : IntervalError {
  explicit CrossingNotLocated(const std::string& what) : IntervalError(what) {}
};

struct TransversalityFailure : IntervalError {
  explicit TransversalityFailure(const std::string& what) : IntervalError(what) {}
};

// The section x = 0 restricted to y < 0, coordinates (y, z).
struct SectionSpec {
  static constexpr double min_flight = 0.5;   // departure grace period
  static constexpr double time_budget = 50.0; // give up after this long

  static bool admissible(const IVec2& b) { return b[0].strictly_negative(); }

  static IVec3 embed(const IVec2& b) {
    IVec3 r;
    r[0] = Interval(0.0);
    r[1] = b[0];
    r[2] = b[1];
    return r;
  }

  static IVec2 project(const IVec3& b) {
    IVec2 r;
    r[0] = b[1];
    r[1] = b[2];
    return r;
  }
};

// x' = -y - z must be strictly positive for the section to be transversal
// over b.
inline Interval section_speed(const IVec2& b) { return -b[0] - b[1]; }

inline bool check_transversality(const IVec2& b) {
  return section_speed(b).strictly_positive();
}

// Affine coordinates on the section: C(x) = M x + p with a verified inverse
// of M held alongside.
struct AffineChart {
  IMat2 M = IMat2::identity();
  IVec2 p;
  IMat2 Minv = IMat2::identity();

  static AffineChart make(const IMat2& M, const IVec2& p) {
    AffineChart c;
    c.M = M;
    c.p = p;
    c.Minv = invert2x2(M);
    return c;
  }

  static AffineChart identity() { return AffineChart{}; }

  bool is_identity() const {
    auto one = [](const Interval& v) { return v.lo() == 1.0 && v.hi() == 1.0; };
    auto zero = [](const Interval& v) { return v.lo() == 0.0 && v.hi() == 0.0; };
    return one(M(0, 0)) && zero(M(0, 1)) && zero(M(1, 0)) && one(M(1, 1)) &&
           zero(p[0]) && zero(p[1]);
  }

  IVec2 forward(const IVec2& b) const { return M * b + p; }
  IVec2 inverse(const IVec2& b) const { return Minv * (b - p); }
};

struct CrossingEnclosure {
  Interval time{1.0};
  IVec2 image;
  std::optional<IMat2> derivative;
};

struct GridSpec {
  int n1 = 1;
  int n2 = 1;
};

// One section return of an affine set, in full affine form.
struct SectionCrossing {
  Interval time;           // flight time of this return
  AffineSet<3, 3> set;     // crossing set; its x-hull is exactly {0}
  IVec3 hull;
  std::optional<IMat2> derivative;  // DP over the set, section coordinates
};

// Return-map engine; owns the integrator and its scratch, so one instance
// serves many boxes sequentially.  Use separate instances per thread.
class ReturnMap {
 public:
  ReturnMap(const PolyField<3>& f, const IntegratorSettings& st)
      : integ_(f, st), st_(st) {}

  const IntegratorSettings& settings() const { return st_; }

  // One return of the affine section set S (x-component must be {0}).  A
  // hull of S tighter than its representation's own may be passed along.
  SectionCrossing cross_once(const AffineSet<3, 3>& S, bool with_derivative,
                             const IVec3* tight = nullptr) {
    IVec3 H = S.hull();
    if (tight)
      for (int i = 0; i < 3; ++i)
        if (auto t = intersect(H[i], (*tight)[i])) H[i] = *t;
    if (!H[1].strictly_negative())
      throw IntervalError("section set not admissible: y = " + to_string(H[1]));
    if (!check_transversality(SectionSpec::project(H)))
      throw TransversalityFailure("x' not strictly positive at departure from " +
                                  to_string(SectionSpec::project(H)));
    VariationAccumulator<3> acc;
    Interval t(0.0);
    double h = st_.initial_step;
    bool was_negative = false;
    AffineSet<3, 3> cur = S;
    IVec3 cur_hull = H;
    // Records forming the crossing bracket, with the accumulated variation
    // and elapsed time at each record's start.
    std::vector<StepRecord<3, 3>> bracket;
    std::vector<VariationAccumulator<3>> bracket_acc;
    std::vector<Interval> bracket_t;
    for (;;) {
      if (t.hi() > SectionSpec::time_budget)
        throw CrossingNotLocated("no section return within the time budget");
      auto rec = integ_.step(cur, h, &cur_hull);
      const Interval& xe = rec.end_hull[0];
      bool watching = t.lo() >= SectionSpec::min_flight;
      if (watching && (was_negative || !bracket.empty())) {
        Interval xdot = -rec.tube[1] - rec.tube[2];
        bool tube_signed =
            rec.tube[0].strictly_negative() || rec.tube[0].strictly_positive();
        if (xe.strictly_positive()) {
          // Bracket completes in this record.
          if (!xdot.strictly_positive())
            throw TransversalityFailure("x' not strictly positive on the crossing tube");
          bracket.push_back(rec);
          bracket_acc.push_back(acc);
          bracket_t.push_back(t);
          return refine_crossing(bracket, bracket_acc, bracket_t, with_derivative);
        }
        if (!xe.strictly_negative()) {
          // Sign not yet decided at the step end: the crossing spans into the
          // next record.  x' > 0 over the tube keeps every trajectory's
          // crossing unique once it occurs.
          if (!xdot.strictly_positive())
            throw CrossingNotLocated("undecided x-sign without transversal tube");
          bracket.push_back(rec);
          bracket_acc.push_back(acc);
          bracket_t.push_back(t);
        } else {
          // Step ends strictly negative: certify it contains no
          // positive-direction crossing.  With x' > 0 throughout, a crossed
          // trajectory would have to end positive; with x' < 0 none crosses
          // upward; a sign-definite tube never meets x = 0.  A pending
          // bracket cannot be retracted soundly: a trajectory may already
          // have crossed inside it.
          if (!bracket.empty())
            throw CrossingNotLocated("x-sign fell back during a pending crossing");
          if (!tube_signed && !xdot.strictly_positive() && !xdot.strictly_negative())
            throw CrossingNotLocated("cannot exclude a crossing in an undecided step");
        }
      }
      was_negative = xe.strictly_negative();
      t += Interval(rec.h);
      cur = rec.end;
      cur_hull = rec.end_hull;
      if (with_derivative) acc.apply(rec.J, st_);
      h = integ_.suggest_step(rec);
    }
  }

  // n-fold return of an affine section set; the doubleton structure is kept
  // through every crossing.
  SectionCrossing cross(AffineSet<3, 3> S, int n, bool with_derivative) {
    SectionCrossing out;
    out.time = Interval(0.0);
    IMat2 D = IMat2::identity();
    const IVec3* tight = nullptr;
    IVec3 carried;
    for (int i = 0; i < n; ++i) {
      SectionCrossing one = cross_once(S, with_derivative, tight);
      out.time += one.time;
      S = one.set;
      out.set = std::move(one.set);
      out.hull = one.hull;
      carried = one.hull;
      tight = &carried;
      if (with_derivative) D = *one.derivative * D;
    }
    if (with_derivative) out.derivative = D;
    return out;
  }

  // n-fold return of a plain section box, reported in section coordinates.
  CrossingEnclosure map(const IVec2& b, int n, bool with_derivative) {
    auto S = AffineSet<3, 3>::from_box(SectionSpec::embed(b), st_.representation);
    SectionCrossing sc = cross(std::move(S), n, with_derivative);
    CrossingEnclosure out;
    out.time = sc.time;
    out.image = SectionSpec::project(sc.hull);
    out.derivative = sc.derivative;
    return out;
  }

  // n-fold return of a box given in `in` chart coordinates, reported in
  // `out` chart coordinates; the chart inverse acts on the affine rows, so
  // the tilt of the image cancels in the matrix product rather than
  // inflating the hull.
  CrossingEnclosure map_chart(const AffineChart& in, const AffineChart& out_chart,
                              const IVec2& b2, int n, bool with_derivative) {
    if (in.is_identity() && out_chart.is_identity()) return map(b2, n, with_derivative);
    auto S = AffineSet<3, 3>::from_box(SectionSpec::embed(in.forward(b2)),
                                       st_.representation);
    SectionCrossing sc = cross(std::move(S), n, with_derivative);
    CrossingEnclosure out;
    out.time = sc.time;
    out.image = chart_project(sc.set, sc.hull, out_chart);
    if (with_derivative)
      out.derivative = (out_chart.Minv * *sc.derivative) * in.M;
    return out;
  }

  CrossingEnclosure map_chart(const AffineChart& chart, const IVec2& b2, int n,
                              bool with_derivative) {
    return map_chart(chart, chart, b2, n, with_derivative);
  }

  // Chart coordinates of an affine section set, multiplying the chart
  // inverse into the set's matrices before hulling.  The threaded hull of
  // the crossing encloses the same set, so its chart image intersects in;
  // the meet keeps whichever bound is sharper per component.
  static IVec2 chart_project(const AffineSet<3, 3>& set, const IVec3& hull,
                             const AffineChart& chart) {
    IVec2 base;
    base[0] = Interval(set.xhat[1]);
    base[1] = Interval(set.xhat[2]);
    base = chart.Minv * (base - chart.p);
    IMat<2, 3> MC, MB;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 2; ++i) {
        Interval c(0.0), b(0.0);
        for (int k = 0; k < 2; ++k) {
          c += chart.Minv(i, k) * Interval(set.C(k + 1, j));
          b += chart.Minv(i, k) * Interval(set.B(k + 1, j));
        }
        MC(i, j) = c;
        MB(i, j) = b;
      }
    IVec2 rec = base + MC * set.r0 + MB * set.r;
    IVec2 alt = chart.inverse(SectionSpec::project(hull));
    for (int i = 0; i < 2; ++i) {
      auto meet = intersect(rec[i], alt[i]);
      if (!meet) throw IntervalError("chart projections of one crossing disagree");
      rec[i] = *meet;
    }
    return rec;
  }

 private:
  static constexpr double kTimeTol = 1e-10;
  static constexpr int kMaxBisect = 60;

  SectionCrossing refine_crossing(const std::vector<StepRecord<3, 3>>& recs,
                                  const std::vector<VariationAccumulator<3>>& accs,
                                  const std::vector<Interval>& t0s,
                                  bool with_derivative) {
    const auto& first = recs.front();
    const auto& last = recs.back();
    bool single = recs.size() == 1;

    // sigma_a: latest time in the first record with every trajectory still
    // strictly left of the section; sigma_b: earliest in the last record
    // with every trajectory strictly right.  x' > 0 over the bracket tube
    // makes both predicates monotone in sigma.
    double alo = 0.0, ahi = first.h;
    Interval x00 = first.eval_component(0, Interval(0.0));
    if (!x00.strictly_negative())
      throw CrossingNotLocated("bracket start not strictly negative: x = " +
                               to_string(x00) + " over " +
                               std::to_string(recs.size()) + " records");
    double blo = 0.0, bhi = last.h;
    for (int it = 0; it < kMaxBisect; ++it) {
      double span = single ? bhi - alo : (first.h - alo) + bhi;
      if (span < kTimeTol) break;
      {
        double m = 0.5 * (alo + ahi);
        if (first.eval_component(0, Interval(m)).strictly_negative())
          alo = m;
        else
          ahi = m;
      }
      {
        double m = 0.5 * (blo + bhi);
        if (last.eval_component(0, Interval(m)).strictly_positive())
          bhi = m;
        else
          blo = m;
      }
    }
    double sigma_a = alo, sigma_b = bhi;

    // Bracket tube Q: all trajectory positions between sigma_a and sigma_b.
    IVec3 Q = first.eval(Interval(sigma_a, single ? sigma_b : first.h));
    for (size_t i = 1; i + 1 < recs.size(); ++i) Q = hull(Q, recs[i].tube);
    if (!single) Q = hull(Q, last.eval(Interval(0.0, sigma_b)));
    IVec3 fQ = integ_.field().eval(Q);
    Interval xdotQ = fQ[0];
    if (!xdotQ.strictly_positive())
      throw TransversalityFailure("x' not strictly positive over the crossing bracket");

    // Affine mean-value elimination of the residual flight time.
    Interval sa(sigma_a);
    IVec3 pa = first.point_at(sa);
    IMat3 K = first.jacobian_at(sa);
    if (!first.eval_component(0, sa).strictly_negative())
      throw CrossingNotLocated("bracket start regressed during refinement");
    Interval Ry = fQ[1] / xdotQ;
    Interval Rz = fQ[2] / xdotQ;
    IVec3 c;
    c[0] = Interval(0.0);
    c[1] = pa[1] - pa[0] * Ry;
    c[2] = pa[2] - pa[0] * Rz;
    IMat3 W;
    for (int j = 0; j < 3; ++j) {
      W(0, j) = Interval(0.0);
      W(1, j) = K(1, j) - Ry * K(0, j);
      W(2, j) = K(2, j) - Rz * K(0, j);
    }

    SectionCrossing out;
    out.set = detail::propagate_affine(first.start, c, W, st_, out.hull);
    IVec3 mv = c + W * first.spread;  // spread carries the threaded tight hull
    for (int i = 1; i < 3; ++i) {
      if (auto t = intersect(out.hull[i], mv[i])) out.hull[i] = *t;
      if (auto t = intersect(out.hull[i], Q[i])) out.hull[i] = *t;
    }
    IVec2 q = SectionSpec::project(out.hull);
    if (!SectionSpec::admissible(q))
      throw CrossingNotLocated("crossing lies off the admissible half-plane y < 0");
    if (!check_transversality(q))
      throw TransversalityFailure("x' not strictly positive at the crossing image");
    out.time = t0s.front() + sa - first.eval_component(0, sa) / xdotQ;

    if (with_derivative) {
      // Flow variation over every possible crossing moment.
      IMat3 V = accs.front().value_after(
          first.jacobian_at(Interval(sigma_a, single ? sigma_b : first.h)));
      for (size_t i = 1; i < recs.size(); ++i) {
        double upper = (i + 1 == recs.size()) ? sigma_b : recs[i].h;
        V = hull(V, accs[i].value_after(recs[i].jacobian_at(Interval(0.0, upper))));
      }
      out.derivative = section_projection(V, q);
    }
    return out;
  }

  // Derivative of the return map from the flow variation V at the crossing:
  // the crossing-time correction subtracts f(q) row_x(V)/x'(q), then rows
  // and columns restrict to (y, z).
  IMat2 section_projection(const IMat3& V, const IVec2& q) const {
    Interval xdot = section_speed(q);
    IVec3 fq = integ_.field().eval(SectionSpec::embed(q));
    IMat2 D;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        D(i, j) = V(i + 1, j + 1) - fq[i + 1] * V(0, j + 1) / xdot;
    return D;
  }

  Integrator<3> integ_;
  IntegratorSettings st_;
};

// Image enclosure of the n-th return of b, subdivided by `grid`; sub-box
// results combine by hull in index order.  Per-piece enclosures are exported
// through `pieces` when a sink is given; `subboxes` likewise receives the
// matching inputs.
inline CrossingEnclosure poincare_map(const PolyField<3>& f, const IVec2& b, int n,
                                      const IntegratorSettings& st, GridSpec grid = {},
                                      int jobs = 1,
                                      std::vector<CrossingEnclosure>* pieces = nullptr,
                                      std::vector<IVec2>* subboxes = nullptr,
                                      bool with_derivative = false) {
  auto parts = subdivide<2>(b, {grid.n1, grid.n2});
  std::vector<CrossingEnclosure> results(parts.size());
  parallel_for(jobs, int(parts.size()), [&](int i) {
    ReturnMap rm(f, st);
    results[i] = rm.map(parts[i], n, with_derivative);
  });
  CrossingEnclosure out = results[0];
  for (size_t i = 1; i < results.size(); ++i) {
    out.time = hull(out.time, results[i].time);
    out.image = hull(out.image, results[i].image);
    if (with_derivative) out.derivative = hull(*out.derivative, *results[i].derivative);
  }
  if (pieces) *pieces = std::move(results);
  if (subboxes) *subboxes = std::move(parts);
  return out;
}

// 2x2 enclosure of DP^n over b (no grid; Newton callers subdivide at their
// own level).
inline IMat2 poincare_derivative(const PolyField<3>& f, const IVec2& b, int n,
                                 const IntegratorSettings& st) {
  ReturnMap rm(f, st);
  return *rm.map(b, n, true).derivative;
}

// Return map conjugated by the chart: C^{-1} P^n C, evaluated on a chart
// box.  Subdivision happens in chart coordinates; the interval inverse of M
// is applied last, per piece.
inline CrossingEnclosure chart_poincare(const PolyField<3>& f, const AffineChart& chart,
                                        const IVec2& b2, int n,
                                        const IntegratorSettings& st, GridSpec grid = {},
                                        int jobs = 1,
                                        std::vector<CrossingEnclosure>* pieces = nullptr,
                                        std::vector<IVec2>* subboxes = nullptr,
                                        bool with_derivative = false) {
  auto parts = subdivide<2>(b2, {grid.n1, grid.n2});
  std::vector<CrossingEnclosure> results(parts.size());
  parallel_for(jobs, int(parts.size()), [&](int i) {
    ReturnMap rm(f, st);
    results[i] = rm.map_chart(chart, parts[i], n, with_derivative);
  });
  CrossingEnclosure out = results[0];
  for (size_t i = 1; i < results.size(); ++i) {
    out.time = hull(out.time, results[i].time);
    out.image = hull(out.image, results[i].image);
    if (with_derivative) out.derivative = hull(*out.derivative, *results[i].derivative);
  }
  if (pieces) *pieces = std::move(results);
  if (subboxes) *subboxes = std::move(parts);
  return out;
}

}  // namespace rigor
