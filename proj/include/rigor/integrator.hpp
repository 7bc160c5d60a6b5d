#pragma once

// Validated Taylor integrator for polynomial fields.
//
// Each accepted step certifies
//   Phi_sigma(p) in  P(sigma) + c_{k+1}(Z) sigma^{k+1}
//                  + [ V(sigma) + V_{k+1}(Z,W) sigma^{k+1} ] (p - xhat)
// for every p in the current set and sigma in [0, h]: P is the Taylor
// polynomial of the flow at the set's reference point xhat, Z a Picard-type
// a-priori enclosure of the whole tube over [0, h], V the Taylor polynomial
// of the first variation over the set's hull, and W a logarithmic-norm bound
// for the variation over Z.  The Lagrange coefficients c_{k+1}, V_{k+1} are
// the order-(k+1) series coefficients seeded with (Z, W).
//
// Sets are carried in the affine form  xhat + C r0 + B r  (point matrices C
// and B with a rigorous enclosure of B^{-1}); propagating through the step
// Jacobian in that form is what keeps long integrations from wrapping.

#include <string>
#include <vector>

#include "rigor/polyfield.hpp"

namespace rigor {

struct NoEnclosure : IntervalError {
  explicit NoEnclosure(const std::string& what) : IntervalError(what) {}
};

enum class Representation { IntervalHull, Parallelepiped, Doubleton };

inline const char* to_string(Representation r) {
  switch (r) {
    case Representation::IntervalHull: return "interval-hull";
    case Representation::Parallelepiped: return "parallelepiped";
    case Representation::Doubleton: return "doubleton";
  }
  return "?";
}

inline Representation representation_from_string(const std::string& s) {
  if (s == "interval-hull") return Representation::IntervalHull;
  if (s == "parallelepiped") return Representation::Parallelepiped;
  if (s == "doubleton") return Representation::Doubleton;
  throw std::invalid_argument("unknown representation: " + s);
}

struct IntegratorSettings {
  int order = 20;
  double initial_step = 0.05;
  double min_step = 1e-6;
  double max_step = 0.5;
  double inflation = 1.1;        // a-priori enclosure radius inflation per attempt
  int max_picard = 15;
  double tolerance = 1e-15;      // target step remainder magnitude
  double growth_limit = 1.5;     // endpoint width growth triggering step rejection
  double qr_condition_threshold = 1e4;
  Representation representation = Representation::Doubleton;

  std::string describe() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "taylor order=%d rounding=eft-directed representation=%s "
                  "step=[%g,%g] tol=%g growth-limit=%g qr-threshold=%g",
                  order, rigor::to_string(representation), min_step, max_step,
                  tolerance, growth_limit, qr_condition_threshold);
    return buf;
  }
};

// X = xhat + C r0 + B r.  r0 is the fixed initial deviation (dimension M), r
// collects accumulated local errors; C and B are point matrices, with a
// rigorous interval enclosure of B^{-1} alongside.
template <int N, int M>
struct AffineSet {
  DVec<N> xhat{};
  DMat<N, M> C;
  IVec<M> r0;
  DMat<N, N> B = DMat<N, N>::identity();
  IMat<N, N> invB = IMat<N, N>::identity();
  IVec<N> r;

  IVec<N> hull() const {
    return to_ivec(xhat) + to_imat(C) * r0 + to_imat(B) * r;
  }

  static AffineSet from_box(const IVec<N>& box, Representation rep) {
    static_assert(N == M, "box seeding needs a square deviation part");
    AffineSet s;
    s.xhat = box.mid();
    IVec<N> dev = box - to_ivec(s.xhat);
    if (rep == Representation::Doubleton) {
      s.C = DMat<N, M>::identity();
      s.r0 = dev;
    } else {
      // interval hull and parallelepiped carry the deviation in the B part
      s.r = dev;
    }
    return s;
  }

  static AffineSet from_affine(const DVec<N>& center, const DMat<N, M>& C0,
                               const IVec<M>& r0, const IVec<N>& err) {
    AffineSet s;
    s.xhat = center;
    s.C = C0;
    s.r0 = r0;
    s.r = err;
    return s;
  }
};

// Picard-type a-priori enclosure: returns Z satisfying
//   X + [0,h] f(Z)  subset of  Z,
// so every solution from X stays in Z on [0, h].  Candidates are inflated
// until the containment verifies; failure after max_picard attempts throws.
template <int N>
IVec<N> a_priori_enclosure(const PolyField<N>& f, const IVec<N>& X, double h,
                           const IntegratorSettings& st) {
  // Inflation can drive the candidate out of the finite range when h is far
  // too large; that overflow is the same verdict as an exhausted budget.
  try {
    Interval ih(0.0, h);
    IVec<N> Z = X + ih * f.eval(X);
    for (int it = 0; it < st.max_picard; ++it) {
      IVec<N> Zi;
      for (int i = 0; i < N; ++i) {
        double c = Z[i].mid();
        double rad = Z[i].rad() * st.inflation + 1e-13 * std::max(1.0, std::fabs(c));
        Zi[i] = Interval(c - rad, c + rad);
      }
      IVec<N> W = X + ih * f.eval(Zi);
      if (Zi.contains(W)) {
        // Tightening passes preserve the property: W' = X + [0,h] f(W) is a
        // subset of W, hence X + [0,h] f(W') is a subset of W'.
        W = X + ih * f.eval(W);
        W = X + ih * f.eval(W);
        return W;
      }
      Z = hull(Z, W);
    }
  } catch (const NoEnclosure&) {
    throw;
  } catch (const IntervalError&) {
  }
  throw NoEnclosure("no a-priori enclosure for step " + std::to_string(h));
}

namespace detail {

// sup over the enclosure of the infinity-logarithmic norm
// mu(A) = max_i ( a_ii + sum_{j != i} |a_ij| ).
template <int N>
double lognorm_sup(const IMat<N, N>& A) {
  double mu = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    double s = A(i, i).hi();
    for (int j = 0; j < N; ++j)
      if (j != i) s = add_up(s, A(i, j).mag());
    mu = std::max(mu, s);
  }
  return mu;
}

template <int N>
IVec<N> horner(const std::vector<IVec<N>>& c, int upto, const Interval& s) {
  IVec<N> p = c[upto];
  for (int i = upto - 1; i >= 0; --i) p = s * p + c[i];
  return p;
}

template <int N>
IMat<N, N> horner_mat(const std::vector<IMat<N, N>>& c, int upto, const Interval& s) {
  IMat<N, N> p = c[upto];
  for (int i = upto - 1; i >= 0; --i) {
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) p(a, b) = p(a, b) * s + c[i](a, b);
  }
  return p;
}

}  // namespace detail

// One accepted integration step, keeping enough to evaluate the solution set
// and its variation at any intermediate time in [0, h].
template <int N, int M>
struct StepRecord {
  double h = 0;
  int order = 0;
  AffineSet<N, M> start;
  IVec<N> spread;                // enclosure of (start set) - xhat
  IVec<N> tube;                  // a-priori enclosure over [0,h]
  std::vector<IVec<N>> psol;     // solution series at xhat, orders 0..k
  IVec<N> crem;                  // order-(k+1) solution coefficient over tube
  std::vector<IMat<N, N>> vser;  // variation series over the start hull, V0 = I
  IMat<N, N> vrem;               // order-(k+1) variation coefficient over (tube, W)
  IMat<N, N> J;                  // variation at sigma = h (one-step Jacobian)
  AffineSet<N, M> end;
  IVec<N> end_hull;

  // Enclosure of the reference-point trajectory at sigma in [0, h].
  IVec<N> point_at(const Interval& sigma) const {
    return detail::horner(psol, order, sigma) + pow(sigma, unsigned(order + 1)) * crem;
  }

  IMat<N, N> jacobian_at(const Interval& sigma) const {
    IMat<N, N> V = detail::horner_mat(vser, order, sigma);
    Interval sp = pow(sigma, unsigned(order + 1));
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) V(i, j) += sp * vrem(i, j);
    return V;
  }

  // Mean-value enclosure of the whole set at sigma.
  IVec<N> eval(const Interval& sigma) const {
    return point_at(sigma) + jacobian_at(sigma) * spread;
  }

  // Single-component enclosure at sigma; cheap enough for bisection loops.
  Interval eval_component(int i, const Interval& sigma) const {
    Interval p = psol[order][i];
    for (int k = order - 1; k >= 0; --k) p = p * sigma + psol[k][i];
    Interval sp = pow(sigma, unsigned(order + 1));
    p += sp * crem[i];
    for (int j = 0; j < N; ++j) {
      Interval v = vser[order](i, j);
      for (int k = order - 1; k >= 0; --k) v = v * sigma + vser[k](i, j);
      v += sp * vrem(i, j);
      p += v * spread[j];
    }
    return p;
  }
};

namespace detail {

// Lohner reorganization: push an affine set through value enclosure `ppoint`
// (image of xhat) and Jacobian enclosure `J`, returning the new set and the
// plain interval hull of the image.
template <int N, int M>
AffineSet<N, M> propagate_affine(const AffineSet<N, M>& S, const IVec<N>& ppoint,
                                 const IMat<N, N>& J, const IntegratorSettings& st,
                                 IVec<N>& hull_out) {
  IMat<N, M> JC = J * to_imat(S.C);
  IMat<N, N> JB = J * to_imat(S.B);
  hull_out = ppoint + JC * S.r0 + JB * S.r;
  if (st.representation == Representation::IntervalHull) {
    AffineSet<N, M> out;
    out.xhat = hull_out.mid();
    out.r = hull_out - to_ivec(out.xhat);
    return out;
  }

  AffineSet<N, M> out;
  out.xhat = ppoint.mid();
  IVec<N> delta = ppoint - to_ivec(out.xhat);
  out.C = JC.mid();
  IMat<N, M> Cres = JC - to_imat(out.C);
  out.r0 = S.r0;

  DMat<N, N> Bc = JB.mid();
  if (condition_estimate(Bc) > st.qr_condition_threshold)
    Bc = orthonormalize(Bc);
  IMat<N, N> invB;
  try {
    invB = gauss_inverse(to_imat(Bc));
  } catch (const SingularEnclosure&) {
    Bc = DMat<N, N>::identity();
    invB = IMat<N, N>::identity();
  }
  out.B = Bc;
  out.invB = invB;
  out.r = (invB * JB) * S.r + invB * (Cres * S.r0) + invB * delta;
  return out;
}

}  // namespace detail

template <int N>
struct FlowEnclosure {
  Interval time;
  IVec<N> endpoint;
  IVec<N> tube;          // hull of all step tubes over [0, T]
  IMat<N, N> variation;  // DPhi_T over the initial set (identity if not requested)
  int steps = 0;
};

// Accumulated variation kept in the factored form  ivl(B) * W  with B a point
// matrix re-orthonormalized on demand; avoids wrapping in long products.
template <int N>
struct VariationAccumulator {
  DMat<N, N> B = DMat<N, N>::identity();
  IMat<N, N> W = IMat<N, N>::identity();

  void apply(const IMat<N, N>& J, const IntegratorSettings& st) {
    IMat<N, N> P = J * to_imat(B);
    DMat<N, N> Bc = P.mid();
    if (condition_estimate(Bc) > st.qr_condition_threshold) Bc = orthonormalize(Bc);
    IMat<N, N> invB;
    try {
      invB = gauss_inverse(to_imat(Bc));
    } catch (const SingularEnclosure&) {
      Bc = DMat<N, N>::identity();
      invB = IMat<N, N>::identity();
    }
    B = Bc;
    W = (invB * P) * W;
  }

  IMat<N, N> value() const { return to_imat(B) * W; }

  // Variation at an intermediate time of the next step: J(sigma) composed
  // with the accumulated factors.
  IMat<N, N> value_after(const IMat<N, N>& J) const { return (J * to_imat(B)) * W; }
};

template <int N>
class Integrator {
 public:
  Integrator(const PolyField<N>& f, const IntegratorSettings& st)
      : f_(&f), eng_(f), st_(st) {}

  const IntegratorSettings& settings() const { return st_; }
  const PolyField<N>& field() const { return *f_; }

  // One validated step of size at most h_try; halves internally while the
  // a-priori enclosure fails or the endpoint width grows past the limit,
  // down to min_step.  A caller who knows a tighter hull of S than its own
  // representation yields (the previous step's image hull, say) passes it as
  // `tight_start`; Lohner reorganization slack then never re-enters the
  // evaluation.
  template <int M>
  StepRecord<N, M> step(const AffineSet<N, M>& S, double h_try,
                        const IVec<N>* tight_start = nullptr) {
    const int k = st_.order;
    StepRecord<N, M> rec;
    rec.order = k;
    rec.start = S;
    rec.spread = to_imat(S.C) * S.r0 + to_imat(S.B) * S.r;
    if (tight_start) {
      for (int i = 0; i < N; ++i) {
        auto t = intersect(rec.spread[i], (*tight_start)[i] - Interval(S.xhat[i]));
        if (!t) throw IntervalError("step: tight_start misses the set");
        rec.spread[i] = *t;
      }
    }
    IVec<N> X = to_ivec(S.xhat) + rec.spread;
    double start_width = X.max_width();

    // The series below do not depend on the step size.
    eng_.solution_series(to_ivec(S.xhat), k, rec.psol);
    if (start_width == 0) {
      eng_.variation_series(rec.psol, IMat<N, N>::identity(), k, rec.vser);
    } else {
      eng_.solution_series(X, k, hsol_);
      eng_.variation_series(hsol_, IMat<N, N>::identity(), k, rec.vser);
    }

    double h = std::min(std::max(h_try, st_.min_step), st_.max_step);
    double growth_floor = 1e3 * st_.tolerance;
    for (;;) {
      IVec<N> Z;
      try {
        Z = a_priori_enclosure(*f_, X, h, st_);
      } catch (const NoEnclosure&) {
        if (h <= st_.min_step * 1.0000001) throw;
        h = std::max(h * 0.5, st_.min_step);
        continue;
      }

      rec.h = h;
      rec.tube = Z;
      eng_.solution_series(Z, k + 1, zsol_);
      rec.crem = zsol_[k + 1];

      // Logarithmic-norm bound for the variation over the tube,
      // ||V(t)||_inf <= e^{mu+ t} =: m on [0,h], seeds a scalar coefficient
      // bound; the sigma^{k+1} factor makes a norm box fully adequate here.
      double mu = detail::lognorm_sup(f_->jacobian(Z));
      double m = exp_upper(detail::mul_up(h, std::max(mu, 0.0)));
      double nu = eng_.variation_norm_bound(zsol_, m, k + 1);
      {
        Interval nubox(-nu, nu);
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) rec.vrem(i, j) = nubox;
      }

      Interval hh(h);
      rec.J = rec.jacobian_at(hh);
      IVec<N> ppoint = rec.point_at(hh);
      rec.end = detail::propagate_affine(S, ppoint, rec.J, st_, rec.end_hull);

      if (start_width > 0 &&
          rec.end_hull.max_width() > st_.growth_limit * start_width + growth_floor &&
          h > st_.min_step * 1.0000001) {
        h = std::max(h * 0.5, st_.min_step);
        continue;
      }
      return rec;
    }
  }

  // Remainder-driven proposal for the next step size.
  template <int M>
  double suggest_step(const StepRecord<N, M>& rec) const {
    double cmag = 0;
    for (int i = 0; i < N; ++i) cmag = std::max(cmag, rec.crem[i].mag());
    double h;
    if (cmag > 0) {
      double opt = 0.9 * std::pow(st_.tolerance / cmag, 1.0 / (st_.order + 1));
      h = opt;
    } else {
      h = rec.h * 2;
    }
    h = std::min(std::max(h, 0.5 * rec.h), 2.0 * rec.h);
    return std::min(std::max(h, st_.min_step), st_.max_step);
  }

  // Flow over the time enclosure T >= 0; the endpoint enclosure covers
  // Phi_t(X0) for every t in T, hulled across step boundaries if T spans
  // them.
  template <int M>
  FlowEnclosure<N> flow(AffineSet<N, M> S, const Interval& T, bool with_variation) {
    FlowEnclosure<N> out;
    out.time = T;
    out.variation = IMat<N, N>::identity();
    if (T.lo() < 0) throw IntervalError("flow: negative time");
    if (T.hi() == 0) {
      out.endpoint = S.hull();
      out.tube = out.endpoint;
      return out;
    }
    VariationAccumulator<N> acc;
    Interval t(0.0);
    double h = st_.initial_step;
    bool have_tube = false, have_end = false;
    IVec<N> cur_hull = S.hull();
    for (;;) {
      Interval sig = T - t;
      double slo = std::max(sig.lo(), 0.0);
      double shi = sig.hi();
      if (shi <= 0) break;
      double to_target = T.lo() - t.hi();
      double want = to_target > h * 1.5 ? std::min(h, to_target)
                                        : std::max(shi, st_.min_step);
      auto rec = step(S, want, &cur_hull);
      out.tube = have_tube ? hull(out.tube, rec.tube) : rec.tube;
      have_tube = true;
      ++out.steps;
      if (rec.h >= slo) {
        // Part of the target time range falls inside this record.
        Interval srange(slo, std::min(rec.h, shi));
        IVec<N> part = rec.eval(srange);
        out.endpoint = have_end ? hull(out.endpoint, part) : part;
        if (with_variation) {
          IMat<N, N> pv = acc.value_after(rec.jacobian_at(srange));
          out.variation = have_end ? hull(out.variation, pv) : pv;
        }
        have_end = true;
        if (rec.h >= shi) break;
      }
      t += Interval(rec.h);
      S = rec.end;
      cur_hull = rec.end_hull;
      if (with_variation) acc.apply(rec.J, st_);
      h = suggest_step(rec);
    }
    return out;
  }

 private:
  const PolyField<N>* f_;
  TaylorEngine<N> eng_;
  IntegratorSettings st_;
  std::vector<IVec<N>> hsol_, zsol_;
};

// Module-level convenience wrappers matching the documented operations.

template <int N>
StepRecord<N, N> step(const PolyField<N>& f, const IVec<N>& X0, double h,
                      const IntegratorSettings& st) {
  Integrator<N> integ(f, st);
  return integ.step(AffineSet<N, N>::from_box(X0, st.representation), h);
}

template <int N>
FlowEnclosure<N> flow(const PolyField<N>& f, const IVec<N>& X0, const Interval& T,
                      const IntegratorSettings& st, bool with_variation = false) {
  Integrator<N> integ(f, st);
  return integ.flow(AffineSet<N, N>::from_box(X0, st.representation), T, with_variation);
}

}  // namespace rigor
