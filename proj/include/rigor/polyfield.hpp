#pragma once

// Polynomial vector fields with formal Jacobians, and Taylor coefficients of
// their flows.  Coefficients follow the classical recurrence
//
//   c_{n+1} = F_n(c_0,...,c_n) / (n+1),
//
// where F_n is the n-th series coefficient of f along the solution, built
// order by order from truncated products.  Seeding c_0 with an interval box
// gives enclosures of the coefficients over every trajectory through the box,
// which is exactly what Lagrange remainder evaluation over an a-priori
// enclosure needs.  The first variation obeys V' = Df(x(t)) V and its
// coefficients come from the matching matrix convolution.

#include <cstdint>
#include <string>
#include <vector>

#include "rigor/vec.hpp"

namespace rigor {

template <int N>
struct Monomial {
  Interval coef;
  std::array<uint8_t, N> exp{};
};

namespace detail {

// A monomial prepared for series evaluation: exponents flattened into the
// list of participating variables, e.g. x^2 z -> {0, 0, 2}.
template <int N>
struct TermPlan {
  Interval coef;
  std::vector<uint8_t> factors;
};

template <int N>
std::vector<TermPlan<N>> plan_terms(const std::vector<Monomial<N>>& poly) {
  std::vector<TermPlan<N>> plans;
  plans.reserve(poly.size());
  for (auto& m : poly) {
    TermPlan<N> p;
    p.coef = m.coef;
    for (int v = 0; v < N; ++v)
      for (int k = 0; k < m.exp[v]; ++k) p.factors.push_back(uint8_t(v));
    plans.push_back(std::move(p));
  }
  return plans;
}

}  // namespace detail

template <int N>
struct PolyField {
  std::array<std::vector<Monomial<N>>, N> comp;
  // jac[i][j] is the formal derivative d comp[i] / d x_j.
  std::array<std::array<std::vector<Monomial<N>>, N>, N> jac;
  std::string name;

  static PolyField make(std::array<std::vector<Monomial<N>>, N> components,
                        std::string label) {
    PolyField f;
    f.comp = std::move(components);
    f.name = std::move(label);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        for (auto& m : f.comp[i]) {
          if (m.exp[j] == 0) continue;
          Monomial<N> d = m;
          d.coef = Interval(double(m.exp[j])) * m.coef;
          d.exp[j] = uint8_t(m.exp[j] - 1);
          f.jac[i][j].push_back(d);
        }
      }
    return f;
  }

  IVec<N> eval(const IVec<N>& x) const {
    IVec<N> r;
    for (int i = 0; i < N; ++i) r[i] = eval_component(comp[i], x);
    return r;
  }

  IMat<N, N> jacobian(const IVec<N>& x) const {
    IMat<N, N> r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) r(i, j) = eval_component(jac[i][j], x);
    return r;
  }

  static Interval eval_component(const std::vector<Monomial<N>>& poly, const IVec<N>& x) {
    Interval s(0.0);
    for (auto& m : poly) {
      Interval t = m.coef;
      for (int v = 0; v < N; ++v)
        if (m.exp[v]) t *= pow(x[v], m.exp[v]);
      s += t;
    }
    return s;
  }
};

template <int N>
struct TaylorSeriesBundle {
  std::vector<IVec<N>> sol;        // sol[i]: i-th Taylor coefficient of the solution
  std::vector<IMat<N, N>> var;     // var[i]: i-th coefficient of the first variation
};

// Order-by-order Taylor coefficient engine.  One instance holds the term
// plans and scratch series, so repeated stepping does not reallocate.
template <int N>
class TaylorEngine {
 public:
  explicit TaylorEngine(const PolyField<N>& f) : f_(&f) {
    for (int i = 0; i < N; ++i) {
      plans_[i] = detail::plan_terms<N>(f.comp[i]);
      for (int j = 0; j < N; ++j) jplans_[i][j] = detail::plan_terms<N>(f.jac[i][j]);
    }
  }

  const PolyField<N>& field() const { return *f_; }

  // Fills sol[0..order] with coefficient enclosures seeded at x0.
  void solution_series(const IVec<N>& x0, int order, std::vector<IVec<N>>& sol) {
    sol.resize(order + 1);
    sol[0] = x0;
    prepare_scratch(scratch_, plans_, order);
    for (int n = 0; n < order; ++n) {
      IVec<N> F;
      for (int i = 0; i < N; ++i)
        F[i] = field_coefficient(scratch_[i], plans_[i], sol, n);
      Interval inv = Interval(1.0) / Interval(double(n + 1));
      for (int i = 0; i < N; ++i) sol[n + 1][i] = F[i] * inv;
    }
  }

  // Fills var[0..order] for the variation seeded with V0, using previously
  // computed solution coefficients (required up to order-1).
  void variation_series(const std::vector<IVec<N>>& sol, const IMat<N, N>& V0,
                        int order, std::vector<IMat<N, N>>& var) {
    var.resize(order + 1);
    var[0] = V0;
    for (int i = 0; i < N; ++i)
      prepare_scratch(jscratch_[i], jplans_[i], order);
    // A[m](i,j): m-th series coefficient of (Df)(x(t)).
    amat_.resize(order);
    for (int n = 0; n < order; ++n) {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          amat_[n](i, j) = field_coefficient(jscratch_[i][j], jplans_[i][j], sol, n);
      IMat<N, N> S;
      for (int m = 0; m <= n; ++m) {
        const IMat<N, N>& A = amat_[m];
        const IMat<N, N>& V = var[n - m];
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) {
            Interval s = A(i, 0) * V(0, j);
            for (int k = 1; k < N; ++k) s += A(i, k) * V(k, j);
            S(i, j) = m == 0 ? s : S(i, j) + s;
          }
      }
      Interval inv = Interval(1.0) / Interval(double(n + 1));
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) var[n + 1](i, j) = S(i, j) * inv;
    }
  }

  // Scalar sequence bound for the variation: returns nu with
  // |V_order(i,j)| <= nu whenever the seed satisfies ||V0||_inf <= v0,
  // via ||V_{n+1}||_inf <= (sum_m ||A_m||_inf ||V_{n-m}||_inf) / (n+1),
  // accumulated with upward rounding.  Orders of magnitude cheaper than the
  // matrix convolution; intended for Lagrange remainder coefficients, where
  // the sigma^{order} factor makes tightness irrelevant.
  double variation_norm_bound(const std::vector<IVec<N>>& sol, double v0, int order) {
    for (int i = 0; i < N; ++i) prepare_scratch(jscratch_[i], jplans_[i], order);
    nubuf_.assign(order + 1, 0.0);
    nubuf_[0] = v0;
    alphabuf_.assign(order, 0.0);
    for (int n = 0; n < order; ++n) {
      double rowmax = 0;
      for (int i = 0; i < N; ++i) {
        double row = 0;
        for (int j = 0; j < N; ++j) {
          Interval aij = field_coefficient(jscratch_[i][j], jplans_[i][j], sol, n);
          row = detail::add_up(row, aij.mag());
        }
        rowmax = std::max(rowmax, row);
      }
      alphabuf_[n] = rowmax;
      double s = 0;
      for (int m = 0; m <= n; ++m)
        s = detail::add_up(s, detail::mul_up(alphabuf_[m], nubuf_[n - m]));
      nubuf_[n + 1] = detail::div_up(s, double(n + 1));
    }
    return nubuf_[order];
  }

 private:
  // One cached partial-product series per multiplication level of a term.
  struct TermScratch {
    std::vector<std::vector<Interval>> level;
  };
  using CompScratch = std::vector<TermScratch>;

  static void prepare_scratch(std::array<CompScratch, N>& sc,
                              const std::array<std::vector<detail::TermPlan<N>>, N>& plans,
                              int order) {
    for (int i = 0; i < N; ++i) prepare_scratch_one(sc[i], plans[i], order);
  }

  static void prepare_scratch_one(CompScratch& sc,
                                  const std::vector<detail::TermPlan<N>>& plans, int order) {
    sc.resize(plans.size());
    for (size_t t = 0; t < plans.size(); ++t) {
      size_t levels = plans[t].factors.size() > 1 ? plans[t].factors.size() - 1 : 0;
      sc[t].level.resize(levels);
      for (auto& l : sc[t].level) l.assign(order + 1, Interval(0.0));
    }
  }

  // n-th series coefficient of one polynomial component along `sol`,
  // updating the cached partial products at order n.
  static Interval field_coefficient(CompScratch& sc,
                                    const std::vector<detail::TermPlan<N>>& plans,
                                    const std::vector<IVec<N>>& sol, int n) {
    Interval F(0.0);
    for (size_t t = 0; t < plans.size(); ++t) {
      const auto& plan = plans[t];
      size_t d = plan.factors.size();
      if (d == 0) {
        if (n == 0) F += plan.coef;
        continue;
      }
      if (d == 1) {
        F += plan.coef * sol[n][plan.factors[0]];
        continue;
      }
      auto& lv = sc[t].level;
      // level 0 at order m is sol[m][factors[0]]; level l multiplies in
      // factors[l+1] by convolution.
      for (size_t l = 0; l + 1 < d; ++l) {
        int vnext = plan.factors[l + 1];
        Interval s(0.0);
        for (int m = 0; m <= n; ++m) {
          const Interval& left =
              l == 0 ? sol[m][plan.factors[0]] : lv[l - 1][m];
          s += left * sol[n - m][vnext];
        }
        lv[l][n] = s;
      }
      F += plan.coef * lv[d - 2][n];
    }
    return F;
  }

  const PolyField<N>* f_;
  std::array<std::vector<detail::TermPlan<N>>, N> plans_;
  std::array<std::array<std::vector<detail::TermPlan<N>>, N>, N> jplans_;
  std::array<CompScratch, N> scratch_;
  std::array<std::array<CompScratch, N>, N> jscratch_;
  std::vector<IMat<N, N>> amat_;
  std::vector<double> nubuf_, alphabuf_;
};

// Convenience wrapper: coefficients of the flow (and optionally its first
// variation seeded with the identity) at x0, orders 0..order.
template <int N>
TaylorSeriesBundle<N> taylor_coefficients(const PolyField<N>& f, const IVec<N>& x0,
                                          int order, bool with_variation = false) {
  TaylorEngine<N> eng(f);
  TaylorSeriesBundle<N> b;
  eng.solution_series(x0, order, b.sol);
  if (with_variation)
    eng.variation_series(b.sol, IMat<N, N>::identity(), order, b.var);
  return b;
}

// ---- Shipped fields ----

// x' = -y - z,  y' = b y + x,  z' = z (x - a) + b.
// Decimal parameters that are not binary-representable (0.2, 4.7, ...) must
// arrive as enclosing intervals; the factory stores them verbatim.
inline PolyField<3> rossler_field(const Interval& a, const Interval& b) {
  std::array<std::vector<Monomial<3>>, 3> c;
  c[0] = {{Interval(-1.0), {0, 1, 0}}, {Interval(-1.0), {0, 0, 1}}};
  c[1] = {{b, {0, 1, 0}}, {Interval(1.0), {1, 0, 0}}};
  c[2] = {{Interval(1.0), {1, 0, 1}}, {-a, {0, 0, 1}}, {b, {0, 0, 0}}};
  return PolyField<3>::make(std::move(c), "rossler");
}

// Tightest binary64 enclosure of num/den for exactly representable num and
// den; the way to introduce decimal parameters such as 0.2 = 1/5 or
// 4.7 = 47/10 that have no exact binary64 form.
inline Interval rational_enclosure(double num, double den) {
  return Interval(num) / Interval(den);
}

// x' = x; closed-form flow e^t from x(0)=1.
inline PolyField<1> exp_field() {
  std::array<std::vector<Monomial<1>>, 1> c;
  c[0] = {{Interval(1.0), {1}}};
  return PolyField<1>::make(std::move(c), "exp");
}

// x' = -y, y' = x; uniform rotation.
inline PolyField<2> rotation_field() {
  std::array<std::vector<Monomial<2>>, 2> c;
  c[0] = {{Interval(-1.0), {0, 1}}};
  c[1] = {{Interval(1.0), {1, 0}}};
  return PolyField<2>::make(std::move(c), "rotation");
}

}  // namespace rigor
