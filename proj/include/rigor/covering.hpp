#pragma once

// Covering relations between h-sets on the section, the per-period loop
// patterns built from them, and the combinatorial arguments on top: the
// fundamental-period justification and the Sharkovskii order.
//
// An h-set is an affine rectangle [a,b] x [-r,r] in chart coordinates whose
// designated exit direction is u.  N1 =k=> N2 requires, for the k-th return
// map expressed in the charts, that the image of the body stays inside the
// open union of the left strip (-inf,a) x R, the open band v in (-r,r) over
// any u, and the right strip (b,inf) x R, while the two u-edges map strictly
// into one strip each, on opposite sides.  Degree-one behavior in u plus the
// band condition then gives the topological crossing the fixed-point theorem
// for loops of coverings needs.
//
// Verification is adaptive: sub-boxes whose image enclosure fails the
// disjunction, or fails to integrate at all, split in half up to a depth
// cap.  The expansion of the return map varies by two orders of magnitude
// across a body (worst at the fold), so a uniform grid fine enough for the
// fold would waste hundreds of integrations elsewhere.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rigor/poincare.hpp"

namespace rigor {

struct CoveringFailure : IntervalError {
  IVec2 box;
  IVec2 image;
  CoveringFailure(const std::string& what, const IVec2& box_, const IVec2& image_)
      : IntervalError(what), box(box_), image(image_) {}
};

struct PeriodNotConstructible : IntervalError {
  explicit PeriodNotConstructible(const std::string& what) : IntervalError(what) {}
};

struct JustificationUnavailable : IntervalError {
  explicit JustificationUnavailable(const std::string& what) : IntervalError(what) {}
};

// Affine rectangle on the section with exit edges at u = a and u = b.
struct HSet {
  std::string name;
  AffineChart chart;
  Interval base;  // [a, b] in u
  double r = 0;   // half-height in v

  IVec2 body() const {
    IVec2 b;
    b[0] = base;
    b[1] = Interval(-r, r);
    return b;
  }

  IVec2 edge(bool right) const {
    IVec2 b;
    b[0] = Interval(right ? base.hi() : base.lo());
    b[1] = Interval(-r, r);
    return b;
  }
};

struct CoveringGrids {
  int body_n1 = 30;  // initial u-cells of the body
  int body_n2 = 1;   // initial v-cells of the body
  int edge_n = 8;    // initial v-cells of each edge
  int max_depth = 14;
};

// One verified sub-box with its image enclosure and the clause it
// satisfied: -1 left strip, 0 open band, +1 right strip.  The full leaf
// list makes an edge's evidence re-checkable without integrating anything.
struct CoveringLeaf {
  IVec2 box;
  IVec2 image;
  int branch = 0;
};

// Evidence from one adaptively verified region (a body or an edge).
struct RegionStats {
  long pieces = 0;  // leaves that passed
  int depth = 0;    // deepest split level needed
  IVec2 image_hull;
  double margin = 0;  // worst leaf's distance to its clause boundary
  std::vector<CoveringLeaf> leaves;
};

struct CoveringEdge {
  std::string source, target;
  int k = 1;
  bool orientation_preserving = true;
  CoveringGrids grids;
  RegionStats body, left, right;
};

namespace detail {

struct LeafVerdict {
  bool ok = false;
  double margin = 0;
  int side = 0;  // -1 left strip, +1 right strip, 0 band clause
};

struct CellResult {
  RegionStats stats;
  int side_mask = 0;  // bit 0: some leaf exits left, bit 1: right, bit 2: band
};

// Depth-first adaptive verification of one initial cell.  Enclosure
// failures (integration divergence, crossing not located) split like
// condition failures: a wrapping-inflated wide box often integrates fine in
// halves.
template <typename CheckFn>
CellResult verify_cell(ReturnMap& rm, const AffineChart& cin, const AffineChart& cout,
                       int k, const IVec2& root, int split_dim, int max_depth,
                       const CheckFn& check) {
  CellResult res;
  std::vector<std::pair<IVec2, int>> stack{{root, 0}};
  bool first = true;
  while (!stack.empty()) {
    auto [bx, d] = stack.back();
    stack.pop_back();
    LeafVerdict v;
    std::string why;
    try {
      CrossingEnclosure ce = rm.map_chart(cin, cout, bx, k, false);
      v = check(ce.image);
      if (v.ok) {
        ++res.stats.pieces;
        res.stats.depth = std::max(res.stats.depth, d);
        res.stats.image_hull = first ? ce.image : hull(res.stats.image_hull, ce.image);
        res.stats.margin = first ? v.margin : std::min(res.stats.margin, v.margin);
        first = false;
        res.side_mask |= v.side < 0 ? 1 : v.side > 0 ? 2 : 4;
        res.stats.leaves.push_back({bx, ce.image, v.side});
        continue;
      }
      why = "image " + to_string(ce.image) + " fails the covering condition";
      if (d >= max_depth) throw CoveringFailure(
          "covering not verified at depth " + std::to_string(d) + " on box " +
              to_string(bx) + ": " + why,
          bx, ce.image);
    } catch (const CoveringFailure&) {
      throw;
    } catch (const IntervalError& e) {
      if (d >= max_depth) {
        IVec2 none;
        throw CoveringFailure("enclosure failed at depth " + std::to_string(d) +
                                  " on box " + to_string(bx) + ": " + e.what(),
                              bx, none);
      }
    }
    double mid = 0.5 * (bx[split_dim].lo() + bx[split_dim].hi());
    IVec2 lo = bx, hi = bx;
    lo[split_dim] = Interval(bx[split_dim].lo(), mid);
    hi[split_dim] = Interval(mid, bx[split_dim].hi());
    stack.emplace_back(hi, d + 1);
    stack.emplace_back(lo, d + 1);
  }
  return res;
}

template <typename CheckFn>
CellResult verify_region(const PolyField<3>& f, const IntegratorSettings& st,
                         const AffineChart& cin, const AffineChart& cout, int k,
                         const std::vector<IVec2>& cells, int split_dim, int max_depth,
                         int jobs, const CheckFn& check) {
  std::vector<CellResult> results(cells.size());
  parallel_for(jobs, int(cells.size()), [&](int i) {
    ReturnMap rm(f, st);
    results[i] = verify_cell(rm, cin, cout, k, cells[i], split_dim, max_depth, check);
  });
  CellResult out = results[0];
  for (size_t i = 1; i < results.size(); ++i) {
    out.stats.pieces += results[i].stats.pieces;
    out.stats.depth = std::max(out.stats.depth, results[i].stats.depth);
    out.stats.image_hull = hull(out.stats.image_hull, results[i].stats.image_hull);
    out.stats.margin = std::min(out.stats.margin, results[i].stats.margin);
    out.side_mask |= results[i].side_mask;
    out.stats.leaves.insert(out.stats.leaves.end(), results[i].stats.leaves.begin(),
                            results[i].stats.leaves.end());
  }
  return out;
}

}  // namespace detail

// Verify source =k=> target.  Throws CoveringFailure with the offending box
// when a condition cannot be established within the depth cap.
inline CoveringEdge covers(const PolyField<3>& f, const HSet& src, const HSet& tgt,
                           int k, const IntegratorSettings& st,
                           const CoveringGrids& grids = {}, int jobs = 1) {
  CoveringEdge e;
  e.source = src.name;
  e.target = tgt.name;
  e.k = k;
  e.grids = grids;
  const double a = tgt.base.lo(), b = tgt.base.hi(), r = tgt.r;

  auto body_check = [&](const IVec2& img) {
    detail::LeafVerdict v;
    if (img[1].lo() > -r && img[1].hi() < r) {
      v.ok = true;
      v.margin = std::min(img[1].lo() + r, r - img[1].hi());
      v.side = 0;
    } else if (img[0].hi() < a) {
      v.ok = true;
      v.margin = a - img[0].hi();
      v.side = -1;
    } else if (img[0].lo() > b) {
      v.ok = true;
      v.margin = img[0].lo() - b;
      v.side = 1;
    }
    return v;
  };
  auto edge_check = [&](const IVec2& img) {
    detail::LeafVerdict v;
    if (img[0].hi() < a) {
      v.ok = true;
      v.margin = a - img[0].hi();
      v.side = -1;
    } else if (img[0].lo() > b) {
      v.ok = true;
      v.margin = img[0].lo() - b;
      v.side = 1;
    }
    return v;
  };

  auto body_cells = subdivide<2>(src.body(), {grids.body_n1, grids.body_n2});
  e.body = detail::verify_region(f, st, src.chart, tgt.chart, k, body_cells,
                                 /*split_dim=*/0, grids.max_depth, jobs, body_check)
               .stats;

  int side[2];
  for (int right = 0; right < 2; ++right) {
    auto cells = subdivide<2>(src.edge(right), {1, grids.edge_n});
    auto res = detail::verify_region(f, st, src.chart, tgt.chart, k, cells,
                                     /*split_dim=*/1, grids.max_depth, jobs, edge_check);
    if (res.side_mask != 1 && res.side_mask != 2)
      throw CoveringFailure(std::string(right ? "right" : "left") +
                                " edge of " + src.name +
                                " does not exit through a single strip of " + tgt.name,
                            src.edge(right), res.stats.image_hull);
    side[right] = res.side_mask == 1 ? -1 : 1;
    (right ? e.right : e.left) = res.stats;
  }
  if (side[0] == side[1])
    throw CoveringFailure("both edges of " + src.name + " exit " + tgt.name +
                              " through the same strip",
                          src.edge(false), e.left.image_hull);
  e.orientation_preserving = side[0] < 0;
  return e;
}

// Re-validate a verified edge's recorded evidence without integrating:
// every leaf image must satisfy its recorded clause strictly against the
// target's geometry, leaf boxes must hull back to exactly the region they
// tile, each edge must exit through one strip, and the two strips must be
// opposite and match the orientation flag.
inline bool recheck(const CoveringEdge& e, const HSet& src, const HSet& tgt) {
  const double a = tgt.base.lo(), b = tgt.base.hi(), r = tgt.r;
  auto leaf_ok = [&](const CoveringLeaf& l, bool body) {
    switch (l.branch) {
      case 0: return body && l.image[1].lo() > -r && l.image[1].hi() < r;
      case -1: return l.image[0].hi() < a;
      case 1: return l.image[0].lo() > b;
    }
    return false;
  };
  auto region_ok = [&](const RegionStats& st, const IVec2& region, bool body, int* side) {
    if (st.leaves.empty() || long(st.leaves.size()) != st.pieces) return false;
    IVec2 h = st.leaves[0].box;
    int mask = 0;
    for (const CoveringLeaf& l : st.leaves) {
      if (!leaf_ok(l, body)) return false;
      h = hull(h, l.box);
      mask |= l.branch < 0 ? 1 : l.branch > 0 ? 2 : 4;
    }
    for (int i = 0; i < 2; ++i)
      if (h[i].lo() != region[i].lo() || h[i].hi() != region[i].hi()) return false;
    if (!body) {
      if (mask != 1 && mask != 2) return false;
      *side = mask == 1 ? -1 : 1;
    }
    return true;
  };
  int ls = 0, rs = 0;
  if (!region_ok(e.body, src.body(), true, nullptr)) return false;
  if (!region_ok(e.left, src.edge(false), false, &ls)) return false;
  if (!region_ok(e.right, src.edge(true), false, &rs)) return false;
  if (ls == rs) return false;
  return e.orientation_preserving == (ls < 0);
}

// -------- loops of coverings --------

struct LoopEdgeSpec {
  const HSet* source;
  const HSet* target;
  int k;
};

struct PeriodLoopSpec {
  int period = 0;
  std::vector<LoopEdgeSpec> edges;
  // One entry per return; null where an intermediate return of a k > 1 edge
  // leaves the position unconstrained.
  std::vector<const HSet*> itinerary;
};

// Evidence that every proper divisor of the period is ruled out as a period
// of the orbit: for divisor d, the itinerary pins positions i and i+d to
// disjoint h-sets.
struct FundamentalJustification {
  int period = 0;
  std::vector<std::pair<int, int>> witnesses;  // (divisor, position)
};

namespace detail {

inline bool same_chart(const AffineChart& a, const AffineChart& b) {
  for (int i = 0; i < 2; ++i) {
    if (a.p[i].lo() != b.p[i].lo() || a.p[i].hi() != b.p[i].hi()) return false;
    for (int j = 0; j < 2; ++j)
      if (a.M(i, j).lo() != b.M(i, j).lo() || a.M(i, j).hi() != b.M(i, j).hi())
        return false;
  }
  return true;
}

inline bool disjoint_hsets(const HSet& a, const HSet& b) {
  if (!same_chart(a.chart, b.chart))
    throw JustificationUnavailable(
        "h-sets " + a.name + " and " + b.name +
        " use different charts; their disjointness is not established here");
  return a.base.hi() < b.base.lo() || b.base.hi() < a.base.lo();
}

}  // namespace detail

// Divisor-itinerary argument.  Succeeds when every proper divisor d of the
// loop length admits a position pair (i, i+d) pinned to disjoint h-sets;
// an all-same-symbol loop has no such pair and is refused, since a point
// shadowing it may well have a smaller period.
inline FundamentalJustification fundamental_period_argument(
    const std::vector<const HSet*>& itinerary) {
  FundamentalJustification out;
  int n = int(itinerary.size());
  if (n <= 0) throw JustificationUnavailable("empty itinerary");
  out.period = n;
  for (int d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    int witness = -1;
    for (int i = 0; i < n && witness < 0; ++i) {
      const HSet* p = itinerary[size_t(i)];
      const HSet* q = itinerary[size_t((i + d) % n)];
      if (p && q && detail::disjoint_hsets(*p, *q)) witness = i;
    }
    if (witness < 0)
      throw JustificationUnavailable(
          "itinerary cannot separate period " + std::to_string(n) +
          " from divisor " + std::to_string(d));
    out.witnesses.emplace_back(d, witness);
  }
  return out;
}

// Loop pattern of one parameter regime: an inner set visited once and a
// self-covering main set, closed by an edge of `closing_k` returns.
struct LoopPattern {
  const HSet* inner;
  const HSet* main;
  int closing_k = 1;
};

inline PeriodLoopSpec build_period_loop(const LoopPattern& pat, int n) {
  if (n < 1) throw PeriodNotConstructible("period must be positive");
  PeriodLoopSpec spec;
  spec.period = n;
  if (n == 1) {
    spec.edges.push_back({pat.main, pat.main, 1});
    spec.itinerary = {pat.main};
    return spec;
  }
  int c = n - 1 - pat.closing_k;
  if (c < 0)
    throw PeriodNotConstructible("period " + std::to_string(n) +
                                 " is shorter than the closing edge allows");
  spec.edges.push_back({pat.inner, pat.main, 1});
  for (int i = 0; i < c; ++i) spec.edges.push_back({pat.main, pat.main, 1});
  spec.edges.push_back({pat.main, pat.inner, pat.closing_k});
  spec.itinerary.assign(size_t(n), nullptr);
  spec.itinerary[0] = pat.inner;
  for (int i = 0; i <= c; ++i) spec.itinerary[size_t(1 + i)] = pat.main;
  try {
    fundamental_period_argument(spec.itinerary);
  } catch (const JustificationUnavailable& e) {
    throw PeriodNotConstructible("no fundamental period-" + std::to_string(n) +
                                 " loop in this pattern: " + e.what());
  }
  return spec;
}

// -------- loop verification --------

struct PeriodProof {
  PeriodLoopSpec spec;
  std::vector<CoveringEdge> edges;  // same order as spec.edges
  FundamentalJustification fundamental;
};

using EdgeCache = std::map<std::string, CoveringEdge>;

inline std::string edge_key(const std::string& src, const std::string& tgt, int k) {
  return src + "=>" + tgt + "^" + std::to_string(k);
}

// Verify every edge of the loop, reusing any edge already in the cache.
inline PeriodProof verify_period_loop(const PolyField<3>& f, const PeriodLoopSpec& spec,
                                      const IntegratorSettings& st,
                                      const CoveringGrids& grids, int jobs,
                                      EdgeCache* cache = nullptr) {
  PeriodProof proof;
  proof.spec = spec;
  for (size_t i = 0; i < spec.edges.size(); ++i) {
    const auto& es = spec.edges[i];
    const auto& nx = spec.edges[(i + 1) % spec.edges.size()];
    if (es.target != nx.source)
      throw IntervalError("period loop is not closed at edge " + std::to_string(i));
    std::string key = edge_key(es.source->name, es.target->name, es.k);
    if (cache) {
      auto it = cache->find(key);
      if (it != cache->end()) {
        proof.edges.push_back(it->second);
        continue;
      }
    }
    CoveringEdge e = covers(f, *es.source, *es.target, es.k, st, grids, jobs);
    if (cache) cache->emplace(key, e);
    proof.edges.push_back(std::move(e));
  }
  proof.fundamental = fundamental_period_argument(spec.itinerary);
  return proof;
}

// -------- Sharkovskii order --------

// Strict order: 3, 5, 7, ..., 2*3, 2*5, ..., 4*3, 4*5, ..., then powers of
// two descending down to 2, 1.  sharkovskii_less(m, n) holds when m comes
// strictly before n, in which case a continuous interval map with a period-m
// point also has a period-n point.
inline bool sharkovskii_less(long m, long n) {
  if (m < 1 || n < 1) throw IntervalError("sharkovskii_less: periods start at 1");
  if (m == n) return false;
  auto split = [](long v) {
    int a = 0;
    while (v % 2 == 0) {
      v /= 2;
      ++a;
    }
    return std::pair<int, long>(a, v);
  };
  auto [am, pm] = split(m);
  auto [an, pn] = split(n);
  bool m_pow2 = pm == 1, n_pow2 = pn == 1;
  if (!m_pow2 && !n_pow2) return am < an || (am == an && pm < pn);
  if (!m_pow2) return true;   // any non-power precedes every power of two
  if (!n_pow2) return false;
  return am > an;             // powers of two descend
}

// -------- reporting --------

inline std::string dump_dot(const std::vector<CoveringEdge>& edges) {
  std::string out = "digraph covering {\n";
  for (const auto& e : edges) {
    out += "  \"" + e.source + "\" -> \"" + e.target + "\" [label=\"k=" +
           std::to_string(e.k) + (e.orientation_preserving ? ", +\"" : ", -\"") +
           "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace rigor
