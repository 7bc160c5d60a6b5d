#pragma once

// The two concrete parameter settings of the quadratic field
//   x' = -y - z,  y' = b y + x,  z' = z (x - a) + b
// this tool proves statements about, with their reference data (straightening
// charts, h-sets, trapping region, previously computed orbit enclosures) and
// the proof runners that turn one named case or one period into a Certificate.
//
// Regime "a525" (a = 21/4): a period-3 orbit plus a covering chain
// N0 => N1 => N1 => N0 whose loops realize every period.
// Regime "a47" (a = 47/10): a period-5 orbit, a chain N0 => N2 => N2 =3=> N0
// realizing every period except 2, 3 and 4, separate stationary-orbit proofs
// for periods 2 and 4, a forward-invariant parallelogram A, and the
// non-existence of fundamental period 3 inside A.

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigor/certificate.hpp"
#include "rigor/covering.hpp"
#include "rigor/newton.hpp"

namespace rigor {

// Bad case number, bad system name, bad CLI input.  The CLI maps this to its
// usage exit code instead of the proof-failed one.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using OrbitBoxes = std::vector<IVec2>;

struct SystemData {
  std::string name;
  Interval a, b;
  PolyField<3> field;

  AffineChart chart;  // straightening chart the h-sets live in
  HSet inner, main;   // covering pattern: inner visited once, main self-covers
  int closing_k = 1;  // returns consumed by the closing edge main => inner
  int case_count = 0;

  // period -> previously computed orbit enclosures in section (y, z)
  // coordinates, one box per return, starting at the point the refinement
  // seeds from.  Tests compare freshly proved orbits against these.
  std::map<int, OrbitBoxes> reference_orbits;

  // Verified covering grids per edge key; edges not listed use defaults.
  std::map<std::string, CoveringGrids> edge_grids;
  CoveringGrids default_grids;

  // a47 only: trapping parallelogram and the slab previous runs isolated the
  // stationary point of the third-return map in.
  std::optional<HSet> trap;
  std::optional<IVec2> stationary_slab;

  LoopPattern pattern() const { return {&inner, &main, closing_k}; }

  CoveringGrids grids_for(const std::string& edge) const {
    auto it = edge_grids.find(edge);
    return it == edge_grids.end() ? default_grids : it->second;
  }
};

namespace detail {

inline IVec2 box2(double ylo, double yhi, double zlo, double zhi) {
  IVec2 b;
  b[0] = Interval(ylo, yhi);
  b[1] = Interval(zlo, zhi);
  return b;
}

inline AffineChart tilt_chart(double t, double py, double pz) {
  DMat<2, 2> m;
  m(0, 0) = -1;
  m(0, 1) = t;
  m(1, 0) = -t;
  m(1, 1) = -1;
  return AffineChart::make(to_imat(m), to_ivec<2>({py, pz}));
}

inline HSet band_hset(const std::string& name, const AffineChart& c, double center,
                      double radius, double r) {
  return HSet{name, c, Interval(center - radius, center + radius), r};
}

inline std::unique_ptr<SystemData> make_a525() {
  auto s = std::make_unique<SystemData>();
  s->name = "a525";
  s->a = rational_enclosure(525, 100);
  s->b = rational_enclosure(2, 10);
  s->field = rossler_field(s->a, s->b);
  s->chart = tilt_chart(0.000706767, -6.264007533274157, 0.03265435884602701);
  s->inner = band_hset("N0", s->chart, -1.23094, 1.41278, 7e-4);
  s->main = band_hset("N1", s->chart, 1.84699, 1.55949, 7e-4);
  s->closing_k = 1;
  s->case_count = 2;
  s->reference_orbits[3] = {
      box2(-3.466415205012922, -3.466415205008744, 0.0346316054764013, 0.03463160547651117),
      box2(-6.264007533282922, -6.264007533274157, 0.03265435884602701, 0.03265435884620798),
      box2(-9.748889918093569, -9.748889918088608, 0.03075287338062635, 0.03075287338070747),
  };
  CoveringGrids g;
  g.body_n1 = 60;
  s->default_grids = g;
  return s;
}

inline std::unique_ptr<SystemData> make_a47() {
  auto s = std::make_unique<SystemData>();
  s->name = "a47";
  s->a = rational_enclosure(47, 10);
  s->b = rational_enclosure(2, 10);
  s->field = rossler_field(s->a, s->b);
  s->chart = tilt_chart(0.000842495, -6.858260447127058, 0.03505366666527084);
  s->inner = band_hset("N0", s->chart, -1.96783, 1.02, 2e-4);
  s->main = band_hset("N2", s->chart, 0.454186, 0.476895, 2e-4);
  s->closing_k = 3;
  s->case_count = 6;
  s->reference_orbits[5] = {
      box2(-3.885277116910041, -3.885277116888829, 0.03755839144432487, 0.03755839144485094),
      box2(-6.858260447162484, -6.858260447126429, 0.03505366666495363, 0.03505366666561609),
      box2(-7.766631245392379, -7.766631245348371, 0.03441713392818681, 0.03441713392863033),
      box2(-5.895584354611225, -5.895584354509201, 0.03578591178706747, 0.03578591178835873),
      box2(-8.722396020073123, -8.722396020049997, 0.03379629936404972, 0.0337962993643551),
  };
  s->reference_orbits[2] = {
      box2(-4.883924258743846, -4.883924258742264, 0.03663128109720363, 0.03663128109729599),
      box2(-8.220951552235825, -8.220951552233453, 0.03411620084268562, 0.03411620084269375),
  };
  s->reference_orbits[4] = {
      box2(-6.332251180191433, -6.332251180186209, 0.03544579954748502, 0.03544579954786024),
      box2(-8.470343654125783, -8.470343654119862, 0.03395554856430393, 0.03395554856440434),
      box2(-4.36266725991514, -4.3626672599017, 0.03710245585053683, 0.03710245585075971),
      box2(-7.571669540362099, -7.571669540341765, 0.0345497016342597, 0.03454970163427861),
  };
  CoveringGrids g;
  g.body_n1 = 60;
  s->default_grids = g;
  // The k = 3 closing edge crosses the fold three times; it needs a much
  // finer initial grid to keep the adaptive splitting shallow.
  CoveringGrids g3 = g;
  g3.body_n1 = 240;
  s->edge_grids[edge_key("N2", "N0", 3)] = g3;

  AffineChart ca = tilt_chart(0.000777754, -6.19384, 0.0356629);
  s->trap = band_hset("A", ca, 0.0, 2.66856, 4e-4);
  s->stationary_slab = box2(-7.186544568881281, -7.165195528898398, 0.0344908202443027,
                            0.03522742411001666);
  return s;
}

}  // namespace detail

inline const SystemData& get_system(const std::string& name) {
  static const std::map<std::string, std::unique_ptr<SystemData>>& reg = *[] {
    auto* m = new std::map<std::string, std::unique_ptr<SystemData>>;
    m->emplace("a525", detail::make_a525());
    m->emplace("a47", detail::make_a47());
    return m;
  }();
  auto it = reg.find(name);
  if (it == reg.end())
    throw UsageError("unknown system \"" + name + "\" (expected a525 or a47)");
  return *it->second;
}

// -------- run options --------

struct RunOptions {
  std::optional<int> order;
  std::optional<double> tolerance;
  std::optional<GridSpec> grid;  // overrides the case's main grid where one exists
  std::optional<Representation> representation;
  int jobs = 1;
  EdgeCache* cache = nullptr;  // covering edges verified once, shared across cases
};

namespace detail {

inline IntegratorSettings apply(const RunOptions& o, IntegratorSettings st) {
  if (o.order) st.order = *o.order;
  if (o.tolerance) st.tolerance = *o.tolerance;
  if (o.representation) st.representation = *o.representation;
  return st;
}

// Settings for the scan-heavy runs: cheaper Taylor model, still far below
// the tolerances any verdict depends on.
inline IntegratorSettings scan_settings() {
  IntegratorSettings st;
  st.order = 12;
  st.tolerance = 1e-13;
  return st;
}

inline int jobs_of(const RunOptions& o) { return o.jobs > 0 ? o.jobs : 1; }

template <typename F>
Certificate timed(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  Certificate c = f();
  c.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

// -------- stationary-orbit cases --------

inline Certificate orbit_case(const SystemData& sys, int n, const std::string& id,
                              const RunOptions& opt) {
  return timed([&] {
    IntegratorSettings st = apply(opt, IntegratorSettings{});
    const OrbitBoxes& ref = sys.reference_orbits.at(n);
    DVec<2> seed{ref[0][0].mid(), ref[0][1].mid()};

    Certificate c;
    c.id = id;
    c.claim = "the first-return map to the half-plane x = 0, y < 0 of the flow with a = " +
              fmt(sys.a.mid()) + " has an orbit of fundamental period " + std::to_string(n);
    CertDoc d = begin_evidence(id, c.claim, sys.field, sys.a, sys.b, st);
    SectionPoincareMap map(sys.field, st);
    try {
      StationaryOrbit so = any_stationary_point(seed, n, map);
      orbit_block(d, so);
      bool unique = so.certificate.verdict == NewtonVerdict::UniqueFixedPoint;
      bool disjoint_boxes = true;
      for (size_t i = 0; i < so.orbit.size(); ++i)
        for (size_t j = i + 1; j < so.orbit.size(); ++j)
          if (!disjoint(so.orbit[i], so.orbit[j])) disjoint_boxes = false;
      IVec2 back = map.image(so.orbit.back(), 1);
      bool closes = !disjoint(back, so.orbit.front());
      d.kv("successor-boxes", "each box encloses the return-map image of the previous one");
      d.kv("pairwise-disjoint", disjoint_boxes);
      d.kv("closing-return", to_string(back));
      d.kv("closing-return-meets-start", closes);
      if (n > 1 && disjoint_boxes)
        d.line("the " + std::to_string(n) +
               " returns of the stationary point of the iterated map sit in pairwise "
               "disjoint boxes, so no smaller period can occur");
      c.proved = unique && disjoint_boxes && closes;
      if (!unique)
        c.failing_stage = "newton";
      else if (!disjoint_boxes)
        c.failing_stage = "orbit-disjointness";
      else if (!closes)
        c.failing_stage = "orbit-closure";
    } catch (const IntervalError& e) {
      d.kv("error", e.what());
      c.proved = false;
      c.failing_stage = "newton-refinement";
    }
    d.kv("proved", c.proved);
    c.evidence = d.str();
    return c;
  });
}

// -------- covering cases --------

inline void ensure_edges(const SystemData& sys, const PeriodLoopSpec& spec,
                         const IntegratorSettings& st, EdgeCache& cache, int jobs) {
  for (const LoopEdgeSpec& es : spec.edges) {
    std::string key = edge_key(es.source->name, es.target->name, es.k);
    if (cache.count(key)) continue;
    cache.emplace(key, covers(sys.field, *es.source, *es.target, es.k, st,
                              sys.grids_for(key), jobs));
  }
}

// The three base relations every loop of the pattern is assembled from.
inline std::vector<LoopEdgeSpec> chain_edges(const SystemData& sys) {
  return {{&sys.inner, &sys.main, 1},
          {&sys.main, &sys.main, 1},
          {&sys.main, &sys.inner, sys.closing_k}};
}

inline Certificate chain_case(const SystemData& sys, const std::string& id,
                              const RunOptions& opt) {
  return timed([&] {
    IntegratorSettings st = apply(opt, IntegratorSettings{});
    EdgeCache local;
    EdgeCache& cache = opt.cache ? *opt.cache : local;

    std::string k3 = sys.closing_k == 1 ? "" : "=" + std::to_string(sys.closing_k) + "=";
    Certificate c;
    c.id = id;
    c.claim = "the covering chain " + sys.inner.name + " => " + sys.main.name + " => " +
              sys.main.name + " " + (k3.empty() ? "=>" : k3 + ">") + " " + sys.inner.name +
              " holds for the chart first-return map at a = " + fmt(sys.a.mid());
    CertDoc d = begin_evidence(id, c.claim, sys.field, sys.a, sys.b, st);
    hset_block(d, sys.inner);
    hset_block(d, sys.main);

    PeriodLoopSpec spec;
    spec.edges = chain_edges(sys);
    try {
      for (const LoopEdgeSpec& es : spec.edges) {
        std::string key = edge_key(es.source->name, es.target->name, es.k);
        if (!cache.count(key))
          cache.emplace(key, covers(sys.field, *es.source, *es.target, es.k, st,
                                    sys.grids_for(key), jobs_of(opt)));
        edge_block(d, cache.at(key));
      }
      std::vector<CoveringEdge> edges;
      for (const LoopEdgeSpec& es : spec.edges)
        edges.push_back(cache.at(edge_key(es.source->name, es.target->name, es.k)));
      d.open("graph");
      std::string dot = dump_dot(edges);
      size_t pos = 0;
      while (pos < dot.size()) {
        size_t nl = dot.find('\n', pos);
        d.line(dot.substr(pos, nl - pos));
        pos = nl + 1;
      }
      d.close();
      d.line("loops through these relations realize every period the pattern admits;");
      d.line("each loop is shadowed by a genuine periodic orbit of the return map");
      c.proved = true;
    } catch (const CoveringFailure& e) {
      d.kv("error", e.what());
      d.kv("failing-box", to_string(e.box));
      d.kv("failing-image", to_string(e.image));
      c.proved = false;
      c.failing_stage = "covering";
    } catch (const IntervalError& e) {
      d.kv("error", e.what());
      c.proved = false;
      c.failing_stage = "covering";
    }
    d.kv("proved", c.proved);
    c.evidence = d.str();
    return c;
  });
}

inline Certificate loop_case(const SystemData& sys, int n, const std::string& id,
                             const RunOptions& opt) {
  return timed([&] {
    IntegratorSettings st = apply(opt, IntegratorSettings{});
    EdgeCache local;
    EdgeCache& cache = opt.cache ? *opt.cache : local;

    Certificate c;
    c.id = id;
    c.claim = "the first-return map at a = " + fmt(sys.a.mid()) +
              " has an orbit of fundamental period " + std::to_string(n) +
              " shadowing a loop of covering relations";
    CertDoc d = begin_evidence(id, c.claim, sys.field, sys.a, sys.b, st);
    hset_block(d, sys.inner);
    hset_block(d, sys.main);
    try {
      PeriodLoopSpec spec = build_period_loop(sys.pattern(), n);
      ensure_edges(sys, spec, st, cache, jobs_of(opt));
      PeriodProof proof = verify_period_loop(sys.field, spec, st, sys.default_grids,
                                             jobs_of(opt), &cache);
      loop_block(d, proof);
      std::vector<std::string> seen;
      for (const CoveringEdge& e : proof.edges) {
        std::string key = edge_key(e.source, e.target, e.k);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        edge_block(d, e);
      }
      d.line("a closed loop of covering relations is shadowed by a periodic point of");
      d.line("the same length; the divisor witnesses above pin its fundamental period");
      c.proved = true;
    } catch (const PeriodNotConstructible& e) {
      d.kv("error", e.what());
      c.proved = false;
      c.failing_stage = "loop-construction";
    } catch (const CoveringFailure& e) {
      d.kv("error", e.what());
      d.kv("failing-box", to_string(e.box));
      d.kv("failing-image", to_string(e.image));
      c.proved = false;
      c.failing_stage = "covering";
    } catch (const IntervalError& e) {
      d.kv("error", e.what());
      c.proved = false;
      c.failing_stage = "covering";
    }
    d.kv("proved", c.proved);
    c.evidence = d.str();
    return c;
  });
}

// -------- trapping-region cases (a47) --------

inline Certificate invariance_case(const SystemData& sys, const std::string& id,
                                   const RunOptions& opt) {
  return timed([&] {
    IntegratorSettings st = apply(opt, scan_settings());
    const HSet& trap = *sys.trap;
    GridSpec grid = opt.grid.value_or(GridSpec{200, 4});

    Certificate c;
    c.id = id;
    c.claim = "the parallelogram region A maps strictly into its own interior under the "
              "first-return map at a = " + fmt(sys.a.mid());
    CertDoc d = begin_evidence(id, c.claim, sys.field, sys.a, sys.b, st);
    SectionPoincareMap map(sys.field, st, trap.chart);
    try {
      InvarianceReport rep = inside(trap, grid, map, 1, jobs_of(opt));
      invariance_block(d, rep);
      c.proved = rep.invariant;
      if (!c.proved) c.failing_stage = "invariance";
    } catch (const IntervalError& e) {
      d.kv("error", e.what());
      c.proved = false;
      c.failing_stage = "invariance";
    }
    d.kv("proved", c.proved);
    c.evidence = d.str();
    return c;
  });
}

inline Certificate exclusion_case(const SystemData& sys, const std::string& id,
                                  const RunOptions& opt) {
  return timed([&] {
    IntegratorSettings st = apply(opt, scan_settings());
    const HSet& trap = *sys.trap;
    ExclusionSettings cfg;
    if (opt.grid) cfg.scan_grid = *opt.grid;

    Certificate c;
    c.id = id;
    c.claim = "the first-return map at a = " + fmt(sys.a.mid()) +
              " has no point of fundamental period 3 in the forward-invariant region A";
    CertDoc d = begin_evidence(id, c.claim, sys.field, sys.a, sys.b, st);
    SectionPoincareMap map(sys.field, st, trap.chart);
    try {
      ExclusionReport rep = no_period_n(trap, 3, map, cfg, jobs_of(opt));
      exclusion_block(d, rep);
      c.proved = rep.verdict == ExclusionVerdict::Excluded;
      c.failing_stage = rep.failing_stage;
    } catch (const IntervalError& e) {
      d.kv("error", e.what());
      c.proved = false;
      c.failing_stage = "exclusion";
    }
    d.kv("proved", c.proved);
    c.evidence = d.str();
    return c;
  });
}

}  // namespace detail

// -------- entry points --------

inline Certificate run_case(const std::string& system, int number,
                            const RunOptions& opt = {}) {
  const SystemData& sys = get_system(system);
  if (number < 1 || number > sys.case_count)
    throw UsageError(system + " has cases 1.." + std::to_string(sys.case_count) + ", not " +
                     std::to_string(number));
  std::string id = system + "/" + std::to_string(number);
  if (system == "a525") {
    if (number == 1) return detail::orbit_case(sys, 3, id, opt);
    return detail::chain_case(sys, id, opt);
  }
  switch (number) {
    case 1: return detail::orbit_case(sys, 5, id, opt);
    case 2: return detail::chain_case(sys, id, opt);
    case 3: return detail::orbit_case(sys, 2, id, opt);
    case 4: return detail::orbit_case(sys, 4, id, opt);
    case 5: return detail::invariance_case(sys, id, opt);
    default: return detail::exclusion_case(sys, id, opt);
  }
}

inline Certificate prove_period(const std::string& system, int n,
                                const RunOptions& opt = {}) {
  const SystemData& sys = get_system(system);
  if (n < 1) throw UsageError("period must be a positive integer");
  std::string id = system + "/period-" + std::to_string(n);
  if (system == "a47") {
    if (n == 3) return detail::exclusion_case(sys, id, opt);
    if (n == 2 || n == 4) return detail::orbit_case(sys, n, id, opt);
  }
  return detail::loop_case(sys, n, id, opt);
}

inline std::vector<Certificate> prove_all(const RunOptions& opt = {}) {
  std::vector<Certificate> out;
  RunOptions o = opt;
  EdgeCache shared;
  if (!o.cache) o.cache = &shared;
  for (const char* system : {"a525", "a47"}) {
    const SystemData& sys = get_system(system);
    for (int i = 1; i <= sys.case_count; ++i) out.push_back(run_case(system, i, o));
  }
  return out;
}

}  // namespace rigor
