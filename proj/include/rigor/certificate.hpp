#pragma once

// Plain-text certificates: one structured document per proved (or failed)
// claim, with every enclosure, setting, and sub-report spelled out in a
// fixed key order.  Everything below the "evidence:" line is a pure
// function of the inputs and settings, so re-running a case must reproduce
// it byte for byte; the volatile header (timestamp, duration) stays above
// that line.

#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <string>

#include "rigor/covering.hpp"
#include "rigor/newton.hpp"
#include "rigor/polyfield.hpp"

namespace rigor {

constexpr const char* kToolName = "prove";
constexpr const char* kToolVersion = "1.0.0";
constexpr int kCertificateFormat = 1;

inline std::string fmt(double x) { return detail::shortest_repr(x); }

// Indented key/value writer.  Keys go out in the order the caller emits
// them; there is no sorting and no escaping, values must be single-line.
class CertDoc {
 public:
  explicit CertDoc(int indent = 0) : indent_(indent) {}

  void line(const std::string& s) {
    out_.append(2 * indent_, ' ');
    out_ += s;
    out_ += '\n';
  }
  void kv(const std::string& k, const std::string& v) { line(k + ": " + v); }
  void kv(const std::string& k, const char* v) { kv(k, std::string(v)); }
  void kv(const std::string& k, double v) { kv(k, fmt(v)); }
  void kv(const std::string& k, int v) { kv(k, std::to_string(v)); }
  void kv(const std::string& k, long v) { kv(k, std::to_string(v)); }
  void kv(const std::string& k, bool v) { kv(k, v ? "true" : "false"); }
  void kv(const std::string& k, const Interval& v) { kv(k, to_string(v)); }
  void kv(const std::string& k, const IVec2& v) { kv(k, to_string(v)); }
  void kv(const std::string& k, const IMat2& v) { kv(k, to_string(v)); }
  void open(const std::string& k) {
    line(k + ":");
    ++indent_;
  }
  void close() { --indent_; }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  int indent_ = 0;
};

// -------- block serializers --------

template <int N>
void field_block(CertDoc& d, const PolyField<N>& f) {
  static const char* const vars = "xyzw";
  d.open("field");
  d.kv("name", f.name);
  for (int i = 0; i < N; ++i) {
    std::string rhs;
    for (const Monomial<N>& m : f.comp[i]) {
      if (!rhs.empty()) rhs += " + ";
      rhs += to_string(m.coef);
      for (int v = 0; v < N; ++v)
        for (int e = 0; e < m.exp[v]; ++e) rhs += std::string(" ") + vars[v];
    }
    d.kv(std::string(1, vars[i]) + "'", rhs);
  }
  d.close();
}

inline void settings_block(CertDoc& d, const IntegratorSettings& st) {
  d.open("settings");
  d.kv("order", st.order);
  d.kv("tolerance", st.tolerance);
  d.kv("initial-step", st.initial_step);
  d.kv("min-step", st.min_step);
  d.kv("max-step", st.max_step);
  d.kv("inflation", st.inflation);
  d.kv("max-picard", st.max_picard);
  d.kv("growth-limit", st.growth_limit);
  d.kv("qr-condition-threshold", st.qr_condition_threshold);
  d.kv("representation", to_string(st.representation));
  d.kv("rounding", "one-ulp outward widening of round-to-nearest results");
  d.close();
}

inline void chart_block(CertDoc& d, const std::string& key, const AffineChart& c) {
  d.open(key);
  d.kv("M", c.M);
  d.kv("p", c.p);
  d.close();
}

inline void hset_block(CertDoc& d, const HSet& h) {
  d.open("h-set " + h.name);
  chart_block(d, "chart", h.chart);
  d.kv("base", h.base);
  d.kv("half-height", h.r);
  d.close();
}

inline void newton_block(CertDoc& d, const std::string& key, const NewtonResult& r) {
  d.open(key);
  d.kv("x0", r.x0);
  d.kv("search-box", r.X);
  d.kv("iterate", r.n);
  if (r.N) d.kv("operator-output", *r.N);
  d.kv("verdict", to_string(r.verdict));
  d.kv("refined", r.refined);
  if (!r.note.empty()) d.kv("note", r.note);
  d.close();
}

inline void orbit_block(CertDoc& d, const StationaryOrbit& so) {
  newton_block(d, "newton", so.certificate);
  d.kv("refinement-rounds", so.rounds);
  d.open("orbit");
  for (size_t i = 0; i < so.orbit.size(); ++i) {
    d.kv("p" + std::to_string(i + 1), so.orbit[i]);
    d.kv("p" + std::to_string(i + 1) + "-compressed",
         to_string_compressed(so.orbit[i][0]) + ", " + to_string_compressed(so.orbit[i][1]));
  }
  d.close();
}

inline void region_block(CertDoc& d, const std::string& key, const RegionStats& st) {
  d.open(key);
  d.kv("pieces", st.pieces);
  d.kv("max-split-depth", st.depth);
  d.kv("image-hull", st.image_hull);
  d.kv("margin", st.margin);
  d.open("leaves");
  for (const CoveringLeaf& l : st.leaves) {
    const char* clause = l.branch < 0 ? "left-strip" : l.branch > 0 ? "right-strip" : "band";
    d.line(to_string(l.box) + " -> " + to_string(l.image) + " : " + clause);
  }
  d.close();
  d.close();
}

inline void edge_block(CertDoc& d, const CoveringEdge& e) {
  d.open("covering " + e.source + " =" + std::to_string(e.k) + "=> " + e.target);
  d.kv("orientation-preserving", e.orientation_preserving);
  d.kv("grid", std::to_string(e.grids.body_n1) + "x" + std::to_string(e.grids.body_n2) +
                   " body, " + std::to_string(e.grids.edge_n) + " per edge, depth cap " +
                   std::to_string(e.grids.max_depth));
  region_block(d, "body", e.body);
  region_block(d, "left-edge", e.left);
  region_block(d, "right-edge", e.right);
  d.close();
}

inline void loop_block(CertDoc& d, const PeriodProof& proof) {
  d.open("loop");
  d.kv("period", proof.spec.period);
  std::string chain;
  for (const LoopEdgeSpec& s : proof.spec.edges) {
    if (!chain.empty()) chain += ", ";
    chain += s.source->name + " =" + std::to_string(s.k) + "=> " + s.target->name;
  }
  d.kv("edges", chain);
  std::string itin;
  for (const HSet* h : proof.spec.itinerary) {
    if (!itin.empty()) itin += ", ";
    itin += h ? h->name : "*";
  }
  d.kv("itinerary", itin);
  d.open("fundamental-period");
  if (proof.fundamental.witnesses.empty()) {
    d.line("period 1 needs no divisor argument");
  } else {
    for (auto& [div, pos] : proof.fundamental.witnesses)
      d.line("divisor " + std::to_string(div) + " fails: returns " + std::to_string(pos) +
             " and " + std::to_string((pos + div) % proof.spec.period) +
             " sit in disjoint h-sets");
  }
  d.close();
  d.close();
}

inline void invariance_block(CertDoc& d, const InvarianceReport& rep) {
  d.open("invariance");
  hset_block(d, rep.region);
  d.kv("grid", std::to_string(rep.grid.n1) + "x" + std::to_string(rep.grid.n2));
  d.kv("iterate", rep.iterate);
  d.kv("cells", rep.cells);
  d.kv("cells-strictly-inside", rep.ok);
  d.kv("cells-offending", rep.offending_count);
  for (const CellIssue& c : rep.offending) {
    d.line("offending " + to_string(c.cell) +
           (c.image ? " image " + to_string(*c.image) : "") + " : " + c.note);
  }
  if (rep.ok > 0) d.kv("image-hull", rep.image_hull);
  if (rep.invariant) d.kv("margin", rep.margin);
  d.kv("invariant", rep.invariant);
  d.close();
}

inline void scan_block(CertDoc& d, const ExclusionScan& scan) {
  d.open("fixed-point-scan");
  d.kv("iterate", scan.n);
  d.kv("grid", std::to_string(scan.grid.n1) + "x" + std::to_string(scan.grid.n2));
  d.kv("cells", scan.cells);
  d.kv("cells-retained", scan.retained);
  if (scan.refined_cells > 0) {
    d.kv("refine-grid", std::to_string(scan.refine.n1) + "x" + std::to_string(scan.refine.n2));
    d.kv("refined-cells", scan.refined_cells);
    d.kv("refined-cells-retained", scan.refined_retained);
  }
  d.kv("enclosure-failures", scan.errors);
  if (scan.final_retained() > 0) {
    d.kv("S-chart", scan.S_chart);
    d.kv("S-section", scan.S_section);
    d.open("retained-boxes");
    for (const IVec2& b : scan.retained_boxes) d.line(to_string(b));
    if (scan.final_retained() > long(scan.retained_boxes.size()))
      d.line("... " + std::to_string(scan.final_retained() - long(scan.retained_boxes.size())) +
             " more");
    d.close();
  }
  d.close();
}

inline void exclusion_block(CertDoc& d, const ExclusionReport& rep) {
  d.open("exclusion");
  d.kv("period", rep.n);
  d.line("argument: the region maps strictly into itself, every fixed point of the");
  d.line("iterated map inside it lies in S, and the unique such fixed point coincides");
  d.line("with the unique fixed point of the single-return map, which has period 1");
  invariance_block(d, rep.invariance);
  scan_block(d, rep.scan);
  if (rep.unique_pn) newton_block(d, "uniqueness-for-iterate", *rep.unique_pn);
  if (rep.unique_p) newton_block(d, "uniqueness-for-base", *rep.unique_p);
  d.kv("verdict", rep.verdict == ExclusionVerdict::Excluded ? "excluded" : "unproven");
  if (!rep.failing_stage.empty()) d.kv("failing-stage", rep.failing_stage);
  d.close();
}

// -------- assembled certificate --------

struct Certificate {
  std::string id;     // "a525/1", "a47/period-7", ...
  std::string claim;  // one sentence
  bool proved = false;
  std::string failing_stage;
  std::string evidence;  // fully indented block content
  double duration_seconds = 0;

  std::string text() const {
    CertDoc d;
    d.kv("certificate-format", kCertificateFormat);
    d.kv("tool", std::string(kToolName) + " " + kToolVersion);
    d.kv("generated", utc_now());
    d.kv("duration-seconds", duration_seconds);
    d.line("evidence:");
    std::string out = d.str();
    out += evidence;
    return out;
  }

  static std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }
};

// Everything after the volatile header; the byte-comparable part.
inline std::string evidence_section(const std::string& cert_text) {
  const std::string key = "\nevidence:\n";
  auto pos = cert_text.find(key);
  if (pos == std::string::npos) throw std::runtime_error("certificate has no evidence section");
  return cert_text.substr(pos + key.size());
}

inline void write_certificate(const std::string& path, const Certificate& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write certificate file " + path);
  out << c.text();
}

// Shared head of every evidence block: case id, claim, system, settings.
// Content sits one indent level under the "evidence:" header line.
template <int N>
CertDoc begin_evidence(const std::string& id, const std::string& claim,
                       const PolyField<N>& f, const Interval& a, const Interval& b,
                       const IntegratorSettings& st) {
  CertDoc d(1);
  d.kv("case", id);
  d.kv("claim", claim);
  d.open("system");
  d.kv("a", a);
  d.kv("b", b);
  field_block(d, f);
  d.close();
  settings_block(d, st);
  return d;
}

}  // namespace rigor
