#pragma once

// Non-validated exploration of the same flow, for figure data only: a plain
// double-precision fixed-step Taylor integrator with section-crossing
// detection, and scans that emit CSV rows.  Nothing here carries rigor; the
// proof modules never depend on this header.

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace rigor {

struct ExploreSettings {
  double b = 0.2;
  int order = 10;      // Taylor order per step
  double step = 5e-3;  // fixed step size
  int transient = 200; // returns discarded before sampling
  int samples = 100;   // returns recorded per parameter
  double blowup = 1e6;
  double max_time_per_return = 50;
};

// Double-precision Taylor stepper for x' = -y-z, y' = by+x, z' = z(x-a)+b
// with detection of section crossings (x = 0, x increasing, y < 0).
class FastRossler {
 public:
  FastRossler(double a, const ExploreSettings& s) : a_(a), s_(s) {
    int n = s.order + 1;
    cx_.resize(size_t(n));
    cy_.resize(size_t(n));
    cz_.resize(size_t(n));
  }

  void set_state(double x, double y, double z) { x_ = x; y_ = y; z_ = z; }
  std::array<double, 3> state() const { return {x_, y_, z_}; }

  // Advance to the next section crossing; empty when the trajectory blows up
  // or fails to return within the time budget.
  std::optional<std::array<double, 2>> next_return() {
    double elapsed = 0;
    while (elapsed < s_.max_time_per_return) {
      double x_prev = x_;
      expand();
      advance(s_.step);
      elapsed += s_.step;
      if (std::abs(x_) + std::abs(y_) + std::abs(z_) > s_.blowup) return std::nullopt;
      if (x_prev < 0 && x_ >= 0) {
        double t = crossing_time();
        double yc = eval(cy_, t);
        if (yc < 0) return std::array<double, 2>{yc, eval(cz_, t)};
      }
    }
    return std::nullopt;
  }

 private:
  // Taylor coefficients at the current point, from the field's recurrences.
  void expand() {
    int n = s_.order;
    cx_[0] = x_;
    cy_[0] = y_;
    cz_[0] = z_;
    for (int k = 0; k < n; ++k) {
      double conv = 0;
      for (int i = 0; i <= k; ++i) conv += cx_[size_t(i)] * cz_[size_t(k - i)];
      cx_[size_t(k + 1)] = (-cy_[size_t(k)] - cz_[size_t(k)]) / (k + 1);
      cy_[size_t(k + 1)] = (s_.b * cy_[size_t(k)] + cx_[size_t(k)]) / (k + 1);
      cz_[size_t(k + 1)] = (conv - a_ * cz_[size_t(k)] + (k == 0 ? s_.b : 0)) / (k + 1);
    }
  }

  double eval(const std::vector<double>& c, double t) const {
    double v = c[size_t(s_.order)];
    for (int k = s_.order - 1; k >= 0; --k) v = v * t + c[size_t(k)];
    return v;
  }

  void advance(double h) {
    x_ = eval(cx_, h);
    y_ = eval(cy_, h);
    z_ = eval(cz_, h);
  }

  // Bisect x(t) = 0 on the last step's series; the crossing is transversal
  // (x' = -y-z is of order 6 there), so bisection converges cleanly.
  double crossing_time() const {
    double lo = 0, hi = s_.step;
    for (int i = 0; i < 60; ++i) {
      double m = 0.5 * (lo + hi);
      (eval(cx_, m) < 0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
  }

  double a_;
  ExploreSettings s_;
  double x_ = 0, y_ = -6, z_ = 0.03;
  std::vector<double> cx_, cy_, cz_;
};

using CsvRows = std::vector<std::array<double, 2>>;

namespace detail {

// Post-transient section returns at one parameter; empty on non-convergence.
inline std::vector<std::array<double, 2>> section_samples(double a, int count,
                                                          const ExploreSettings& s) {
  FastRossler f(a, s);
  for (int i = 0; i < s.transient; ++i)
    if (!f.next_return()) return {};
  std::vector<std::array<double, 2>> out;
  out.reserve(size_t(count));
  for (int i = 0; i < count; ++i) {
    auto r = f.next_return();
    if (!r) return {};
    out.push_back(*r);
  }
  return out;
}

}  // namespace detail

// (a, y) rows over a parameter grid; non-returning parameters are skipped
// with a warning on `warn`.
inline CsvRows bifurcation_scan(double a_lo, double a_hi, int steps,
                                const ExploreSettings& s = {},
                                std::ostream* warn = nullptr) {
  CsvRows rows;
  for (int i = 0; i < steps; ++i) {
    double a = steps == 1 ? a_lo : a_lo + (a_hi - a_lo) * i / (steps - 1);
    auto pts = detail::section_samples(a, s.samples, s);
    if (pts.empty()) {
      if (warn) *warn << "explore: a=" << a << ": no section return, parameter skipped\n";
      continue;
    }
    for (auto& p : pts) rows.push_back({a, p[0]});
  }
  return rows;
}

// (y, z) rows of post-transient section points at one parameter.
inline CsvRows attractor_scan(double a, const ExploreSettings& s = {},
                              std::ostream* warn = nullptr) {
  auto pts = detail::section_samples(a, s.samples, s);
  if (pts.empty() && warn)
    *warn << "explore: a=" << a << ": no section return, nothing emitted\n";
  return pts;
}

// (y, y-next) rows: the section return map projected to the y coordinate.
inline CsvRows model_map_scan(double a, const ExploreSettings& s = {},
                              std::ostream* warn = nullptr) {
  auto pts = detail::section_samples(a, s.samples + 1, s);
  if (pts.empty()) {
    if (warn) *warn << "explore: a=" << a << ": no section return, nothing emitted\n";
    return {};
  }
  CsvRows rows;
  for (size_t i = 0; i + 1 < pts.size(); ++i) rows.push_back({pts[i][0], pts[i + 1][0]});
  return rows;
}

inline void write_csv(std::ostream& out, const std::string& header, const CsvRows& rows) {
  out << header << "\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r[0], r[1]);
    out << buf;
  }
}

}  // namespace rigor
