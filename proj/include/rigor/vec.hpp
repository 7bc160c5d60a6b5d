#pragma once

// Small fixed-dimension interval vectors and matrices (dimensions 1..3 in
// practice), plus the rigorous linear algebra the enclosure machinery needs:
// 2x2 adjugate inverse, interval Gauss inverse, approximate QR and condition
// estimates on the midpoint matrices, and box subdivision.

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "rigor/interval.hpp"

namespace rigor {

struct SingularEnclosure : IntervalError {
  SingularEnclosure() : IntervalError("matrix enclosure contains a singular matrix") {}
};

template <int N>
using DVec = std::array<double, N>;

template <int N>
struct IVec {
  std::array<Interval, N> c{};

  Interval& operator[](int i) { return c[i]; }
  const Interval& operator[](int i) const { return c[i]; }

  static constexpr int dim() { return N; }

  DVec<N> mid() const {
    DVec<N> m;
    for (int i = 0; i < N; ++i) m[i] = c[i].mid();
    return m;
  }

  double max_width() const {
    double w = 0;
    for (int i = 0; i < N; ++i) w = std::max(w, c[i].width());
    return w;
  }

  double mag() const {
    double m = 0;
    for (int i = 0; i < N; ++i) m = std::max(m, c[i].mag());
    return m;
  }

  bool contains(const IVec& o) const {
    for (int i = 0; i < N; ++i)
      if (!c[i].contains(o.c[i])) return false;
    return true;
  }

  bool contains_in_interior(const IVec& o) const {
    for (int i = 0; i < N; ++i)
      if (!c[i].contains_in_interior(o.c[i])) return false;
    return true;
  }

  friend IVec operator+(const IVec& a, const IVec& b) {
    IVec r;
    for (int i = 0; i < N; ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
  }

  friend IVec operator-(const IVec& a, const IVec& b) {
    IVec r;
    for (int i = 0; i < N; ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
  }

  friend IVec operator*(const Interval& s, const IVec& a) {
    IVec r;
    for (int i = 0; i < N; ++i) r.c[i] = s * a.c[i];
    return r;
  }
};

template <std::size_t N>
IVec<static_cast<int>(N)> to_ivec(const std::array<double, N>& p) {
  IVec<static_cast<int>(N)> r;
  for (int i = 0; i < static_cast<int>(N); ++i) r[i] = Interval(p[i]);
  return r;
}

template <int N>
IVec<N> hull(const IVec<N>& a, const IVec<N>& b) {
  IVec<N> r;
  for (int i = 0; i < N; ++i) r[i] = hull(a[i], b[i]);
  return r;
}

template <int N>
std::optional<IVec<N>> intersect(const IVec<N>& a, const IVec<N>& b) {
  IVec<N> r;
  for (int i = 0; i < N; ++i) {
    auto s = intersect(a[i], b[i]);
    if (!s) return std::nullopt;
    r[i] = *s;
  }
  return r;
}

template <int N>
bool disjoint(const IVec<N>& a, const IVec<N>& b) {
  for (int i = 0; i < N; ++i)
    if (disjoint(a[i], b[i])) return true;
  return false;
}

template <int R, int C>
struct DMat {
  std::array<double, R * C> e{};

  double& operator()(int i, int j) { return e[i * C + j]; }
  double operator()(int i, int j) const { return e[i * C + j]; }

  static DMat identity() {
    static_assert(R == C);
    DMat m;
    for (int i = 0; i < R; ++i) m(i, i) = 1.0;
    return m;
  }
};

template <int R, int C>
struct IMat {
  std::array<Interval, R * C> e{};

  Interval& operator()(int i, int j) { return e[i * C + j]; }
  const Interval& operator()(int i, int j) const { return e[i * C + j]; }

  static IMat identity() {
    static_assert(R == C);
    IMat m;
    for (int i = 0; i < R; ++i) m(i, i) = Interval(1.0);
    return m;
  }

  DMat<R, C> mid() const {
    DMat<R, C> m;
    for (int i = 0; i < R * C; ++i) m.e[i] = e[i].mid();
    return m;
  }

  double max_width() const {
    double w = 0;
    for (auto& x : e) w = std::max(w, x.width());
    return w;
  }

  friend IMat operator+(const IMat& a, const IMat& b) {
    IMat r;
    for (int i = 0; i < R * C; ++i) r.e[i] = a.e[i] + b.e[i];
    return r;
  }

  friend IMat operator-(const IMat& a, const IMat& b) {
    IMat r;
    for (int i = 0; i < R * C; ++i) r.e[i] = a.e[i] - b.e[i];
    return r;
  }
};

template <int R, int C>
IMat<R, C> to_imat(const DMat<R, C>& m) {
  IMat<R, C> r;
  for (int i = 0; i < R * C; ++i) r.e[i] = Interval(m.e[i]);
  return r;
}

template <int R, int C>
IMat<R, C> hull(const IMat<R, C>& a, const IMat<R, C>& b) {
  IMat<R, C> r;
  for (int i = 0; i < R * C; ++i) r.e[i] = hull(a.e[i], b.e[i]);
  return r;
}

template <int R, int K, int C>
IMat<R, C> operator*(const IMat<R, K>& a, const IMat<K, C>& b) {
  IMat<R, C> r;
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) {
      Interval s = a(i, 0) * b(0, j);
      for (int k = 1; k < K; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

template <int R, int C>
IVec<R> operator*(const IMat<R, C>& a, const IVec<C>& v) {
  IVec<R> r;
  for (int i = 0; i < R; ++i) {
    Interval s = a(i, 0) * v[0];
    for (int k = 1; k < C; ++k) s += a(i, k) * v[k];
    r[i] = s;
  }
  return r;
}

template <int R, int K, int C>
DMat<R, C> operator*(const DMat<R, K>& a, const DMat<K, C>& b) {
  DMat<R, C> r;
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) {
      double s = 0;
      for (int k = 0; k < K; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

using IVec1 = IVec<1>;
using IVec2 = IVec<2>;
using IVec3 = IVec<3>;
using IMat2 = IMat<2, 2>;
using IMat3 = IMat<3, 3>;

// Adjugate inverse; throws SingularEnclosure when the determinant enclosure
// contains zero.
inline IMat2 invert2x2(const IMat2& m) {
  Interval det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (det.contains(0.0)) throw SingularEnclosure();
  IMat2 r;
  r(0, 0) = m(1, 1) / det;
  r(0, 1) = -m(0, 1) / det;
  r(1, 0) = -m(1, 0) / det;
  r(1, 1) = m(0, 0) / det;
  return r;
}

// Interval Gauss-Jordan inverse with midpoint-magnitude pivoting.  Every
// pivot interval must exclude zero; otherwise the enclosure is inconclusive
// and SingularEnclosure is thrown.
template <int N>
IMat<N, N> gauss_inverse(const IMat<N, N>& m) {
  IMat<N, N> a = m;
  IMat<N, N> r = IMat<N, N>::identity();
  std::array<int, N> perm;
  for (int i = 0; i < N; ++i) perm[i] = i;
  for (int col = 0; col < N; ++col) {
    int best = col;
    double bestmag = 0;
    for (int i = col; i < N; ++i) {
      double mg = a(perm[i], col).mig();
      if (mg > bestmag) {
        bestmag = mg;
        best = i;
      }
    }
    std::swap(perm[col], perm[best]);
    int p = perm[col];
    if (a(p, col).contains(0.0)) throw SingularEnclosure();
    Interval piv = a(p, col);
    for (int j = 0; j < N; ++j) {
      a(p, j) /= piv;
      r(p, j) /= piv;
    }
    for (int i = 0; i < N; ++i) {
      int q = perm[i];
      if (q == p) continue;
      Interval f = a(q, col);
      for (int j = 0; j < N; ++j) {
        a(q, j) -= f * a(p, j);
        r(q, j) -= f * r(p, j);
      }
    }
  }
  IMat<N, N> out;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) out(i, j) = r(perm[i], j);
  return out;
}

namespace detail {

template <int N>
bool approx_inverse(const DMat<N, N>& m, DMat<N, N>& inv) {
  std::array<std::array<double, 2 * N>, N> w{};
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) w[i][j] = m(i, j);
    w[i][N + i] = 1.0;
  }
  for (int col = 0; col < N; ++col) {
    int best = col;
    for (int i = col + 1; i < N; ++i)
      if (std::fabs(w[i][col]) > std::fabs(w[best][col])) best = i;
    if (w[best][col] == 0) return false;
    std::swap(w[col], w[best]);
    double piv = w[col][col];
    for (int j = 0; j < 2 * N; ++j) w[col][j] /= piv;
    for (int i = 0; i < N; ++i) {
      if (i == col) continue;
      double f = w[i][col];
      if (f == 0) continue;
      for (int j = 0; j < 2 * N; ++j) w[i][j] -= f * w[col][j];
    }
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) inv(i, j) = w[i][N + j];
  return true;
}

template <int N>
double norm_inf(const DMat<N, N>& m) {
  double n = 0;
  for (int i = 0; i < N; ++i) {
    double s = 0;
    for (int j = 0; j < N; ++j) s += std::fabs(m(i, j));
    n = std::max(n, s);
  }
  return n;
}

}  // namespace detail

// Infinity-norm condition estimate of the midpoint matrix; infinity when the
// approximate inversion breaks down.
template <int N>
double condition_estimate(const DMat<N, N>& m) {
  DMat<N, N> inv;
  if (!detail::approx_inverse(m, inv)) return std::numeric_limits<double>::infinity();
  return detail::norm_inf(m) * detail::norm_inf(inv);
}

// Modified Gram-Schmidt orthonormalization of the columns, longest column
// first.  Near-dependent columns fall back to coordinate axes, so the result
// is always invertible; rigor comes from inverting the result as an interval
// matrix afterwards.
template <int N>
DMat<N, N> orthonormalize(const DMat<N, N>& m) {
  std::array<std::array<double, N>, N> col;
  std::array<double, N> len{};
  std::array<int, N> ord;
  for (int j = 0; j < N; ++j) {
    ord[j] = j;
    double s = 0;
    for (int i = 0; i < N; ++i) {
      col[j][i] = m(i, j);
      s += m(i, j) * m(i, j);
    }
    len[j] = s;
  }
  std::sort(ord.begin(), ord.end(), [&](int a, int b) { return len[a] > len[b]; });
  std::array<std::array<double, N>, N> q{};
  int built = 0;
  for (int jj = 0; jj < N && built < N; ++jj) {
    auto v = col[ord[jj]];
    for (int k = 0; k < built; ++k) {
      double d = 0;
      for (int i = 0; i < N; ++i) d += q[k][i] * v[i];
      for (int i = 0; i < N; ++i) v[i] -= d * q[k][i];
    }
    double n2 = 0;
    for (int i = 0; i < N; ++i) n2 += v[i] * v[i];
    double n = std::sqrt(n2);
    if (n > 1e-150) {
      for (int i = 0; i < N; ++i) q[built][i] = v[i] / n;
      ++built;
    }
  }
  // Complete a degenerate basis with coordinate axes.
  for (int axis = 0; axis < N && built < N; ++axis) {
    std::array<double, N> v{};
    v[axis] = 1.0;
    for (int k = 0; k < built; ++k) {
      double d = 0;
      for (int i = 0; i < N; ++i) d += q[k][i] * v[i];
      for (int i = 0; i < N; ++i) v[i] -= d * q[k][i];
    }
    double n2 = 0;
    for (int i = 0; i < N; ++i) n2 += v[i] * v[i];
    double n = std::sqrt(n2);
    if (n > 1e-8) {
      for (int i = 0; i < N; ++i) q[built][i] = v[i] / n;
      ++built;
    }
  }
  DMat<N, N> r;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) r(i, j) = q[j][i];
  return r;
}

// Splits a box into counts[0] x ... x counts[N-1] sub-boxes on a monotone
// grid whose union is exactly the input (adjacent pieces share endpoints).
template <int N>
std::vector<IVec<N>> subdivide(const IVec<N>& box, const std::array<int, N>& counts) {
  std::array<std::vector<double>, N> cuts;
  for (int d = 0; d < N; ++d) {
    int k = std::max(1, counts[d]);
    cuts[d].resize(k + 1);
    double lo = box[d].lo(), hi = box[d].hi();
    cuts[d][0] = lo;
    cuts[d][k] = hi;
    for (int i = 1; i < k; ++i) {
      double t = lo + (hi - lo) * (double(i) / k);
      t = std::min(std::max(t, lo), hi);
      if (t < cuts[d][i - 1]) t = cuts[d][i - 1];
      cuts[d][i] = t;
    }
  }
  std::vector<IVec<N>> out;
  std::array<int, N> idx{};
  size_t total = 1;
  for (int d = 0; d < N; ++d) total *= std::max(1, counts[d]);
  out.reserve(total);
  for (size_t n = 0; n < total; ++n) {
    IVec<N> piece;
    size_t rest = n;
    for (int d = N - 1; d >= 0; --d) {
      int k = std::max(1, counts[d]);
      idx[d] = int(rest % k);
      rest /= k;
    }
    for (int d = 0; d < N; ++d) piece[d] = Interval(cuts[d][idx[d]], cuts[d][idx[d] + 1]);
    out.push_back(piece);
  }
  return out;
}

template <int N>
std::string to_string(const IVec<N>& v) {
  std::string s = "(";
  for (int i = 0; i < N; ++i) {
    if (i) s += ", ";
    s += to_string(v[i]);
  }
  s += ")";
  return s;
}

template <int R, int C>
std::string to_string(const IMat<R, C>& m) {
  std::string s = "[";
  for (int i = 0; i < R; ++i) {
    if (i) s += "; ";
    for (int j = 0; j < C; ++j) {
      if (j) s += ", ";
      s += to_string(m(i, j));
    }
  }
  s += "]";
  return s;
}

}  // namespace rigor
