#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace udset {

// Ambient dimension is a runtime parameter but stays small; a fixed-capacity
// point avoids heap traffic in the distance kernels.
inline constexpr int kMaxDim = 8;

// Absolute slack, in distance units, for closed-set membership. Open
// containments are tested strictly: the construction keeps factor-2
// geometric margins, so only closed boundaries need round-off protection.
inline constexpr double kBoundaryTol = 1e-12;

struct Pt {
  int dim = 0;
  std::array<double, kMaxDim> c{};

  Pt() = default;
  explicit Pt(int d) : dim(d) {
    if (d < 1 || d > kMaxDim)
      throw std::invalid_argument("Pt: dimension must be in [1, " +
                                  std::to_string(kMaxDim) + "], got " +
                                  std::to_string(d));
  }
  Pt(std::initializer_list<double> xs) : dim(static_cast<int>(xs.size())) {
    if (dim < 1 || dim > kMaxDim)
      throw std::invalid_argument("Pt: bad initializer size");
    std::copy(xs.begin(), xs.end(), c.begin());
  }

  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }

  bool operator==(const Pt& o) const {
    if (dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (c[static_cast<size_t>(i)] != o.c[static_cast<size_t>(i)]) return false;
    return true;
  }
};

inline Pt operator+(const Pt& a, const Pt& b) {
  Pt r(a.dim);
  for (int i = 0; i < a.dim; ++i) r[i] = a[i] + b[i];
  return r;
}

inline Pt operator-(const Pt& a, const Pt& b) {
  Pt r(a.dim);
  for (int i = 0; i < a.dim; ++i) r[i] = a[i] - b[i];
  return r;
}

inline Pt operator*(double s, const Pt& a) {
  Pt r(a.dim);
  for (int i = 0; i < a.dim; ++i) r[i] = s * a[i];
  return r;
}

inline double dot(const Pt& a, const Pt& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Pt& a) { return dot(a, a); }
inline double norm(const Pt& a) { return std::sqrt(norm2(a)); }
inline double dist(const Pt& a, const Pt& b) { return norm(a - b); }

// a + t*(b-a) without forming the difference twice.
inline Pt lerp(const Pt& a, const Pt& b, double t) {
  Pt r(a.dim);
  for (int i = 0; i < a.dim; ++i) r[i] = a[i] + t * (b[i] - a[i]);
  return r;
}

struct Segment {
  Pt a, b;
  double length() const { return dist(a, b); }
};

struct Ball {
  Pt center;
  double radius = 0.0;
};

// Distance from p to the closed segment [a,b]. The parameter clamp keeps the
// result exact for degenerate segments (a == b).
inline double dist_point_segment(const Pt& p, const Segment& s) {
  const Pt d = s.b - s.a;
  const double dd = norm2(d);
  if (dd == 0.0) return dist(p, s.a);
  double t = dot(p - s.a, d) / dd;
  t = std::clamp(t, 0.0, 1.0);
  return dist(p, lerp(s.a, s.b, t));
}

// Membership in the r-neighborhood of a segment. Closed neighborhoods get
// kBoundaryTol of absolute slack; open ones are strict.
inline bool in_neighborhood(const Pt& p, const Segment& s, double r,
                            bool closed) {
  const double d = dist_point_segment(p, s);
  return closed ? d <= r + kBoundaryTol : d < r;
}

// Splits a segment into equal pieces of length at most 1. Lengths within
// kBoundaryTol of an integer round down so that e.g. a length-2 segment
// yields exactly 2 pieces; degenerate segments yield one piece.
inline std::vector<Segment> subdivide_to_unit_length(const Segment& s) {
  const double len = s.length();
  int n = static_cast<int>(std::ceil(len - kBoundaryTol));
  if (n < 1) n = 1;
  std::vector<Segment> out;
  out.reserve(static_cast<size_t>(n));
  Pt prev = s.a;
  for (int i = 1; i <= n; ++i) {
    Pt next = lerp(s.a, s.b, static_cast<double>(i) / n);
    out.push_back(Segment{prev, next});
    prev = next;
  }
  return out;
}

}  // namespace udset
