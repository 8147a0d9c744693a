#pragma once

// Box-counting dimension estimates over segment families and membership
// predicates, the r-exponent ball sum, and projected interval measure.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "udset/geometry.hpp"
#include "udset/io.hpp"

namespace udset {

// Axis-aligned counting window [lo, hi]^d split into half-open cells of side
// eps; a point on a cell's lower face belongs to that cell, so a point at the
// hi face lands in one extra boundary layer (a unit segment at eps = 1/64
// meets 65 cells, not 64).
struct BoxWindow {
  double lo = -1.0, hi = 1.0;
};

namespace detail {

using CellKey = int64_t;

// cells per axis stay far below this, so three indices pack into one key
constexpr int64_t kCellStride = INT64_C(1) << 21;

inline CellKey pack_cell(const std::array<int64_t, 3>& c) {
  CellKey key = 0;
  for (int i = 0; i < 3; ++i) {
    const int64_t shifted = c[static_cast<size_t>(i)] + kCellStride / 2;
    if (shifted < 0 || shifted >= kCellStride)
      throw std::invalid_argument("box_count: cell index out of packing range");
    key = key * kCellStride + shifted;
  }
  return key;
}

inline std::array<int64_t, 3> cell_of(const Pt& p, double eps, double lo) {
  std::array<int64_t, 3> c{0, 0, 0};
  for (int i = 0; i < p.dim; ++i)
    c[static_cast<size_t>(i)] = static_cast<int64_t>(std::floor((p[i] - lo) / eps));
  return c;
}

// clip the segment's parameter range to the closed window box
inline bool clip_to_window(const Segment& s, const BoxWindow& win, double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  for (int i = 0; i < s.a.dim; ++i) {
    const double a = s.a[i], d = s.b[i] - s.a[i];
    if (d == 0.0) {
      if (a < win.lo || a > win.hi) return false;
      continue;
    }
    double enter = (win.lo - a) / d, leave = (win.hi - a) / d;
    if (enter > leave) std::swap(enter, leave);
    t0 = std::max(t0, enter);
    t1 = std::min(t1, leave);
    if (t0 > t1) return false;
  }
  return true;
}

// exact grid walk: step cells at plane crossings, stepping every axis that
// crosses at the same parameter so corner contacts stay in the upper cell
inline void collect_segment_cells(const Segment& s, double eps, const BoxWindow& win,
                                  std::unordered_set<CellKey>& out) {
  double t0 = 0.0, t1 = 1.0;
  if (!clip_to_window(s, win, t0, t1)) return;
  const Pt a = lerp(s.a, s.b, t0);
  const Pt b = lerp(s.a, s.b, t1);
  const int d = a.dim;

  auto cell = cell_of(a, eps, win.lo);
  const auto end_cell = cell_of(b, eps, win.lo);
  out.insert(pack_cell(cell));

  int64_t max_steps = d;
  for (int i = 0; i < d; ++i)
    max_steps += std::llabs(end_cell[static_cast<size_t>(i)] - cell[static_cast<size_t>(i)]);

  for (int64_t step = 0; step < max_steps; ++step) {
    // parameter of the next face crossing along each moving axis
    double t_next = 2.0;
    std::array<double, 3> t_axis{3.0, 3.0, 3.0};
    for (int i = 0; i < d; ++i) {
      const double dir = b[i] - a[i];
      if (dir == 0.0) continue;
      const double plane =
          win.lo + eps * static_cast<double>(cell[static_cast<size_t>(i)] + (dir > 0.0 ? 1 : 0));
      const double t = (plane - a[i]) / dir;
      t_axis[static_cast<size_t>(i)] = t;
      t_next = std::min(t_next, t);
    }
    if (t_next >= 1.0) break;
    // the crossing point itself belongs to the upper cell along rising axes
    // and the current cell along falling ones; on mixed-direction corner
    // contacts that owner is neither the old nor the new cell
    auto owner = cell;
    for (int i = 0; i < d; ++i)
      if (t_axis[static_cast<size_t>(i)] == t_next && (b[i] - a[i]) > 0.0)
        owner[static_cast<size_t>(i)] += 1;
    out.insert(pack_cell(owner));
    for (int i = 0; i < d; ++i)
      if (t_axis[static_cast<size_t>(i)] == t_next)
        cell[static_cast<size_t>(i)] += (b[i] - a[i]) > 0.0 ? 1 : -1;
    out.insert(pack_cell(cell));
  }
  // an endpoint on an upper face belongs to the next cell over
  out.insert(pack_cell(end_cell));
}

}  // namespace detail

inline int64_t box_count(const std::vector<Segment>& segments, double eps,
                         const BoxWindow& win = {}) {
  if (!(eps > 0.0)) throw std::invalid_argument("box_count: eps must be positive");
  if (!(win.hi > win.lo)) throw std::invalid_argument("box_count: empty window");
  std::unordered_set<detail::CellKey> cells;
  for (const auto& s : segments) {
    if (s.a.dim != s.b.dim || s.a.dim > 3)
      throw std::invalid_argument("box_count: segments must have dim <= 3");
    detail::collect_segment_cells(s, eps, win, cells);
  }
  return static_cast<int64_t>(cells.size());
}

// Sampling pattern for oracle-backed counting. Cells have no segment list to
// intersect exactly, so a cell counts when any stencil sample is a member.
// Corner samples on a shared face mark both adjacent cells; sets aligned with
// the grid therefore prefer the exact segment counter above.
enum class BoxStencil { center, center_corners };

inline int64_t box_count_oracle(int dim, const std::function<bool(const Pt&)>& inside,
                                double eps, const BoxWindow& win = {},
                                BoxStencil stencil = BoxStencil::center_corners) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("box_count_oracle: dim must be 1..3");
  if (!(eps > 0.0)) throw std::invalid_argument("box_count_oracle: eps must be positive");
  if (!(win.hi > win.lo)) throw std::invalid_argument("box_count_oracle: empty window");
  const auto ncells = static_cast<int64_t>(std::ceil((win.hi - win.lo) / eps - kBoundaryTol));
  std::array<int64_t, 3> idx{0, 0, 0};
  Pt sample(dim);
  int64_t count = 0;
  for (;;) {
    bool hit = false;
    for (int i = 0; i < dim; ++i)
      sample[i] = win.lo + eps * (static_cast<double>(idx[static_cast<size_t>(i)]) + 0.5);
    hit = inside(sample);
    if (!hit && stencil == BoxStencil::center_corners) {
      for (int corner = 0; corner < (1 << dim) && !hit; ++corner) {
        for (int i = 0; i < dim; ++i)
          sample[i] = win.lo + eps * static_cast<double>(idx[static_cast<size_t>(i)] +
                                                         ((corner >> i) & 1));
        hit = inside(sample);
      }
    }
    if (hit) ++count;
    int axis = 0;
    while (axis < dim && ++idx[static_cast<size_t>(axis)] == ncells) {
      idx[static_cast<size_t>(axis)] = 0;
      ++axis;
    }
    if (axis == dim) break;
  }
  return count;
}

// Center-only sampling, one membership query per cell.
inline int64_t box_count_centers(int dim, const std::function<bool(const Pt&)>& inside,
                                 double eps, const BoxWindow& win = {}) {
  return box_count_oracle(dim, inside, eps, win, BoxStencil::center);
}

struct BoxCountSeries {
  std::vector<double> eps;
  std::vector<int64_t> counts;
};

struct DimensionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms misfit of log N around the fitted line
  bool degenerate = false;  // a zero count, no scale spread, or constant counts
};

// Least squares of log N against log(1/eps).
inline DimensionFit dimension_fit(const BoxCountSeries& series) {
  DimensionFit fit;
  const size_t n = series.eps.size();
  if (n != series.counts.size())
    throw std::invalid_argument("dimension_fit: mismatched series lengths");
  if (n < 4) throw std::invalid_argument("dimension_fit: need at least 4 scales");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  bool constant = true;
  for (size_t i = 0; i < n; ++i) {
    if (!(series.eps[i] > 0.0) || series.counts[i] <= 0) {
      fit.degenerate = true;
      return fit;
    }
    constant = constant && series.counts[i] == series.counts[0];
    const double x = std::log(1.0 / series.eps[i]);
    const double y = std::log(static_cast<double>(series.counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  if (constant) {
    fit.intercept = std::log(static_cast<double>(series.counts[0]));
    fit.degenerate = true;
    return fit;
  }
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) {
    fit.degenerate = true;
    return fit;
  }
  fit.slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / static_cast<double>(n);
  double sse = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double x = std::log(1.0 / series.eps[i]);
    const double y = std::log(static_cast<double>(series.counts[i]));
    const double r = y - (fit.intercept + fit.slope * x);
    sse += r * r;
  }
  fit.residual = std::sqrt(sse / static_cast<double>(n));
  return fit;
}

inline std::string box_series_csv(const BoxCountSeries& series) {
  if (series.eps.size() != series.counts.size())
    throw std::invalid_argument("box_series_csv: mismatched series lengths");
  std::vector<std::vector<double>> rows;
  rows.reserve(series.eps.size());
  for (size_t i = 0; i < series.eps.size(); ++i)
    rows.push_back({series.eps[i], static_cast<double>(series.counts[i])});
  return csv_table({"eps", "count"}, rows);
}

// Sum of diameters raised to the exponent, the quantity the cover bounds cap.
inline double hausdorff_sum(const std::vector<Ball>& balls, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("hausdorff_sum: exponent must be positive");
  double sum = 0.0;
  for (const auto& b : balls) {
    if (b.radius < 0.0) throw std::invalid_argument("hausdorff_sum: negative radius");
    sum += std::pow(2.0 * b.radius, r);
  }
  return sum;
}

// Total length of the projection of a segment family onto the line spanned
// by the direction: exact union of the projected parameter intervals.
inline double projection_interval_length(const std::vector<Segment>& segments,
                                         const Pt& direction) {
  const double len = norm(direction);
  if (!(len > 0.0)) throw std::invalid_argument("projection: zero direction");
  std::vector<std::pair<double, double>> intervals;
  intervals.reserve(segments.size());
  for (const auto& s : segments) {
    if (s.a.dim != direction.dim)
      throw std::invalid_argument("projection: dimension mismatch");
    const double u = dot(s.a, direction) / len;
    const double v = dot(s.b, direction) / len;
    intervals.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(intervals.begin(), intervals.end());
  double total = 0.0, cur_lo = 0.0, cur_hi = -1.0;
  bool open = false;
  for (const auto& [a, b] : intervals) {
    if (!open || a > cur_hi) {
      if (open) total += cur_hi - cur_lo;
      cur_lo = a;
      cur_hi = b;
      open = true;
    } else {
      cur_hi = std::max(cur_hi, b);
    }
  }
  if (open) total += cur_hi - cur_lo;
  return total;
}

}  // namespace udset
