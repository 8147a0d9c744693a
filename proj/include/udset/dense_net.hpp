#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "udset/geometry.hpp"
#include "udset/io.hpp"

namespace udset {

using LatticeTuple = std::array<int64_t, kMaxDim>;

inline bool lex_less(const Pt& a, const Pt& b) {
  for (int i = 0; i < a.dim; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

inline void sort_dedup(std::vector<Pt>& pts) {
  std::sort(pts.begin(), pts.end(), lex_less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
}

// ---------------------------------------------------------------------------
// Dense dyadic sequence in the open unit ball: points p / 2^j listed by the
// least exponent j that writes them exactly (so every point appears once),
// then lexicographically by the integer tuple p within a level.

namespace detail {
// Odometer over [lo, hi]^d in lexicographic order; returns false at wrap.
inline bool advance_tuple(LatticeTuple& p, int d, int64_t lo, int64_t hi) {
  for (int i = d - 1; i >= 0; --i) {
    if (p[static_cast<size_t>(i)] < hi) {
      ++p[static_cast<size_t>(i)];
      for (int k = i + 1; k < d; ++k) p[static_cast<size_t>(k)] = lo;
      return true;
    }
  }
  return false;
}
}  // namespace detail

inline std::vector<Pt> dense_prefix(int d, int count) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dense_prefix: bad dimension");
  if (count < 0 || count > (1 << 20)) throw std::invalid_argument("dense_prefix: bad count");
  std::vector<Pt> out;
  out.reserve(static_cast<size_t>(count));
  if (count == 0) return out;
  out.push_back(Pt(d));  // level 0: the origin
  for (int j = 1; static_cast<int>(out.size()) < count; ++j) {
    if (j > 24) throw std::runtime_error("dense_prefix: level overflow");
    const int64_t hi = (int64_t{1} << j) - 1;
    const double scale = std::ldexp(1.0, -j);
    LatticeTuple p{};
    p.fill(-hi);
    bool more = true;
    while (more && static_cast<int>(out.size()) < count) {
      bool odd = false;
      double n2 = 0.0;
      for (int i = 0; i < d; ++i) {
        odd |= (p[static_cast<size_t>(i)] & 1) != 0;
        n2 += static_cast<double>(p[static_cast<size_t>(i)]) *
              static_cast<double>(p[static_cast<size_t>(i)]);
      }
      // minimal level needs an odd numerator; the ball needs |p| < 2^j
      if (odd && n2 < std::ldexp(1.0, 2 * j)) {
        Pt q(d);
        for (int i = 0; i < d; ++i) q[i] = scale * static_cast<double>(p[static_cast<size_t>(i)]);
        out.push_back(q);
      }
      more = detail::advance_tuple(p, d, -hi, hi);
    }
  }
  return out;
}

inline Pt dense_point(int d, int index) {
  auto pts = dense_prefix(d, index + 1);
  return pts[static_cast<size_t>(index)];
}

// ---------------------------------------------------------------------------
// eps-nets of the open unit ball on the dyadic grid of step 2^-j, with j
// minimal such that sqrt(d) * 2^-j <= eps/2. Grid nodes outside the ball but
// close to the sphere are pulled in radially by (1 - 2^-j) and then snapped
// toward zero onto the finer grid of step 2^-(j+2), so every retained point
// is still an exact dyadic tuple. Every point of the ball then has a net
// point within eps (with room to spare), and the net lies in the OPEN ball.

struct EpsNet {
  int d = 0;
  int j = 0;
  double eps = 0.0;
  std::vector<Pt> points;
  double step() const { return std::ldexp(1.0, -j); }
};

class NetGrid {
 public:
  static constexpr int kMaxLevel = 44;

  NetGrid(int d, double eps) : d_(d), eps_(eps) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("NetGrid: bad dimension");
    if (!(eps > 0.0)) throw std::invalid_argument("NetGrid: eps must be positive");
    const double half = eps / 2.0;
    const double rd = std::sqrt(static_cast<double>(d));
    int j = 0;
    while (rd * std::ldexp(1.0, -j) > half) {
      if (++j > kMaxLevel)
        throw std::runtime_error("NetGrid: eps below representable grid (eps=" +
                                 fmt_double(eps) + ")");
    }
    j_ = j;
  }

  int dim() const { return d_; }
  int level() const { return j_; }
  double eps() const { return eps_; }
  double step() const { return std::ldexp(1.0, -j_); }

  // Applies the node rule to integer tuple p (units of 2^-j).
  std::optional<Pt> node(const LatticeTuple& p) const {
    const double scale = std::ldexp(1.0, -j_);
    Pt g(d_);
    double n2 = 0.0;
    for (int i = 0; i < d_; ++i) {
      g[i] = scale * static_cast<double>(p[static_cast<size_t>(i)]);
      n2 += g[i] * g[i];
    }
    if (n2 < 1.0) return g;
    // only nodes whose cell can reach the sphere are worth pulling in
    const double rd = std::sqrt(static_cast<double>(d_));
    const double nrm = std::sqrt(n2);
    if (nrm > 1.0 + rd * scale) return std::nullopt;
    const double shrink = 1.0 - scale;
    const double snap = std::ldexp(1.0, j_ + 2);
    Pt q(d_);
    double q2 = 0.0;
    for (int i = 0; i < d_; ++i) {
      q[i] = std::trunc(g[i] * shrink * snap) / snap;
      q2 += q[i] * q[i];
    }
    if (q2 >= 1.0) return std::nullopt;
    return q;
  }

  // All net points within `radius` of `center` (strict when !closed).
  // Enumerates only the local lattice box, so this stays cheap at any level
  // as long as radius is a small multiple of the grid step.
  std::vector<Pt> points_in_ball(const Pt& center, double radius, bool closed) const {
    if (center.dim != d_) throw std::invalid_argument("points_in_ball: dimension mismatch");
    if (!(radius >= 0.0)) throw std::invalid_argument("points_in_ball: bad radius");
    const double scale = std::ldexp(1.0, -j_);
    // snapped points sit at most (|g| + sqrt(d)/4) * 2^-j from their source node
    const int64_t margin = 4;
    const int64_t cap = int64_t{1} << j_;
    LatticeTuple lo{}, hi{}, p{};
    double budget = 1.0;
    for (int i = 0; i < d_; ++i) {
      const double a = (center[i] - radius) / scale;
      const double b = (center[i] + radius) / scale;
      lo[static_cast<size_t>(i)] = std::max(-cap, static_cast<int64_t>(std::floor(a)) - margin);
      hi[static_cast<size_t>(i)] = std::min(cap, static_cast<int64_t>(std::ceil(b)) + margin);
      budget *= static_cast<double>(hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)] + 1);
    }
    if (budget > 64.0 * 1024 * 1024)
      throw std::runtime_error("points_in_ball: query box too large (" +
                               fmt_double(budget) + " candidates)");
    std::vector<Pt> out;
    p = lo;
    bool more = true;
    while (more) {
      if (auto q = node(p)) {
        const double dd = dist(*q, center);
        if (closed ? dd <= radius + kBoundaryTol : dd < radius) out.push_back(*q);
      }
      // odometer with per-axis bounds
      more = false;
      for (int i = d_ - 1; i >= 0; --i) {
        if (p[static_cast<size_t>(i)] < hi[static_cast<size_t>(i)]) {
          ++p[static_cast<size_t>(i)];
          for (int k = i + 1; k < d_; ++k) p[static_cast<size_t>(k)] = lo[static_cast<size_t>(k)];
          more = true;
          break;
        }
      }
    }
    sort_dedup(out);
    return out;
  }

  // Distance from x to the nearest net point; geometric expansion from the
  // covering radius, so at most a few local queries.
  double nearest_dist(const Pt& x) const {
    double r = eps_;
    for (int round = 0; round < 8; ++round) {
      auto pts = points_in_ball(x, r, true);
      if (!pts.empty()) {
        double best = 1e300;
        for (const auto& q : pts) best = std::min(best, dist(q, x));
        return best;
      }
      r *= 2.0;
    }
    throw std::runtime_error("nearest_dist: net appears empty near query");
  }

  EpsNet materialize(uint64_t max_candidates = (uint64_t{1} << 22)) const {
    const int64_t cap = int64_t{1} << j_;
    double total = 1.0;
    for (int i = 0; i < d_; ++i) total *= static_cast<double>(2 * cap + 1);
    if (total > static_cast<double>(max_candidates))
      throw std::runtime_error("NetGrid::materialize: " + fmt_double(total) +
                               " candidates exceeds cap at level " + std::to_string(j_));
    EpsNet net;
    net.d = d_;
    net.j = j_;
    net.eps = eps_;
    LatticeTuple p{};
    p.fill(-cap);
    bool more = true;
    while (more) {
      if (auto q = node(p)) net.points.push_back(*q);
      more = detail::advance_tuple(p, d_, -cap, cap);
    }
    sort_dedup(net.points);
    return net;
  }

 private:
  int d_;
  int j_;
  double eps_;
};

inline EpsNet build_net(int d, double eps) { return NetGrid(d, eps).materialize(); }

struct NetAudit {
  int samples = 0;
  int violations = 0;
  double max_nearest = 0.0;
};

// Samples the open unit ball and checks the covering property. The
// construction is deterministic, so violations mean a broken net, not noise.
template <class Rng>
NetAudit audit_net_covering(const NetGrid& grid, int samples, Rng& rng) {
  NetAudit audit;
  audit.samples = samples;
  for (int i = 0; i < samples; ++i) {
    const Pt x = rng.in_ball(Pt(grid.dim()), 1.0);
    const double dd = grid.nearest_dist(x);
    audit.max_nearest = std::max(audit.max_nearest, dd);
    if (dd > grid.eps()) ++audit.violations;
  }
  return audit;
}

inline std::string net_to_csv(const EpsNet& net) {
  std::vector<std::string> header;
  for (int i = 0; i < net.d; ++i) header.push_back("x" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  rows.reserve(net.points.size());
  for (const auto& p : net.points) {
    std::vector<double> row(static_cast<size_t>(net.d));
    for (int i = 0; i < net.d; ++i) row[static_cast<size_t>(i)] = p[i];
    rows.push_back(std::move(row));
  }
  return csv_table(header, rows);
}

}  // namespace udset
