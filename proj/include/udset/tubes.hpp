#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "udset/dense_net.hpp"
#include "udset/geometry.hpp"
#include "udset/io.hpp"

namespace udset {

// One unit-length piece of the global segment list. m is the 1-based global
// index that sets the piece's tube radius 2^-(m+n) at stage n.
struct TablePiece {
  Segment seg;
  int m = 0;
  int from_i = 0;   // dense-sequence indices of the parent segment
  int from_j = 0;
  int sub = 0;      // piece number within the parent segment, 0-based
};

struct SegmentTable {
  int d = 0;
  std::vector<TablePiece> pieces;
  int size() const { return static_cast<int>(pieces.size()); }
};

// Joins dense-sequence points pairwise in diagonal order (by i+j, then i),
// cuts each segment into unit pieces, and keeps the first m_total pieces.
inline SegmentTable build_segment_table(int d, int m_total) {
  if (m_total < 1 || m_total > 4096)
    throw std::invalid_argument("build_segment_table: piece count out of range");
  // every pair yields at least one piece, so this prefix is always enough
  const int need = static_cast<int>(std::ceil((1.0 + std::sqrt(1.0 + 8.0 * m_total)) / 2.0)) + 1;
  auto pts = dense_prefix(d, need);
  SegmentTable table;
  table.d = d;
  table.pieces.reserve(static_cast<size_t>(m_total));
  for (int s = 1; table.size() < m_total; ++s) {
    if (s > 2 * need) throw std::runtime_error("build_segment_table: prefix exhausted");
    for (int i = 0; 2 * i < s && table.size() < m_total; ++i) {
      const int j = s - i;
      if (j >= need) continue;
      Segment whole{pts[static_cast<size_t>(i)], pts[static_cast<size_t>(j)]};
      auto parts = subdivide_to_unit_length(whole);
      for (size_t k = 0; k < parts.size() && table.size() < m_total; ++k) {
        TablePiece piece;
        piece.seg = parts[k];
        piece.m = table.size() + 1;
        piece.from_i = i;
        piece.from_j = j;
        piece.sub = static_cast<int>(k);
        table.pieces.push_back(piece);
      }
    }
  }
  return table;
}

// Radius of piece m at stage n. Exponents beyond the subnormal range flush
// to zero, which only shrinks the tube; every bound stays valid.
inline double piece_radius(int m, int n) {
  const int e = m + n;
  return e > 1074 ? 0.0 : std::ldexp(1.0, -e);
}

// Stage-n tube: union over pieces of the OPEN ball B(piece, 2^-(m+n)).
inline bool in_tube(const Pt& x, const SegmentTable& table, int n) {
  for (const auto& piece : table.pieces) {
    const double r = piece_radius(piece.m, n);
    if (r > 0.0 && dist_point_segment(x, piece.seg) < r) return true;
  }
  return false;
}

// Covers the 1/k-neighborhood of a unit-or-shorter segment with k balls of
// radius 2/k centered along the segment. The half-step between centers plus
// the 1/k halo total at most 3/(2k) < 2/k, hence the cover.
inline std::vector<Ball> cover_tube(const Segment& seg, int k) {
  if (k < 1) throw std::invalid_argument("cover_tube: need k >= 1");
  if (seg.length() > 1.0 + kBoundaryTol)
    throw std::invalid_argument("cover_tube: segment longer than 1");
  std::vector<Ball> balls;
  balls.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    Ball b;
    b.center = lerp(seg.a, seg.b, (i + 0.5) / k);
    b.radius = 2.0 / k;
    balls.push_back(b);
  }
  return balls;
}

struct CoverReport {
  int n = 0;
  double r = 0.0;
  double delta = 0.0;
  int m_count = 0;
  double sum = 0.0;
  double bound = 0.0;
  bool ok = false;
};

// Stage-n certificate: covering each piece's tube by 2^(m+n) balls of radius
// 2 * 2^-(m+n) keeps every diameter below delta (this needs 2^(n+1) >= 4/delta)
// and the r-power diameter sum below a geometric tail that is independent of
// the piece count. Ball counts reach 2^(m+n), so the cover is accounted for
// analytically instead of materialized.
inline CoverReport cover_sum_certificate(const SegmentTable& table, int n, double r,
                                         double delta) {
  if (!(r > 1.0)) throw std::invalid_argument("cover_sum_certificate: need r > 1");
  if (!(delta > 0.0)) throw std::invalid_argument("cover_sum_certificate: need delta > 0");
  if (n < 1 || n > 1000) throw std::invalid_argument("cover_sum_certificate: bad stage");
  if (std::ldexp(1.0, n + 1) < 4.0 / delta)
    throw std::invalid_argument(
        "cover_sum_certificate: stage too shallow for delta (need 2^(n+1) >= 4/delta)");
  CoverReport rep;
  rep.n = n;
  rep.r = r;
  rep.delta = delta;
  rep.m_count = table.size();
  for (const auto& piece : table.pieces) {
    // 2^(m+n) balls of diameter 4 * 2^-(m+n): sum of diam^r in closed form
    rep.sum += std::exp2(2.0 * r - (piece.m + n) * (r - 1.0));
  }
  rep.bound = std::exp2(2.0 * r - (n + 1) * (r - 1.0)) / (1.0 - std::exp2(-(r - 1.0)));
  rep.ok = rep.sum <= rep.bound * (1.0 + 1e-12);
  return rep;
}

inline json cover_report_to_json(const CoverReport& rep) {
  return json{{"n", rep.n},     {"r", rep.r},         {"delta", rep.delta},
              {"M", rep.m_count}, {"sum", rep.sum},   {"bound", rep.bound},
              {"ok", rep.ok}};
}

inline json segment_table_to_json(const SegmentTable& table) {
  json pieces = json::array();
  for (const auto& p : table.pieces) {
    json a = json::array(), b = json::array();
    for (int i = 0; i < table.d; ++i) {
      a.push_back(p.seg.a[i]);
      b.push_back(p.seg.b[i]);
    }
    pieces.push_back(json{{"m", p.m},
                          {"i", p.from_i},
                          {"j", p.from_j},
                          {"piece", p.sub},
                          {"a", a},
                          {"b", b}});
  }
  return json{{"d", table.d}, {"M", table.size()}, {"pieces", pieces}};
}

}  // namespace udset
