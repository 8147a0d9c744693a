#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "udset/dense_net.hpp"
#include "udset/geometry.hpp"
#include "udset/io.hpp"
#include "udset/rng.hpp"

namespace udset {

// ---------------------------------------------------------------------------
// Segment web with cell-bucketed distance queries. Buckets key on the first
// two coordinates only; in higher dimension that just widens the candidate
// set, never drops one. min_dist is exact whenever the result is <= cutoff.

class SegmentBuckets {
 public:
  void build(const std::vector<Segment>* pieces, double cell) {
    pieces_ = pieces;
    cell_ = cell;
    nx_ = std::max(1, static_cast<int>(std::ceil(kSpan / cell_)));
    std::vector<std::pair<int32_t, int32_t>> refs;  // (cell id, piece index)
    for (int32_t idx = 0; idx < static_cast<int32_t>(pieces->size()); ++idx) {
      const Segment& s = (*pieces)[static_cast<size_t>(idx)];
      const int chunks = std::max(1, static_cast<int>(std::ceil(s.length() / cell_)));
      for (int c = 0; c < chunks; ++c) {
        const Pt pa = lerp(s.a, s.b, static_cast<double>(c) / chunks);
        const Pt pb = lerp(s.a, s.b, static_cast<double>(c + 1) / chunks);
        const int ax0 = axis_cell(std::min(pa[0], pb[0]));
        const int ax1 = axis_cell(std::max(pa[0], pb[0]));
        const int ay0 = s.a.dim > 1 ? axis_cell(std::min(pa[1], pb[1])) : 0;
        const int ay1 = s.a.dim > 1 ? axis_cell(std::max(pa[1], pb[1])) : 0;
        for (int gx = ax0; gx <= ax1; ++gx)
          for (int gy = ay0; gy <= ay1; ++gy)
            refs.emplace_back(cell_id(gx, gy), idx);
      }
    }
    std::sort(refs.begin(), refs.end());
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
    starts_.assign(static_cast<size_t>(nx_) * nx_ + 1, 0);
    entries_.resize(refs.size());
    for (const auto& r : refs) ++starts_[static_cast<size_t>(r.first) + 1];
    for (size_t i = 1; i < starts_.size(); ++i) starts_[i] += starts_[i - 1];
    std::vector<int32_t> cursor(starts_.begin(), starts_.end() - 1);
    for (const auto& r : refs)
      entries_[static_cast<size_t>(cursor[static_cast<size_t>(r.first)]++)] = r.second;
  }

  // Minimum distance from x to the web, exact when <= cutoff. Returns the
  // running minimum early once it drops to early_exit (pass -1 to disable).
  double min_dist(const Pt& x, double cutoff, double early_exit = -1.0) const {
    double best = 1e300;
    const int ax0 = axis_cell(x[0] - cutoff), ax1 = axis_cell(x[0] + cutoff);
    const int ay0 = x.dim > 1 ? axis_cell(x[1] - cutoff) : 0;
    const int ay1 = x.dim > 1 ? axis_cell(x[1] + cutoff) : 0;
    for (int gx = ax0; gx <= ax1; ++gx) {
      for (int gy = ay0; gy <= ay1; ++gy) {
        const int id = cell_id(gx, gy);
        for (int32_t e = starts_[static_cast<size_t>(id)];
             e < starts_[static_cast<size_t>(id) + 1]; ++e) {
          const double d = dist_point_segment(
              x, (*pieces_)[static_cast<size_t>(entries_[static_cast<size_t>(e)])]);
          best = std::min(best, d);
          if (best <= early_exit) return best;
        }
      }
    }
    return best;
  }

 private:
  // web geometry lives in the unit ball; queries may reach a half unit out
  static constexpr double kLo = -2.0;
  static constexpr double kSpan = 4.0;

  int axis_cell(double v) const {
    const int g = static_cast<int>(std::floor((v - kLo) / cell_));
    return std::clamp(g, 0, nx_ - 1);
  }
  int cell_id(int gx, int gy) const { return gx * nx_ + gy; }

  const std::vector<Segment>* pieces_ = nullptr;
  double cell_ = 0.25;
  int nx_ = 1;
  std::vector<int32_t> starts_;
  std::vector<int32_t> entries_;
};

// ---------------------------------------------------------------------------

struct ConstructionParams {
  int d = 2;
  int n_max = 8;
  double w0 = 1.0;
  int max_total_pieces = 600000;
  // Per-level pairing lattices: level k joins points of the sublattice of
  // step 2^-sigma_exp[k-1] (shifted by lattice_offset in step units), all
  // pairs up to chord_cap[k-1] apart (cap < 0 means no cap). The sublattice
  // step may not go below the true net step of its level.
  std::vector<int> sigma_exp;
  std::vector<double> chord_cap;
  std::vector<double> lattice_offset;

  static ConstructionParams defaults(int d, int n_max) {
    ConstructionParams p;
    p.d = d;
    p.n_max = n_max;
    if (d <= 2) {
      p.sigma_exp = {1, 2, 3, 4, 5, 6, 6, 6, 6, 6, 6, 6};
      p.chord_cap = {-1, -1, -1, 0.25, 0.09, 0.025, 0.025, 0.025, 0.025, 0.025, 0.025, 0.025};
      p.lattice_offset = {0, 0, 0, 0, 0, 0, 0.5, 0.25, 0.75, 0.125, 0.375, 0.625};
    } else {
      p.sigma_exp = {1, 1, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3};
      p.chord_cap = {-1, -1, 0.6, 0.4, 0.25, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2};
      p.lattice_offset = {0, 0.5, 0, 0.5, 0, 0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875};
    }
    return p;
  }
};

struct Stratum {
  int level = 0;
  double sigma = 0.0;      // pairing lattice step
  double chord_cap = -1.0;
  size_t lattice_points = 0;
  std::vector<Segment> pieces;  // pieces new to this level
  SegmentBuckets buckets;
};

struct MWitness {
  bool in = false;
  int level = 0;      // window level that admitted the point
  double dist = 0.0;  // distance to that level's web
};

// The construction: nested segment webs R_1 ⊆ R_2 ⊆ ... (each level joins
// points of a budgeted dyadic sublattice of its true eps-net), a width
// ladder w_k = w_{k-1}/(4k), and shrinking tubes around the webs. Level-tau
// pieces carry radius B_tau * 2^(tau-n) at tube stage n with B_tau = 2*w_tau,
// so closed(R_k, w_k) sits inside tube stage k with a factor-2 margin and
// the stages nest as n grows.
class Construction {
 public:
  explicit Construction(const ConstructionParams& params) : p_(params) {
    validate_params();
    build_ladder();
    build_strata();
  }

  int dim() const { return p_.d; }
  int depth() const { return p_.n_max; }
  const ConstructionParams& params() const { return p_; }

  double w(int k) const {
    check_range(k, 0, p_.n_max, "w");
    return w_[static_cast<size_t>(k)];
  }
  double eps_true(int k) const {
    check_range(k, 1, p_.n_max, "eps_true");
    return eps_[static_cast<size_t>(k)];
  }
  double base_radius(int tau) const {
    check_range(tau, 1, p_.n_max, "base_radius");
    return base_[static_cast<size_t>(tau)];
  }
  // Tube radius of a level-tau piece at stage n; halves per stage.
  double tube_radius(int tau, int n) const {
    check_range(tau, 1, p_.n_max, "tube_radius");
    if (n < 1 || n > 1000) throw std::invalid_argument("tube_radius: bad stage");
    return std::ldexp(base_radius(tau), tau - n);
  }
  const NetGrid& true_net(int k) const {
    check_range(k, 1, p_.n_max, "true_net");
    return nets_[static_cast<size_t>(k - 1)];
  }
  const Stratum& stratum(int k) const {
    check_range(k, 1, p_.n_max, "stratum");
    return strata_[static_cast<size_t>(k - 1)];
  }
  size_t total_pieces() const {
    size_t total = 0;
    for (const auto& s : strata_) total += s.pieces.size();
    return total;
  }

  // Distance from x to the level-n web R_n (union of strata 1..n), exact
  // whenever the result is <= cutoff. Deeper strata are scanned first; they
  // are sparser near a typical query point.
  double dist_to_web(const Pt& x, int n, double cutoff, double early_exit = -1.0) const {
    check_range(n, 1, p_.n_max, "dist_to_web");
    double best = 1e300;
    for (int tau = n; tau >= 1; --tau) {
      best = std::min(best, stratum(tau).buckets.min_dist(x, cutoff, early_exit));
      if (early_exit >= 0.0 && best <= early_exit) return best;
    }
    return best;
  }

  bool on_web(const Pt& x, int n) const {
    return dist_to_web(x, n, kBoundaryTol * 4, kBoundaryTol) <= kBoundaryTol;
  }

  // Stage-n tube membership (open). Pieces of every level participate, each
  // at its own stage-n radius.
  bool in_tube_stage(const Pt& x, int n) const {
    if (n < 1 || n > 1000) throw std::invalid_argument("in_tube_stage: bad stage");
    for (int tau = 1; tau <= p_.n_max; ++tau) {
      const double r = tube_radius(tau, n);
      if (stratum(tau).buckets.min_dist(x, r, 0.5 * r) < r) return true;
    }
    return false;
  }

  // Last web level the (k, lambda) window may consult.
  static int window_end(int k, double lambda) {
    return static_cast<int>(std::floor((1.0 + lambda) * k + kBoundaryTol));
  }

  MWitness m_witness(const Pt& x, int k, double lambda) const {
    if (k < 1) throw std::invalid_argument("m_witness: k must be >= 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("m_witness: lambda must be >= 0");
    const int n_hi = window_end(k, lambda);
    if (n_hi > p_.n_max)
      throw std::invalid_argument(
          "m_witness: window [" + std::to_string(k) + ", " + std::to_string(n_hi) +
          "] exceeds built depth " + std::to_string(p_.n_max));
    MWitness wit;
    for (int n = n_hi; n >= k; --n) {
      const double thr = lambda * w(n) + kBoundaryTol;
      const double d = dist_to_web(x, n, thr, thr);
      if (d <= thr) {
        wit.in = true;
        wit.level = n;
        wit.dist = d;
        return wit;
      }
    }
    return wit;
  }

  bool in_m_set(const Pt& x, int k, double lambda) const {
    return m_witness(x, k, lambda).in;
  }

  // T_lambda truncated at depth big_k: intersection of M_1..M_{big_k}.
  bool in_t_set(const Pt& x, double lambda, int big_k) const {
    if (big_k < 1) throw std::invalid_argument("in_t_set: depth must be >= 1");
    for (int k = big_k; k >= 1; --k)
      if (!in_m_set(x, k, lambda)) return false;
    return true;
  }

  Pt sample_web_point(int n, Rng& rng) const {
    check_range(n, 1, p_.n_max, "sample_web_point");
    // draw the level first so sparse strata still get traffic
    for (;;) {
      const int tau = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n)));
      const auto& pieces = stratum(tau).pieces;
      if (pieces.empty()) continue;
      const auto& seg = pieces[rng.below(pieces.size())];
      return lerp(seg.a, seg.b, rng.uniform01());
    }
  }

  // Seeded points of T_lambda (truncated at big_k): on-web points of R_1
  // plus radial jitter small enough to stay inside every window. Each point
  // is re-verified through the public membership test.
  std::vector<Pt> sample_t(double lambda, int big_k, int count, uint64_t seed) const {
    if (count < 0) throw std::invalid_argument("sample_t: bad count");
    if (big_k < 1 || window_end(big_k, lambda) > p_.n_max)
      throw std::invalid_argument("sample_t: depth/lambda exceed built depth");
    const double jitter_cap = 0.9 * lambda * w(window_end(big_k, lambda));
    Rng rng(seed);
    std::vector<Pt> out;
    out.reserve(static_cast<size_t>(count));
    while (static_cast<int>(out.size()) < count) {
      Pt x = sample_web_point(1, rng);
      if (jitter_cap > 0.0 && rng.uniform01() < 0.5)
        x = rng.in_ball(x, jitter_cap);
      if (!in_t_set(x, lambda, big_k))
        throw std::runtime_error("sample_t: generated point failed verification");
      out.push_back(x);
    }
    return out;
  }

  json tables_json() const {
    json levels = json::array();
    for (int k = 1; k <= p_.n_max; ++k) {
      const auto& s = stratum(k);
      levels.push_back(json{{"level", k},
                            {"w", w(k)},
                            {"eps", eps_true(k)},
                            {"net_grid_level", true_net(k).level()},
                            {"base_radius", base_radius(k)},
                            {"sigma", s.sigma},
                            {"chord_cap", s.chord_cap},
                            {"lattice_points", s.lattice_points},
                            {"new_pieces", s.pieces.size()}});
    }
    return json{{"d", p_.d},
                {"n_max", p_.n_max},
                {"w0", w(0)},
                {"total_pieces", total_pieces()},
                {"levels", levels}};
  }

 private:
  static void check_range(int v, int lo, int hi, const char* who) {
    if (v < lo || v > hi)
      throw std::invalid_argument(std::string(who) + ": level " + std::to_string(v) +
                                  " outside [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
  }

  void validate_params() {
    if (p_.d < 1 || p_.d > kMaxDim)
      throw std::invalid_argument("Construction: bad dimension");
    if (p_.n_max < 1 || p_.n_max > 12)
      throw std::invalid_argument("Construction: depth must be in [1, 12]");
    if (!(p_.w0 > 0.0 && p_.w0 <= 1.0))
      throw std::invalid_argument("Construction: w0 must be in (0, 1]");
    if (p_.sigma_exp.empty() && p_.chord_cap.empty() && p_.lattice_offset.empty()) {
      const auto def = ConstructionParams::defaults(p_.d, p_.n_max);
      p_.sigma_exp = def.sigma_exp;
      p_.chord_cap = def.chord_cap;
      p_.lattice_offset = def.lattice_offset;
    }
    if (static_cast<int>(p_.sigma_exp.size()) < p_.n_max ||
        static_cast<int>(p_.chord_cap.size()) < p_.n_max ||
        static_cast<int>(p_.lattice_offset.size()) < p_.n_max)
      throw std::invalid_argument("Construction: pairing ladders shorter than depth");
  }

  void build_ladder() {
    w_.resize(static_cast<size_t>(p_.n_max) + 1);
    eps_.resize(static_cast<size_t>(p_.n_max) + 1);
    base_.resize(static_cast<size_t>(p_.n_max) + 1);
    w_[0] = p_.w0;
    for (int k = 1; k <= p_.n_max; ++k) {
      eps_[static_cast<size_t>(k)] = w_[static_cast<size_t>(k - 1)] / k;
      base_[static_cast<size_t>(k)] = w_[static_cast<size_t>(k - 1)] / (2.0 * k);
      w_[static_cast<size_t>(k)] =
          std::min(w_[static_cast<size_t>(k - 1)] / 4.0, base_[static_cast<size_t>(k)] / 2.0);
      nets_.emplace_back(p_.d, eps_[static_cast<size_t>(k)]);
    }
  }

  // canonical key of a piece: endpoint coordinates, lexicographically
  // smaller endpoint first, -0.0 normalized away
  using PieceKey = std::array<uint64_t, 2 * kMaxDim>;
  static PieceKey piece_key(const Segment& s) {
    const bool flip = lex_less(s.b, s.a);
    const Pt& first = flip ? s.b : s.a;
    const Pt& second = flip ? s.a : s.b;
    PieceKey key{};
    for (int i = 0; i < first.dim; ++i) {
      key[static_cast<size_t>(i)] = std::bit_cast<uint64_t>(first[i] + 0.0);
      key[static_cast<size_t>(kMaxDim + i)] = std::bit_cast<uint64_t>(second[i] + 0.0);
    }
    return key;
  }

  void build_strata() {
    std::set<PieceKey> seen;
    size_t total = 0;
    for (int k = 1; k <= p_.n_max; ++k) {
      const int a = p_.sigma_exp[static_cast<size_t>(k - 1)];
      const double cap = p_.chord_cap[static_cast<size_t>(k - 1)];
      const double off = p_.lattice_offset[static_cast<size_t>(k - 1)];
      if (a < 0 || a > 20) throw std::invalid_argument("Construction: bad sigma exponent");
      if (off < 0.0 || off >= 1.0 || off * 4.0 != std::floor(off * 4.0))
        throw std::invalid_argument("Construction: lattice offset must be a quarter step");
      // offset lattices live on the grid of step sigma/4; that still has to
      // be a refinement of the true net grid for the subnet inclusion
      const int effective = a + (off == 0.0 ? 0 : (off == 0.5 ? 1 : 2));
      if (effective > true_net(k).level())
        throw std::invalid_argument("Construction: pairing lattice finer than true net at level " +
                                    std::to_string(k));

      Stratum s;
      s.level = k;
      s.sigma = std::ldexp(1.0, -a);
      s.chord_cap = cap;

      auto points = lattice_points(a, off);
      s.lattice_points = points.size();
      std::vector<Segment> chords;
      if (cap < 0.0) {
        for (size_t u = 0; u < points.size(); ++u)
          for (size_t v = u + 1; v < points.size(); ++v)
            chords.push_back(Segment{points[u], points[v]});
      } else {
        capped_pairs(points, s.sigma, off, cap, chords);
      }
      for (const auto& chord : chords) {
        for (const auto& piece : subdivide_to_unit_length(chord)) {
          if (piece.length() == 0.0) continue;
          if (!seen.insert(piece_key(piece)).second) continue;
          s.pieces.push_back(piece);
          if (++total > static_cast<size_t>(p_.max_total_pieces))
            throw std::runtime_error("Construction: piece budget exhausted at level " +
                                     std::to_string(k));
        }
      }
      strata_.push_back(std::move(s));
    }
    for (auto& s : strata_) {
      double len = 0.0;
      for (const auto& piece : s.pieces) len += piece.length();
      const double avg = s.pieces.empty() ? 0.25 : len / static_cast<double>(s.pieces.size());
      s.buckets.build(&s.pieces, std::clamp(avg, 0.02, 0.25));
    }
  }

  // Points (p + off) * sigma inside the open unit ball.
  std::vector<Pt> lattice_points(int a, double off) const {
    const double sigma = std::ldexp(1.0, -a);
    const int64_t lim = (int64_t{1} << a) + 1;
    std::vector<Pt> out;
    LatticeTuple p{};
    p.fill(-lim);
    bool more = true;
    while (more) {
      Pt x(p_.d);
      double n2 = 0.0;
      for (int i = 0; i < p_.d; ++i) {
        x[i] = (static_cast<double>(p[static_cast<size_t>(i)]) + off) * sigma;
        n2 += x[i] * x[i];
      }
      if (n2 < 1.0) out.push_back(x);
      more = detail::advance_tuple(p, p_.d, -lim, lim);
    }
    return out;
  }

  // All pairs at most cap apart; neighbors are found by lattice offsets, so
  // this never scans the quadratic pair space.
  void capped_pairs(const std::vector<Pt>& points, double sigma, double off, double cap,
                    std::vector<Segment>& out) const {
    const int c = static_cast<int>(std::ceil(cap / sigma + 1e-9));
    std::map<LatticeTuple, const Pt*> at;
    for (const auto& x : points) {
      LatticeTuple t{};
      for (int i = 0; i < p_.d; ++i)
        t[static_cast<size_t>(i)] = std::llround(x[i] / sigma - off);
      at[t] = &x;
    }
    for (const auto& [t, x] : at) {
      LatticeTuple dp{};
      dp.fill(-c);
      for (int i = p_.d; i < kMaxDim; ++i) dp[static_cast<size_t>(i)] = 0;
      bool more = true;
      while (more) {
        // lexicographically positive offsets only: each pair appears once
        bool positive = false;
        for (int i = 0; i < p_.d; ++i) {
          if (dp[static_cast<size_t>(i)] != 0) {
            positive = dp[static_cast<size_t>(i)] > 0;
            break;
          }
        }
        if (positive) {
          LatticeTuple q = t;
          for (int i = 0; i < p_.d; ++i) q[static_cast<size_t>(i)] += dp[static_cast<size_t>(i)];
          auto it = at.find(q);
          if (it != at.end()) {
            const double len = dist(*x, *it->second);
            if (len > 0.0 && len <= cap + kBoundaryTol)
              out.push_back(Segment{*x, *it->second});
          }
        }
        more = detail::advance_tuple(dp, p_.d, -c, c);
      }
    }
  }

  ConstructionParams p_;
  std::vector<double> w_, eps_, base_;
  std::vector<NetGrid> nets_;
  std::vector<Stratum> strata_;
};

}  // namespace udset
