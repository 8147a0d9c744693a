#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "udset/construction.hpp"
#include "udset/geometry.hpp"
#include "udset/io.hpp"
#include "udset/rng.hpp"

namespace udset {

// ---------------------------------------------------------------------------
// Shift stability: if x ∈ M_k(lambda) and Delta <= psi * w_n on the whole
// (k, lambda) window, then the ball B(x, Delta) sits inside M_k(lambda+psi).
// The triangle inequality through x's witness level proves it; the checker
// samples the ball and reports any counterexample.

struct ShiftReport {
  int checked = 0;
  int violations = 0;
  int witness_level = 0;
  double witness_dist = 0.0;
  double max_excess = 0.0;  // worst overshoot of the certified bound; <= tolerance
};

inline ShiftReport shift_check(const Construction& c, const Pt& x, int k, double lambda,
                               double psi, double delta, int samples, uint64_t seed) {
  if (!(psi > 0.0)) throw std::invalid_argument("shift_check: psi must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("shift_check: delta must be positive");
  if (Construction::window_end(k, lambda + psi) > c.depth())
    throw std::invalid_argument("shift_check: shifted window exceeds built depth");
  const MWitness wit = c.m_witness(x, k, lambda);
  if (!wit.in) throw std::invalid_argument("shift_check: x is not in M_k(lambda)");
  for (int n = k; n <= Construction::window_end(k, lambda); ++n)
    if (delta > psi * c.w(n))
      throw std::invalid_argument("shift_check: delta exceeds psi*w_" + std::to_string(n) +
                                  " on the window");
  ShiftReport rep;
  rep.witness_level = wit.level;
  rep.witness_dist = wit.dist;
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    const Pt y = rng.in_ball(x, delta);
    if (!c.in_m_set(y, k, lambda + psi)) {
      ++rep.violations;
      continue;
    }
    ++rep.checked;
    const double thr = (lambda + psi) * c.w(wit.level);
    const double d = c.dist_to_web(y, wit.level, thr + delta + 1e-9);
    rep.max_excess = std::max(rep.max_excess, d - thr);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pair scale: on a window level n of a stage k deep enough that k*psi*eta >= 1,
// any Delta > psi * w_n dominates the net scale alpha = w_n/(n+1) by a factor
// better than eta.

struct CritResult {
  double alpha = 0.0;
  double eta_delta = 0.0;
  bool bound_holds = false;
};

inline CritResult crit_alpha(const Construction& c, int k, int n, double psi, double eta,
                             double delta) {
  if (k < 1 || n < k || n > c.depth())
    throw std::invalid_argument("crit_alpha: need 1 <= k <= n <= depth");
  if (!(psi > 0.0) || !(eta > 0.0) || eta > 1.0)
    throw std::invalid_argument("crit_alpha: need psi > 0 and eta in (0, 1]");
  if (k * psi * eta < 1.0 - 1e-12)
    throw std::invalid_argument("crit_alpha: stage too shallow (need k*psi*eta >= 1)");
  if (!(delta > psi * c.w(n)))
    throw std::invalid_argument("crit_alpha: delta must exceed psi*w_n");
  CritResult res;
  res.alpha = c.w(n) / (n + 1);
  res.eta_delta = eta * delta;
  res.bound_holds = res.alpha < res.eta_delta;
  return res;
}

// ---------------------------------------------------------------------------
// Admissible pair radius: below delta0 = psi*w_N/2 with N = floor(2/(psi*eta)),
// every radius admits certified pairs (the window search in certify_pairs).

struct AdmissibleRadius {
  int big_n = 0;
  double delta0 = 0.0;
};

inline AdmissibleRadius delta0(const Construction& c, double psi, double eta) {
  if (!(psi > 0.0) || psi > 1.0 || !(eta > 0.0) || eta > 1.0)
    throw std::invalid_argument("delta0: need psi and eta in (0, 1]");
  const int big_n = static_cast<int>(std::floor(2.0 / (psi * eta)));
  if (big_n < 1) throw std::invalid_argument("delta0: psi*eta too large");
  if (big_n > c.depth())
    throw std::invalid_argument("delta0: needs construction depth " + std::to_string(big_n) +
                                ", built " + std::to_string(c.depth()));
  return AdmissibleRadius{big_n, psi * c.w(big_n) / 2.0};
}

// ---------------------------------------------------------------------------
// Pair certification. Given x in the truncated T_lambda and an admissible
// Delta, locate the minimal stage k* whose window first sees Delta beat
// psi*w_n, take the minimal such window level n*, and enumerate the true
// eps-net of level n*+1 (its eps equals alpha = w_{n*}/(n*+1)) inside
// B(x, Delta). Every pair of distinct candidates spans a chord of
// R_{n*+1} (endpoints are net points, and the length bound 2*Delta <=
// 2*w_{n*-1} keeps the chord inside the level's pair family), and the
// certificate shows each chord lies in every M_l(lambda+psi), l = 1..K:
// levels l >= k* take the chord's own level inside the window, levels
// l < k* go through the shift argument via x's indexed witness.

struct CertPair {
  Pt r, s;
  double len = 0.0;
};

struct CertLevelCheck {
  int l = 0;
  bool via_closure = false;  // else via the shift argument
  int witness_level = 0;
  double margin = 0.0;  // threshold minus certified distance bound, >= 0
};

struct Certificate {
  bool ok = false;
  double lambda = 0.0, psi = 0.0, eta = 0.0;
  double delta = 0.0, delta0 = 0.0, alpha = 0.0;
  int big_k = 0, k_star = 0, n_star = 0;
  Pt x;
  int candidates = 0;
  std::vector<CertPair> pairs;
  std::vector<CertLevelCheck> level_checks;
  int spot_checks = 0, spot_failures = 0;
};

inline Certificate certify_pairs(const Construction& c, const Pt& x, double lambda,
                                 double psi, double eta, double delta, int big_k,
                                 int max_candidates = 2000) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("certify_pairs: lambda must be >= 0");
  if (!(psi > 0.0) || psi > 1.0) throw std::invalid_argument("certify_pairs: psi must be in (0, 1]");
  if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("certify_pairs: eta must be in (0, 1]");
  if (big_k < 1) throw std::invalid_argument("certify_pairs: depth must be >= 1");
  if (Construction::window_end(big_k, lambda + psi) > c.depth())
    throw std::invalid_argument("certify_pairs: shifted window exceeds built depth");

  Certificate cert;
  cert.lambda = lambda;
  cert.psi = psi;
  cert.eta = eta;
  cert.delta = delta;
  cert.big_k = big_k;
  cert.x = x;

  const AdmissibleRadius adm = delta0(c, psi, eta);
  cert.delta0 = adm.delta0;
  if (!(delta > 0.0) || delta >= adm.delta0)
    throw std::invalid_argument("certify_pairs: delta must lie in (0, delta0)");
  if (norm(x) + delta >= 1.0)
    throw std::invalid_argument("certify_pairs: B(x, delta) must stay in the unit ball");

  // x must belong to the truncated T_lambda; keep the witnesses for later
  std::vector<MWitness> witnesses(static_cast<size_t>(big_k) + 1);
  for (int l = 1; l <= big_k; ++l) {
    witnesses[static_cast<size_t>(l)] = c.m_witness(x, l, lambda);
    if (!witnesses[static_cast<size_t>(l)].in)
      throw std::invalid_argument("certify_pairs: x fails M_" + std::to_string(l) +
                                  "(lambda)");
  }

  // minimal stage whose window sees delta > psi * w_n, then the minimal level
  int k_star = 0, n_star = 0;
  for (int k = 1; Construction::window_end(k, lambda) <= c.depth(); ++k) {
    for (int n = k; n <= Construction::window_end(k, lambda); ++n) {
      if (delta > psi * c.w(n)) {
        k_star = k;
        n_star = n;
        break;
      }
    }
    if (k_star) break;
  }
  if (!k_star)
    throw std::invalid_argument(
        "certify_pairs: delta too small for built depth (no window sees it)");
  cert.k_star = k_star;
  cert.n_star = n_star;
  if (n_star + 1 > c.depth())
    throw std::invalid_argument("certify_pairs: needs construction depth " +
                                std::to_string(n_star + 1) + ", built " +
                                std::to_string(c.depth()));
  // the admissible radius shuts out shallow stages, so k* clears the crit bar
  if (k_star * psi * eta < 1.0 - 1e-9)
    throw std::logic_error("certify_pairs: k* below crit threshold");
  const CritResult crit = crit_alpha(c, k_star, n_star, psi, eta, delta);
  cert.alpha = crit.alpha;
  if (!crit.bound_holds) throw std::logic_error("certify_pairs: alpha bound failed");

  // candidate net points of level n*+1 near x; eps_true(n*+1) is alpha
  const NetGrid& net = c.true_net(n_star + 1);
  if (net.eps() != cert.alpha)
    throw std::logic_error("certify_pairs: net scale mismatch");
  auto candidates = net.points_in_ball(x, delta, /*closed=*/false);
  cert.candidates = static_cast<int>(candidates.size());
  if (cert.candidates < 2)
    throw std::runtime_error("certify_pairs: fewer than two net points in B(x, delta)");
  if (cert.candidates > max_candidates)
    throw std::runtime_error("certify_pairs: " + std::to_string(cert.candidates) +
                             " candidates exceed the enumeration budget; shrink delta");

  // chord length cap that keeps pairs inside the level-(n*+1) family
  const double chord_cap =
      std::min(2.0, 2.0 * (n_star >= 2 ? c.w(n_star - 1) : c.w(0)));
  if (2.0 * delta > chord_cap + kBoundaryTol)
    throw std::logic_error("certify_pairs: delta is incompatible with the chord cap");

  // per-level checks; none of these depend on the individual pair
  for (int l = 1; l <= big_k; ++l) {
    CertLevelCheck chk;
    chk.l = l;
    if (l >= k_star) {
      chk.via_closure = true;
      chk.witness_level = std::max(l, n_star + 1);
      if (chk.witness_level > Construction::window_end(l, lambda + psi))
        throw std::logic_error("certify_pairs: closure level misses the shifted window");
      // the chord lies on R_{witness_level}; distance is exactly zero
      chk.margin = (lambda + psi) * c.w(chk.witness_level);
    } else {
      // minimality of k* gives delta <= psi*w_n across the whole (l, lambda) window
      for (int n = l; n <= Construction::window_end(l, lambda); ++n)
        if (delta > psi * c.w(n))
          throw std::logic_error("certify_pairs: k* minimality violated at level " +
                                 std::to_string(n));
      const MWitness& wit = witnesses[static_cast<size_t>(l)];
      chk.via_closure = false;
      chk.witness_level = wit.level;
      chk.margin = (lambda + psi) * c.w(wit.level) - (wit.dist + delta);
      if (chk.margin < -kBoundaryTol)
        throw std::logic_error("certify_pairs: shift margin negative at stage " +
                               std::to_string(l));
    }
    cert.level_checks.push_back(chk);
  }

  // enumerate and check every pair
  for (size_t i = 0; i < candidates.size(); ++i) {
    for (size_t jj = i + 1; jj < candidates.size(); ++jj) {
      CertPair pair;
      pair.r = candidates[i];
      pair.s = candidates[jj];
      pair.len = dist(pair.r, pair.s);
      if (pair.len == 0.0) continue;
      if (pair.len > 2.0 * delta)
        throw std::logic_error("certify_pairs: pair wider than the ball diameter");
      if (pair.len > chord_cap + kBoundaryTol)
        throw std::logic_error("certify_pairs: pair escapes the chord cap");
      cert.pairs.push_back(std::move(pair));
    }
  }
  if (cert.pairs.empty())
    throw std::runtime_error("certify_pairs: no nondegenerate pairs found");

  // spot checks: the shift path is visible to the public membership query,
  // so sample chord points and re-verify the certified distance bound
  Rng rng(0x9e3779b9);
  const size_t spot_pairs = std::min<size_t>(cert.pairs.size(), 32);
  for (size_t p = 0; p < spot_pairs; ++p) {
    const CertPair& pair = cert.pairs[p * (cert.pairs.size() / spot_pairs)];
    const Pt y = lerp(pair.r, pair.s, rng.uniform01());
    for (int l = 1; l < k_star && l <= big_k; ++l) {
      const MWitness& wit = witnesses[static_cast<size_t>(l)];
      const double thr = (lambda + psi) * c.w(wit.level) + kBoundaryTol;
      ++cert.spot_checks;
      if (c.dist_to_web(y, wit.level, thr, thr) > thr) ++cert.spot_failures;
    }
  }
  cert.ok = cert.spot_failures == 0;
  return cert;
}

// Seeded generator of admissible certification inputs for a depth-8 build.
// The ranges keep the derived pair level n*+1 within the built depth, the
// candidate enumeration small, and every precondition of certify_pairs
// satisfiable: eta and psi land N = floor(2/(psi*eta)) in {5, 6}, and delta
// sits just above psi*w_{N+1}, which pins n* = N+1.
struct AdmissibleTuple {
  double lambda = 0.0, psi = 0.0, eta = 0.0, delta = 0.0;
  int big_k = 4;
  Pt x;
};

inline AdmissibleTuple draw_admissible_tuple(const Construction& c, uint64_t seed) {
  if (c.depth() < 8)
    throw std::invalid_argument("draw_admissible_tuple: needs a depth-8 construction");
  Rng rng(seed, 0xad415533);
  AdmissibleTuple t;
  t.lambda = rng.uniform(0.0, 0.3);
  t.psi = rng.uniform(0.40, 0.42);
  t.eta = rng.uniform(0.78, 0.90);
  const int big_n = delta0(c, t.psi, t.eta).big_n;
  t.delta = t.psi * c.w(big_n + 1) * rng.uniform(1.02, 1.10);
  t.big_k = 4;
  t.x = c.sample_t(t.lambda, t.big_k, 1, rng.next_u64())[0];
  return t;
}

inline json certificate_to_json(const Certificate& cert) {
  json jx = json::array();
  for (int i = 0; i < cert.x.dim; ++i) jx.push_back(cert.x[i]);
  json levels = json::array();
  for (const auto& chk : cert.level_checks)
    levels.push_back(json{{"l", chk.l},
                          {"path", chk.via_closure ? "closure" : "shift"},
                          {"witness_level", chk.witness_level},
                          {"margin", chk.margin}});
  json pairs = json::array();
  for (const auto& pair : cert.pairs) {
    json r = json::array(), s = json::array();
    for (int i = 0; i < pair.r.dim; ++i) {
      r.push_back(pair.r[i]);
      s.push_back(pair.s[i]);
    }
    pairs.push_back(json{{"r", r}, {"s", s}, {"len", pair.len}});
  }
  return json{{"ok", cert.ok},
              {"lambda", cert.lambda},
              {"psi", cert.psi},
              {"eta", cert.eta},
              {"delta", cert.delta},
              {"delta0", cert.delta0},
              {"alpha", cert.alpha},
              {"K", cert.big_k},
              {"k_star", cert.k_star},
              {"n_star", cert.n_star},
              {"x", jx},
              {"candidates", cert.candidates},
              {"level_checks", levels},
              {"pair_count", cert.pairs.size()},
              {"pairs", pairs},
              {"spot_checks", cert.spot_checks},
              {"spot_failures", cert.spot_failures}};
}

}  // namespace udset
