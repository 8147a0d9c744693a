#pragma once

// Directional difference quotients, Frechet error profiles, the
// increment-closeness inequality checker, and a hill-climbing search for
// almost-locally-maximal directional derivatives constrained to the nested
// family. Moves are certified segment pairs, so every accepted step is a
// witness the containment lemmas quantify over.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "udset/construction.hpp"
#include "udset/geometry.hpp"
#include "udset/io.hpp"
#include "udset/lemmas.hpp"
#include "udset/rng.hpp"

namespace udset {

struct LipschitzFunction {
  std::string name;
  double lip = 1.0;  // declared global Lipschitz constant, an upper bound
  std::function<double(const Pt&)> f;

  double operator()(const Pt& x) const { return f(x); }
};

// The stock test functions: linear, norm-distance to an outside point,
// max of affine pieces, folded linear (the canonical kink), and distance
// to the web of a built construction when tables are supplied.
inline std::vector<LipschitzFunction> test_function_library(int dim,
                                                            const Construction* tables = nullptr) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("test_function_library: bad dimension");
  std::vector<LipschitzFunction> lib;

  Pt g(dim);
  const double coef[kMaxDim] = {0.6, -0.3, 0.2, 0.1, -0.05, 0.04, -0.02, 0.01};
  for (int i = 0; i < dim; ++i) g[i] = coef[i];
  lib.push_back({"linear", norm(g), [g](const Pt& x) { return dot(g, x); }});

  Pt p(dim);
  p[0] = 1.5;
  if (dim > 1) p[1] = 0.75;
  lib.push_back({"smooth", 1.0, [p](const Pt& x) { return dist(x, p); }});

  std::vector<std::pair<Pt, double>> pieces;
  double affine_lip = 0.0;
  for (int m = 0; m < 4; ++m) {
    Pt a(dim);
    a[0] = 0.25 * (m - 1.5);
    if (dim > 1) a[1] = (m % 2) ? 0.5 : -0.5;
    affine_lip = std::max(affine_lip, norm(a));
    pieces.emplace_back(a, 0.1 * m - 0.2);
  }
  lib.push_back({"maxaffine", affine_lip, [pieces](const Pt& x) {
                   double best = -std::numeric_limits<double>::infinity();
                   for (const auto& [a, b] : pieces) best = std::max(best, dot(a, x) + b);
                   return best;
                 }});

  Pt v(dim);
  v[0] = 0.8;
  if (dim > 1) v[1] = 0.6;
  lib.push_back({"kink", norm(v), [v](const Pt& x) { return std::abs(dot(v, x)); }});

  if (tables) {
    if (tables->dim() != dim)
      throw std::invalid_argument("test_function_library: tables dimension mismatch");
    // The frozen set is the level-1 web alone: deeper levels fill the ball at
    // microscopic spacing, which would flatten the landscape to noise and put
    // thousands of pieces in every bucket window. The cap keeps each query
    // local; min of 1-Lipschitz maps.
    const double cap = 0.0625;
    lib.push_back({"webdist", 1.0, [tables, cap](const Pt& x) {
                     return std::min(tables->dist_to_web(x, 1, cap), cap);
                   }});
  }
  return lib;
}

// ---------------------------------------------------------------------------
// Difference quotients. The symmetric quotient can mask a kink, so the
// one-sided disagreement is reported alongside with a scale-aware flag.

struct DirectionalDerivEstimate {
  Pt x, e;
  double t = 0.0;
  double value = 0.0;       // symmetric quotient at scale t
  double richardson = 0.0;  // extrapolated from scales t and t/2
  double forward = 0.0, backward = 0.0;
  double gap = 0.0;  // |forward - backward|
  bool kink_flag = false;
};

inline DirectionalDerivEstimate directional_quotient(const LipschitzFunction& f, const Pt& x,
                                                     const Pt& e, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("directional_quotient: t must be positive");
  const double elen = norm(e);
  if (!(elen > 0.0)) throw std::invalid_argument("directional_quotient: zero direction");
  const Pt u = (1.0 / elen) * e;

  DirectionalDerivEstimate est;
  est.x = x;
  est.e = u;
  est.t = t;
  const double fx = f(x);
  auto sym = [&](double s) { return (f(x + s * u) - f(x - s * u)) / (2.0 * s); };
  est.value = sym(t);
  est.richardson = (4.0 * sym(t / 2.0) - est.value) / 3.0;
  est.forward = (f(x + t * u) - fx) / t;
  est.backward = (fx - f(x - t * u)) / t;
  est.gap = std::abs(est.forward - est.backward);
  est.kink_flag = est.gap > 10.0 * std::sqrt(t) * f.lip;
  return est;
}

// ---------------------------------------------------------------------------
// Frechet error profile: per scale rho, the worst normalized deviation of f
// from the rank-one model D*<h,e> over seeded unit directions h.

struct FrechetProfile {
  Pt x, e;
  double d_value = 0.0;
  std::vector<double> scales;
  std::vector<double> errors;
  int directions_per_scale = 0;
};

inline FrechetProfile frechet_profile(const LipschitzFunction& f, const Pt& x, const Pt& e,
                                      double d_value, const std::vector<double>& scales,
                                      int directions_per_scale, uint64_t seed) {
  if (scales.size() < 4)
    throw std::invalid_argument("frechet_profile: need at least 4 scales");
  if (directions_per_scale < 1)
    throw std::invalid_argument("frechet_profile: need at least one direction");
  const double elen = norm(e);
  if (!(elen > 0.0)) throw std::invalid_argument("frechet_profile: zero direction");

  FrechetProfile prof;
  prof.x = x;
  prof.e = (1.0 / elen) * e;
  prof.d_value = d_value;
  prof.directions_per_scale = directions_per_scale;
  const double fx = f(x);
  Rng rng(seed, 0xf3ec4e7);
  for (double rho : scales) {
    if (!(rho > 0.0)) throw std::invalid_argument("frechet_profile: scales must be positive");
    double worst = 0.0;
    for (int i = 0; i < directions_per_scale; ++i) {
      const Pt h = rng.direction(x.dim);
      const double err =
          std::abs(f(x + rho * h) - fx - d_value * rho * dot(h, prof.e)) / rho;
      worst = std::max(worst, err);
    }
    prof.scales.push_back(rho);
    prof.errors.push_back(worst);
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Increment closeness: the competitor hypothesis bound
//   |(f(x'+te) - f(x')) - (f(x+te) - f(x))| <= K * sqrt(d' - d) * |t|
// with K = 25*sqrt(2*Lip f), swept over dyadic t of both signs. A negative
// radicand d'-d makes the hypothesis moot, reported as not applicable
// rather than a failure.

struct ConditionIIMargin {
  bool applicable = false;
  double d_base = 0.0, d_comp = 0.0;
  double k_const = 0.0;
  double worst_margin = 0.0;  // min over the sweep of RHS - LHS
  double worst_t = 0.0;
};

inline ConditionIIMargin condition_ii_margin(const LipschitzFunction& f, const Pt& x,
                                             const Pt& e, const Pt& x_comp, const Pt& e_comp,
                                             int t_samples) {
  if (t_samples < 1) throw std::invalid_argument("condition_ii_margin: need t samples");
  ConditionIIMargin res;
  res.k_const = 25.0 * std::sqrt(2.0 * f.lip);
  const double t_est = std::ldexp(1.0, -20);
  res.d_base = directional_quotient(f, x, e, t_est).richardson;
  res.d_comp = directional_quotient(f, x_comp, e_comp, t_est).richardson;
  const double radicand = res.d_comp - res.d_base;
  if (radicand < 0.0) return res;
  res.applicable = true;

  const double elen = norm(e);
  const Pt u = (1.0 / elen) * e;
  const double fx = f(x), fxc = f(x_comp);
  res.worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= t_samples; ++k) {
    for (double sign : {1.0, -1.0}) {
      const double t = sign * std::ldexp(1.0, -k);
      const double lhs = std::abs((f(x_comp + t * u) - fxc) - (f(x + t * u) - fx));
      const double rhs = res.k_const * std::sqrt(radicand) * std::abs(t);
      const double margin = rhs - lhs;
      if (margin < res.worst_margin) {
        res.worst_margin = margin;
        res.worst_t = t;
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// The search. Stage one scans every indexed chord of strata 1..K and ranks
// the chord quotients; this raw maximum is the reference answer for a
// budget of zero. The certified chain then starts at the best chord whose
// midpoint the public membership test accepts at lambda_start, and each move
// asks certify_pairs for segment pairs inside the shifted family, taking the
// best pair chord and re-verifying its midpoint publicly. The lambda
// schedule psi_j = (1 - lambda_start) * 2^-(j+1) keeps lambda below one.

struct SearchStep {
  int index = 0;  // 0 is the scan seed
  double lambda = 0.0, psi = 0.0, delta = 0.0;
  Pt x, e;
  double estimate = 0.0;
  bool accepted = false;
  bool certified = false;
  Certificate cert;  // populated when certified
};

struct ScanBest {
  int stratum = 0;
  Pt x, e;
  double estimate = 0.0;
};

struct DiffReport {
  std::vector<ScanBest> per_stratum;
  ScanBest scan_best;             // raw maximum over strata 1..K
  std::vector<SearchStep> steps;  // seed plus certified moves
  Pt x, e;                        // end of the certified chain
  double estimate = 0.0;
  double lambda = 0.0;
  bool budget_exhausted = false;
  bool depth_exhausted = false;
  std::string stop_reason;
  FrechetProfile profile;                  // at the final pair
  std::vector<ConditionIIMargin> margins;  // final pair vs every visited step
};

namespace detail {

// chord quotient with the sign folded into the direction
inline void chord_estimate(const LipschitzFunction& f, const Pt& a, const Pt& b, Pt& e_out,
                           double& q_out) {
  const double len = dist(a, b);
  Pt e = (1.0 / len) * (b - a);
  double q = (f(b) - f(a)) / len;
  if (q < 0.0) {
    q = -q;
    e = -1.0 * e;
  }
  e_out = e;
  q_out = q;
}

// Base point used to represent a chord. Midpoints sit on half-lattices where
// strata pieces cross in bulk, flooding the certify candidate ball; a golden
// section point dodges every low-order rational crossing.
inline constexpr double kChordBase = 0.61803398874989485;

inline Pt chord_base(const Pt& a, const Pt& b) { return lerp(a, b, kChordBase); }

}  // namespace detail

inline DiffReport search_almost_max(const LipschitzFunction& f, double lambda_start, int big_k,
                                    int budget, uint64_t seed, const Construction& c,
                                    double eta = 0.85) {
  if (!(lambda_start >= 0.0) || lambda_start >= 1.0)
    throw std::invalid_argument("search_almost_max: lambda_start must be in [0, 1)");
  if (big_k < 1 || big_k > c.depth())
    throw std::invalid_argument("search_almost_max: depth must be within the built tables");
  if (budget < 0) throw std::invalid_argument("search_almost_max: negative budget");
  if (!(eta > 0.0) || eta > 1.0)
    throw std::invalid_argument("search_almost_max: eta must be in (0, 1]");
  if (Construction::window_end(big_k, lambda_start) > c.depth())
    throw std::invalid_argument("search_almost_max: lambda_start window exceeds built depth");

  const double lip_cap = f.lip * (1.0 + 1e-9);
  DiffReport rep;

  // stage one: exhaustive chord scan tracking the raw best per stratum and
  // the best chord whose midpoint passes the public membership test
  ScanBest chain_seed;
  bool have_seed = false;
  for (int tau = 1; tau <= big_k; ++tau) {
    ScanBest best;
    best.stratum = tau;
    for (const auto& piece : c.stratum(tau).pieces) {
      Pt e;
      double q;
      detail::chord_estimate(f, piece.a, piece.b, e, q);
      if (q > lip_cap)
        throw std::invalid_argument(
            "search_almost_max: chord quotient exceeds the declared Lipschitz constant");
      if (q > best.estimate || best.x.dim == 0) {
        best.estimate = q;
        best.e = e;
        best.x = detail::chord_base(piece.a, piece.b);
      }
      if (q > chain_seed.estimate || !have_seed) {
        const Pt base = detail::chord_base(piece.a, piece.b);
        if (c.in_t_set(base, lambda_start, big_k)) {
          chain_seed.stratum = tau;
          chain_seed.estimate = q;
          chain_seed.e = e;
          chain_seed.x = base;
          have_seed = true;
        }
      }
    }
    rep.per_stratum.push_back(best);
    if (best.estimate > rep.scan_best.estimate || rep.scan_best.stratum == 0)
      rep.scan_best = best;
  }
  if (!have_seed)
    throw std::runtime_error("search_almost_max: no publicly verifiable seed chord");

  SearchStep seed_step;
  seed_step.index = 0;
  seed_step.lambda = lambda_start;
  seed_step.x = chain_seed.x;
  seed_step.e = chain_seed.e;
  seed_step.estimate = chain_seed.estimate;
  seed_step.accepted = true;
  rep.steps.push_back(seed_step);

  double lambda = lambda_start;
  Pt x = chain_seed.x, e = chain_seed.e;
  double estimate = chain_seed.estimate;

  for (int j = 0; j < budget; ++j) {
    const double psi = (1.0 - lambda_start) * std::ldexp(1.0, -(j + 1));
    SearchStep step;
    step.index = j + 1;
    step.lambda = lambda;
    step.psi = psi;

    double d0 = 0.0;
    try {
      d0 = delta0(c, psi, eta).delta0;
    } catch (const std::invalid_argument& err) {
      rep.depth_exhausted = true;
      rep.stop_reason = err.what();
      break;
    }
    // candidate overflows shrink the ball; other failures stop the chain
    double delta_try = 0.5 * std::min(d0, 1.0 - norm(x));
    std::string fail;
    for (int attempt = 0; attempt < 6 && !step.certified; ++attempt) {
      step.delta = delta_try;
      try {
        step.cert = certify_pairs(c, x, lambda, psi, eta, delta_try, big_k);
        step.certified = true;
      } catch (const std::invalid_argument& err) {
        rep.depth_exhausted = true;
        fail = err.what();
        break;
      } catch (const std::runtime_error& err) {
        fail = err.what();
        if (fail.find("enumeration budget") == std::string::npos) break;
        delta_try *= 0.5;
      }
    }
    if (!step.certified) {
      rep.stop_reason = fail;
      break;
    }

    // best chord among the certified pairs
    double best_q = -1.0;
    Pt best_e, best_x;
    for (const auto& pair : step.cert.pairs) {
      Pt pe;
      double q;
      detail::chord_estimate(f, pair.r, pair.s, pe, q);
      if (q > lip_cap)
        throw std::invalid_argument(
            "search_almost_max: pair quotient exceeds the declared Lipschitz constant");
      if (q > best_q) {
        best_q = q;
        best_e = pe;
        best_x = detail::chord_base(pair.r, pair.s);
      }
    }
    step.x = best_x;
    step.e = best_e;
    step.estimate = best_q;
    // shift containment of the whole ball puts every chord point in the
    // shifted family on every level the public index sees
    if (!c.in_t_set(best_x, lambda + psi, big_k))
      throw std::logic_error(
          "search_almost_max: certified move failed the public membership check");

    if (best_q < estimate) {
      step.accepted = false;
      rep.steps.push_back(step);
      rep.stop_reason = "no certified pair improves the estimate";
      break;
    }
    step.accepted = true;
    rep.steps.push_back(step);
    lambda += psi;
    x = best_x;
    e = best_e;
    estimate = best_q;
    if (j + 1 == budget) {
      rep.budget_exhausted = true;
      rep.stop_reason = "step budget exhausted";
    }
  }

  rep.x = x;
  rep.e = e;
  rep.estimate = estimate;
  rep.lambda = lambda;

  const std::vector<double> scales = {std::ldexp(1.0, -6),  std::ldexp(1.0, -8),
                                      std::ldexp(1.0, -10), std::ldexp(1.0, -12),
                                      std::ldexp(1.0, -14), std::ldexp(1.0, -16)};
  rep.profile = frechet_profile(f, x, e, estimate, scales, 256, seed);
  for (const auto& step : rep.steps)
    rep.margins.push_back(condition_ii_margin(f, x, e, step.x, step.e, 16));
  return rep;
}

inline json diff_report_to_json(const DiffReport& rep) {
  auto pt_json = [](const Pt& p) {
    json a = json::array();
    for (int i = 0; i < p.dim; ++i) a.push_back(p[i]);
    return a;
  };
  json strata = json::array();
  for (const auto& s : rep.per_stratum)
    strata.push_back(json{{"stratum", s.stratum},
                          {"estimate", s.estimate},
                          {"x", pt_json(s.x)},
                          {"e", pt_json(s.e)}});
  json steps = json::array();
  for (const auto& s : rep.steps) {
    json step{{"index", s.index},       {"lambda", s.lambda},
              {"psi", s.psi},           {"delta", s.delta},
              {"estimate", s.estimate}, {"accepted", s.accepted},
              {"certified", s.certified}, {"x", pt_json(s.x)},
              {"e", pt_json(s.e)}};
    if (s.certified) {
      step["certificate"] = json{{"ok", s.cert.ok},
                                 {"k_star", s.cert.k_star},
                                 {"n_star", s.cert.n_star},
                                 {"candidates", s.cert.candidates},
                                 {"pair_count", s.cert.pairs.size()},
                                 {"spot_failures", s.cert.spot_failures}};
    }
    steps.push_back(step);
  }
  json margins = json::array();
  for (const auto& m : rep.margins)
    margins.push_back(json{{"applicable", m.applicable},
                           {"d_base", m.d_base},
                           {"d_comp", m.d_comp},
                           {"k_const", m.k_const},
                           {"worst_margin", m.applicable ? m.worst_margin : 0.0},
                           {"worst_t", m.worst_t}});
  return json{{"scan", strata},
              {"scan_best",
               json{{"stratum", rep.scan_best.stratum},
                    {"estimate", rep.scan_best.estimate},
                    {"x", pt_json(rep.scan_best.x)},
                    {"e", pt_json(rep.scan_best.e)}}},
              {"steps", steps},
              {"x", pt_json(rep.x)},
              {"e", pt_json(rep.e)},
              {"estimate", rep.estimate},
              {"lambda", rep.lambda},
              {"budget_exhausted", rep.budget_exhausted},
              {"depth_exhausted", rep.depth_exhausted},
              {"stop_reason", rep.stop_reason},
              {"profile", json{{"scales", rep.profile.scales},
                               {"errors", rep.profile.errors},
                               {"d_value", rep.profile.d_value},
                               {"directions_per_scale", rep.profile.directions_per_scale}}},
              {"margins", margins}};
}

}  // namespace udset
