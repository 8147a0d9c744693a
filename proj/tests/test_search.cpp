#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>

#include "udset/construction.hpp"
#include "udset/rng.hpp"
#include "udset/search.hpp"

using namespace udset;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {
const Construction& deep2d() {
  static Construction c(ConstructionParams::defaults(2, 8));
  return c;
}
}  // namespace

TEST_CASE("test function library declares honest Lipschitz constants", "[search]") {
  const auto& c = deep2d();

  SECTION("stock entries and table-backed entry") {
    const auto plain = test_function_library(2);
    REQUIRE(plain.size() == 4);
    CHECK(plain[0].name == "linear");
    CHECK(plain[1].name == "smooth");
    CHECK(plain[2].name == "maxaffine");
    CHECK(plain[3].name == "kink");
    const auto with_tables = test_function_library(2, &c);
    REQUIRE(with_tables.size() == 5);
    CHECK(with_tables[4].name == "webdist");

    const auto line1d = test_function_library(1);
    REQUIRE(line1d.size() == 4);
    CHECK(line1d[0](Pt{0.3}) == Approx(0.18).epsilon(1e-12));
  }

  SECTION("sampled difference quotients never beat the declared constant") {
    const auto lib = test_function_library(2, &c);
    for (size_t fi = 0; fi < lib.size(); ++fi) {
      const auto& f = lib[fi];
      // table-backed evaluations pay for bucket scans; keep those light
      const int pairs = f.name == "webdist" ? 300 : 4000;
      Rng rng(fi, 0x11f);
      INFO("function " << f.name);
      for (int i = 0; i < pairs; ++i) {
        Pt a(2), b(2);
        for (int k = 0; k < 2; ++k) {
          a[k] = rng.uniform(-1.2, 1.2);
          b[k] = rng.uniform(-1.2, 1.2);
        }
        const double d = dist(a, b);
        if (d < 1e-9) continue;
        CHECK(std::abs(f(a) - f(b)) <= f.lip * d * (1.0 + 1e-9) + 1e-15);
      }
    }
  }

  SECTION("webdist vanishes on the level-1 web and saturates far away") {
    const auto lib = test_function_library(2, &c);
    const auto& f = lib[4];
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      const Pt xw = c.sample_web_point(1, rng);
      CHECK(f(xw) <= kBoundaryTol);
    }
    // deep web points sit far from the sparse level-1 web
    bool off_handle = false;
    for (int i = 0; i < 40 && !off_handle; ++i)
      off_handle = f(c.sample_web_point(8, rng)) > 1e-6;
    CHECK(off_handle);
    CHECK(f(Pt{1.9, 1.9}) == 0.0625);
  }

  SECTION("bad dimensions are rejected") {
    CHECK_THROWS_WITH(test_function_library(0), ContainsSubstring("bad dimension"));
    CHECK_THROWS_WITH(test_function_library(9), ContainsSubstring("bad dimension"));
    CHECK_THROWS_WITH(test_function_library(3, &c), ContainsSubstring("dimension mismatch"));
  }
}

TEST_CASE("directional quotients expose one-sided kinks", "[search]") {
  const auto lib = test_function_library(2);

  SECTION("linear functions give the exact derivative at every scale") {
    const auto& f = lib[0];
    const auto est = directional_quotient(f, Pt{0.1, -0.2}, Pt{1.0, 0.0}, std::ldexp(1.0, -10));
    CHECK(est.value == Approx(0.6).margin(1e-12));
    CHECK(est.richardson == Approx(0.6).margin(1e-12));
    CHECK(est.forward == Approx(0.6).margin(1e-10));
    CHECK(est.backward == Approx(0.6).margin(1e-10));
    CHECK_FALSE(est.kink_flag);
  }

  SECTION("radial derivative of the norm is one, exactly on dyadic data") {
    const LipschitzFunction nf{"norm", 1.0, [](const Pt& x) { return norm(x); }};
    const auto est = directional_quotient(nf, Pt{0.5, 0.0}, Pt{1.0, 0.0}, 0.125);
    CHECK(est.value == 1.0);
    CHECK(est.richardson == 1.0);
    CHECK(est.forward == 1.0);
    CHECK(est.backward == 1.0);
    CHECK(est.gap == 0.0);
    CHECK_FALSE(est.kink_flag);
  }

  SECTION("the fold splits the one-sided quotients") {
    const auto& f = lib[3];
    const auto est = directional_quotient(f, Pt{0.0, 0.0}, Pt{0.8, 0.6}, std::ldexp(1.0, -10));
    CHECK(est.value == Approx(0.0).margin(1e-12));
    CHECK(est.forward == Approx(1.0).epsilon(1e-12));
    CHECK(est.backward == Approx(-1.0).epsilon(1e-12));
    CHECK(est.gap == Approx(2.0).epsilon(1e-12));
    CHECK(est.kink_flag);
  }

  SECTION("away from the fold the function is locally linear") {
    const auto& f = lib[3];
    const auto est = directional_quotient(f, Pt{0.25, 0.0}, Pt{0.8, 0.6}, std::ldexp(1.0, -10));
    CHECK(est.value == Approx(1.0).epsilon(1e-12));
    CHECK(est.gap <= 1e-12);
    CHECK_FALSE(est.kink_flag);
  }

  SECTION("degenerate inputs are rejected") {
    const auto& f = lib[0];
    CHECK_THROWS_WITH(directional_quotient(f, Pt{0.0, 0.0}, Pt{1.0, 0.0}, 0.0),
                      ContainsSubstring("positive"));
    CHECK_THROWS_WITH(directional_quotient(f, Pt{0.0, 0.0}, Pt{0.0, 0.0}, 0.1),
                      ContainsSubstring("zero direction"));
  }
}

TEST_CASE("frechet profiles separate smooth points from kinks", "[search]") {
  const auto lib = test_function_library(2);
  const std::vector<double> scales = {std::ldexp(1.0, -4), std::ldexp(1.0, -6),
                                      std::ldexp(1.0, -8), std::ldexp(1.0, -10)};

  SECTION("a linear function matches its rank-one model to rounding") {
    const auto& f = lib[0];
    const Pt g{0.6, -0.3};
    const auto prof = frechet_profile(f, Pt{0.1, 0.2}, g, norm(g), scales, 64, 7);
    REQUIRE(prof.scales.size() == 4);
    for (double err : prof.errors) CHECK(err <= 1e-11);
  }

  SECTION("no single derivative explains the fold point") {
    const auto& f = lib[3];
    const auto prof = frechet_profile(f, Pt{0.0, 0.0}, Pt{0.8, 0.6}, 0.0, scales, 256, 9);
    for (double err : prof.errors) {
      CHECK(err >= 0.4);
      CHECK(err <= f.lip * (1.0 + 1e-9));
    }
  }

  SECTION("off the fold the profile collapses with the measured derivative") {
    const auto& f = lib[3];
    const Pt x{0.25, 0.0};
    const double d = directional_quotient(f, x, Pt{0.8, 0.6}, std::ldexp(1.0, -12)).richardson;
    const auto prof = frechet_profile(f, x, Pt{0.8, 0.6}, d, scales, 128, 11);
    for (double err : prof.errors) CHECK(err <= 1e-9);
  }

  SECTION("profiles are reproducible for a fixed seed") {
    const auto& f = lib[2];
    const auto a = frechet_profile(f, Pt{0.3, -0.1}, Pt{1.0, 0.0}, 0.2, scales, 32, 21);
    const auto b = frechet_profile(f, Pt{0.3, -0.1}, Pt{1.0, 0.0}, 0.2, scales, 32, 21);
    CHECK(a.errors == b.errors);
  }

  SECTION("degenerate inputs are rejected") {
    const auto& f = lib[0];
    const std::vector<double> three = {0.5, 0.25, 0.125};
    CHECK_THROWS_WITH(frechet_profile(f, Pt{0.0, 0.0}, Pt{1.0, 0.0}, 0.0, three, 8, 1),
                      ContainsSubstring("at least 4 scales"));
    CHECK_THROWS_WITH(frechet_profile(f, Pt{0.0, 0.0}, Pt{1.0, 0.0}, 0.0, scales, 0, 1),
                      ContainsSubstring("at least one direction"));
    CHECK_THROWS_WITH(frechet_profile(f, Pt{0.0, 0.0}, Pt{0.0, 0.0}, 0.0, scales, 8, 1),
                      ContainsSubstring("zero direction"));
    const std::vector<double> negative = {0.5, 0.25, -0.125, 0.0625};
    CHECK_THROWS_WITH(frechet_profile(f, Pt{0.0, 0.0}, Pt{1.0, 0.0}, 0.0, negative, 8, 1),
                      ContainsSubstring("positive"));
  }
}

TEST_CASE("increment closeness margins have a closed form on the norm", "[search]") {
  const LipschitzFunction nf{"norm", 1.0, [](const Pt& x) { return norm(x); }};

  SECTION("antipodal points on the sphere") {
    const auto res = condition_ii_margin(nf, Pt{0.0, -1.0}, Pt{0.0, 1.0}, Pt{0.0, 1.0},
                                         Pt{0.0, 1.0}, 16);
    REQUIRE(res.applicable);
    CHECK(res.d_base == -1.0);
    CHECK(res.d_comp == 1.0);
    CHECK(res.k_const == 25.0 * std::sqrt(2.0));
    // increments differ by exactly 2t while the bound allows ~50t; the
    // margin shrinks linearly toward the finest sampled scale
    const double t = std::ldexp(1.0, -16);
    const double expect = 25.0 * std::sqrt(2.0) * std::sqrt(2.0) * t - 2.0 * t;
    CHECK(res.worst_margin == Approx(expect).epsilon(1e-12));
    CHECK(res.worst_t == t);
  }

  SECTION("comparing a point against itself is tight") {
    const auto lib = test_function_library(2);
    const auto res = condition_ii_margin(lib[0], Pt{0.2, 0.1}, Pt{1.0, 0.0}, Pt{0.2, 0.1},
                                         Pt{1.0, 0.0}, 8);
    REQUIRE(res.applicable);
    CHECK(res.d_comp == res.d_base);
    CHECK(res.worst_margin == 0.0);
  }

  SECTION("a smaller competitor derivative is out of scope") {
    const auto res = condition_ii_margin(nf, Pt{0.0, 1.0}, Pt{0.0, 1.0}, Pt{0.0, -1.0},
                                         Pt{0.0, 1.0}, 8);
    CHECK_FALSE(res.applicable);
    CHECK(res.d_base == 1.0);
    CHECK(res.d_comp == -1.0);
  }

  SECTION("degenerate inputs are rejected") {
    CHECK_THROWS_WITH(
        condition_ii_margin(nf, Pt{0.0, 1.0}, Pt{0.0, 1.0}, Pt{0.0, 1.0}, Pt{0.0, 1.0}, 0),
        ContainsSubstring("t samples"));
  }
}

TEST_CASE("search chains one certified step at full depth", "[search]") {
  const auto& c = deep2d();
  const auto lib = test_function_library(2, &c);
  const auto& flin = lib[0];

  SECTION("budget zero reproduces the raw chord scan") {
    const auto rep = search_almost_max(flin, 0.0, 4, 0, 123, c);

    double oracle = 0.0;
    for (int tau = 1; tau <= 4; ++tau)
      for (const auto& piece : c.stratum(tau).pieces)
        oracle = std::max(oracle, std::abs(flin(piece.b) - flin(piece.a)) / piece.length());
    CHECK(rep.scan_best.estimate == Approx(oracle).epsilon(1e-12));

    REQUIRE(rep.per_stratum.size() == 4);
    double per_max = 0.0;
    for (const auto& s : rep.per_stratum) per_max = std::max(per_max, s.estimate);
    CHECK(rep.scan_best.estimate == per_max);

    REQUIRE(rep.steps.size() == 1);
    CHECK(rep.steps[0].index == 0);
    // at lambda 0 every stratum-1 chord passes the public test, so the
    // seed is at least as good as the stratum-1 raw maximum
    CHECK(rep.steps[0].estimate >= rep.per_stratum[0].estimate);
    CHECK(rep.estimate == rep.steps[0].estimate);
    CHECK(rep.lambda == 0.0);
    CHECK_FALSE(rep.budget_exhausted);
    CHECK_FALSE(rep.depth_exhausted);
    CHECK(rep.estimate <= flin.lip * (1.0 + 1e-9));
    CHECK(c.in_t_set(rep.x, 0.0, 4));
    CHECK(rep.margins.size() == 1);
    CHECK(rep.profile.scales.size() == 6);
  }

  SECTION("full-depth chain certifies exactly one move") {
    const auto rep = search_almost_max(flin, 0.0, 4, 3, 2024, c);

    REQUIRE(rep.steps.size() == 2);
    const auto& mv = rep.steps[1];
    CHECK(mv.certified);
    CHECK(mv.accepted);
    CHECK(mv.lambda == 0.0);
    CHECK(mv.psi == 0.5);
    CHECK(mv.cert.ok);
    CHECK(mv.cert.spot_failures == 0);
    CHECK(mv.cert.k_star > 4);
    CHECK(mv.cert.k_star == mv.cert.n_star);
    for (const auto& chk : mv.cert.level_checks) {
      CHECK_FALSE(chk.via_closure);
      CHECK(chk.margin >= -kBoundaryTol);
    }

    CHECK(mv.estimate >= rep.steps[0].estimate);
    CHECK(rep.estimate == mv.estimate);
    CHECK(rep.estimate <= flin.lip * (1.0 + 1e-9));
    CHECK(rep.lambda == 0.5);

    // the second step wants a deeper ladder than eight stages provide
    CHECK(rep.depth_exhausted);
    CHECK_FALSE(rep.budget_exhausted);
    CHECK_THAT(rep.stop_reason, ContainsSubstring("construction depth"));

    CHECK(c.in_t_set(rep.steps[0].x, 0.0, 4));
    CHECK(c.in_t_set(mv.x, 0.5, 4));

    REQUIRE(rep.margins.size() == 2);
    CHECK(rep.margins[1].applicable);
    CHECK(rep.margins[1].worst_margin == 0.0);
    CHECK(rep.profile.d_value == rep.estimate);
    for (double err : rep.profile.errors) CHECK(err <= 2.0 * flin.lip * (1.0 + 1e-9));
  }

  SECTION("constant functions accept flat moves and exhaust the budget") {
    const LipschitzFunction cf{"const", 1.0, [](const Pt&) { return 1.0; }};
    const auto rep = search_almost_max(cf, 0.0, 4, 1, 5, c);
    REQUIRE(rep.steps.size() == 2);
    CHECK(rep.steps[1].certified);
    CHECK(rep.steps[1].accepted);
    CHECK(rep.steps[1].estimate == 0.0);
    CHECK(rep.estimate == 0.0);
    CHECK(rep.lambda == 0.5);
    CHECK(rep.budget_exhausted);
    CHECK_FALSE(rep.depth_exhausted);
    CHECK_THAT(rep.stop_reason, ContainsSubstring("budget"));
    for (double err : rep.profile.errors) CHECK(err == 0.0);
  }

  SECTION("runs are deterministic for a fixed seed") {
    const auto a = search_almost_max(flin, 0.0, 4, 3, 77, c);
    const auto b = search_almost_max(flin, 0.0, 4, 3, 77, c);
    CHECK(diff_report_to_json(a).dump() == diff_report_to_json(b).dump());
  }

  SECTION("precondition violations are loud") {
    CHECK_THROWS_WITH(search_almost_max(flin, 1.0, 4, 1, 1, c), ContainsSubstring("[0, 1)"));
    CHECK_THROWS_WITH(search_almost_max(flin, -0.1, 4, 1, 1, c), ContainsSubstring("[0, 1)"));
    CHECK_THROWS_WITH(search_almost_max(flin, 0.0, 9, 1, 1, c),
                      ContainsSubstring("built tables"));
    CHECK_THROWS_WITH(search_almost_max(flin, 0.0, 0, 1, 1, c),
                      ContainsSubstring("built tables"));
    CHECK_THROWS_WITH(search_almost_max(flin, 0.0, 4, -1, 1, c),
                      ContainsSubstring("negative budget"));
    CHECK_THROWS_WITH(search_almost_max(flin, 0.0, 4, 1, 1, c, 0.0), ContainsSubstring("eta"));
    CHECK_THROWS_WITH(search_almost_max(flin, 0.9, 8, 1, 1, c),
                      ContainsSubstring("window exceeds"));
  }
}

TEST_CASE("diff reports serialize the full trail", "[search]") {
  const auto& c = deep2d();
  const auto lib = test_function_library(2, &c);
  const auto rep = search_almost_max(lib[0], 0.0, 4, 1, 42, c);
  const json j = diff_report_to_json(rep);

  const std::set<std::string> expected = {
      "scan", "scan_best", "steps", "x", "e", "estimate", "lambda",
      "budget_exhausted", "depth_exhausted", "stop_reason", "profile", "margins"};
  std::set<std::string> got;
  for (const auto& [key, value] : j.items()) got.insert(key);
  CHECK(got == expected);

  CHECK(j["scan"].size() == 4);
  REQUIRE(j["steps"].size() == rep.steps.size());
  REQUIRE(rep.steps.size() == 2);
  CHECK(j["steps"][1].contains("certificate"));
  CHECK(j["steps"][1]["certificate"]["k_star"].get<int>() > 4);
  CHECK(j["profile"]["scales"].size() == 6);
  CHECK(j["margins"].size() == rep.margins.size());
  CHECK(j["estimate"].get<double>() == rep.estimate);
  CHECK(j["x"].size() == 2);
}
