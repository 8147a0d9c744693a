// Command-line front end: builds the nested tables, rasterizes membership,
// runs the verification suite, fits box-counting slopes, and drives the
// derivative search. One JSON config document feeds every command; flags
// override single fields. Exit codes: 0 all verdicts pass, 1 runtime or
// verdict failure, 2 invalid configuration or usage.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "udset/config.hpp"
#include "udset/construction.hpp"
#include "udset/dimension.hpp"
#include "udset/io.hpp"
#include "udset/lemmas.hpp"
#include "udset/parallel.hpp"
#include "udset/search.hpp"
#include "udset/tubes.hpp"

namespace {

using namespace udset;

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

void print_verdicts(const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts)
    std::cout << (v.pass ? "[ok]   " : "[FAIL] ") << v.name << ": " << v.detail << "\n";
}

bool all_pass(const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  return true;
}

json verdicts_json(const std::vector<Verdict>& verdicts) {
  json arr = json::array();
  for (const auto& v : verdicts)
    arr.push_back(json{{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  return arr;
}

std::filesystem::path out_path(const WorkspaceConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

// ---------------------------------------------------------------------------
// build: construct the tables, write them as JSON plus a line-per-level log.

int cmd_build(const WorkspaceConfig& cfg) {
  const Construction c(construction_params(cfg));
  std::vector<Verdict> verdicts;

  bool decreasing = true;
  for (int k = 1; k <= c.depth(); ++k) decreasing = decreasing && c.w(k) < c.w(k - 1);
  verdicts.push_back({"ladder", decreasing,
                      "w_1..w_" + std::to_string(c.depth()) +
                          (decreasing ? " strictly decreasing" : " NOT decreasing")});

  json doc{{"config", config_to_json(cfg)}, {"tables", c.tables_json()}};
  const auto tables_path = out_path(cfg, "tables.json");
  save_json(tables_path, doc);

  std::string log;
  for (int k = 1; k <= c.depth(); ++k) {
    const auto& s = c.stratum(k);
    log += "level " + std::to_string(k) + ": w=" + fmt_double(c.w(k)) +
           " eps=" + fmt_double(c.eps_true(k)) +
           " net_level=" + std::to_string(c.true_net(k).level()) +
           " lattice_points=" + std::to_string(s.lattice_points) +
           " new_pieces=" + std::to_string(s.pieces.size()) + "\n";
  }
  log += "total_pieces=" + std::to_string(c.total_pieces()) + "\n";
  atomic_write_text(out_path(cfg, "build.log"), log);

  verdicts.push_back({"build", true,
                      std::to_string(c.depth()) + " levels, " +
                          std::to_string(c.total_pieces()) + " pieces -> " +
                          tables_path.string()});
  print_verdicts(verdicts);
  return all_pass(verdicts) ? 0 : 1;
}

// ---------------------------------------------------------------------------
// render: membership raster of the slack-lambda family over [-1,1]^2, one
// query per pixel center, white where the point belongs.

int cmd_render(const WorkspaceConfig& cfg, double lambda, int resolution) {
  if (cfg.d != 2) throw std::invalid_argument("render: needs d = 2");
  if (resolution < 16 || resolution > 4096)
    throw std::invalid_argument("render: field \"resolution\" must be in [16, 4096]");
  const Construction c(construction_params(cfg));

  const auto rows = parallel_shards<std::vector<int>>(resolution, [&](int row) {
    std::vector<int> line(static_cast<size_t>(resolution));
    const double y = 1.0 - 2.0 * (row + 0.5) / resolution;
    for (int i = 0; i < resolution; ++i) {
      const double x = -1.0 + 2.0 * (i + 0.5) / resolution;
      line[static_cast<size_t>(i)] = c.in_t_set(Pt{x, y}, lambda, cfg.big_k) ? 255 : 0;
    }
    return line;
  });

  std::vector<int> pixels;
  pixels.reserve(static_cast<size_t>(resolution) * static_cast<size_t>(resolution));
  std::string csv = "x,y,member\n";
  int64_t members = 0;
  for (int row = 0; row < resolution; ++row) {
    const double y = 1.0 - 2.0 * (row + 0.5) / resolution;
    for (int i = 0; i < resolution; ++i) {
      const int v = rows[static_cast<size_t>(row)][static_cast<size_t>(i)];
      pixels.push_back(v);
      members += v ? 1 : 0;
      const double x = -1.0 + 2.0 * (i + 0.5) / resolution;
      csv += fmt_double(x) + "," + fmt_double(y) + "," + (v ? "1" : "0") + "\n";
    }
  }
  const auto pgm_path = out_path(cfg, "render.pgm");
  write_pgm(pgm_path, resolution, resolution, 255, pixels);
  atomic_write_text(out_path(cfg, "render.csv"), csv);

  std::cout << "[ok]   render: lambda=" << fmt_double(lambda) << " K=" << cfg.big_k << " "
            << members << "/" << static_cast<int64_t>(resolution) * resolution
            << " pixels inside -> " << pgm_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify: the lemma suite (shift stability, pair-scale bound, pair
// certification, family monotonicity, tube containment) plus the analytic
// cover-sum certificates, aggregated into one JSON verdict.

int cmd_verify(const WorkspaceConfig& cfg) {
  const Construction c(construction_params(cfg));
  std::vector<Verdict> verdicts;
  Rng rng(cfg.seed, 0xc11);

  // shift stability: balls around members stay inside the shifted family
  {
    int checked = 0, violations = 0;
    for (double lambda : cfg.lambdas) {
      for (int k = 1; k <= cfg.big_k; ++k) {
        const double slack = static_cast<double>(c.depth()) / k - 1.0 - lambda;
        const double psi = std::min(cfg.psi, slack);
        if (psi <= 1e-9) continue;
        const double delta = psi * c.w(Construction::window_end(k, lambda));
        const auto pts = c.sample_t(lambda, cfg.big_k, 8, rng.next_u64());
        for (const auto& x : pts) {
          const auto rep = shift_check(c, x, k, lambda, psi, delta, 150, rng.next_u64());
          checked += rep.checked;
          violations += rep.violations;
        }
      }
    }
    verdicts.push_back({"shift", violations == 0,
                        std::to_string(violations) + "/" + std::to_string(checked) +
                            " ball samples escaped the shifted family"});
  }

  // pair scale: past stage 1/(psi*eta) the net step beats eta * delta
  {
    int checked = 0, failures = 0;
    const int k_lo =
        std::max(1, static_cast<int>(std::ceil(1.0 / (cfg.psi * cfg.eta) - kBoundaryTol)));
    for (double lambda : cfg.lambdas) {
      for (int k = k_lo; k <= cfg.big_k; ++k) {
        const int n_hi = std::min(Construction::window_end(k, lambda), c.depth());
        for (int n = k; n <= n_hi; ++n) {
          const auto res = crit_alpha(c, k, n, cfg.psi, cfg.eta, 1.25 * cfg.psi * c.w(n));
          ++checked;
          failures += res.bound_holds ? 0 : 1;
        }
      }
    }
    verdicts.push_back({"crit", failures == 0,
                        std::to_string(failures) + "/" + std::to_string(checked) +
                            " window levels broke the net-scale bound"});
  }

  // pair certification: admissible tuples must certify with clean spot checks
  if (c.depth() >= 8) {
    int ok_count = 0, spot_failures = 0;
    const int trials = 12;
    for (int i = 0; i < trials; ++i) {
      const auto tup = draw_admissible_tuple(c, rng.next_u64());
      const auto cert =
          certify_pairs(c, tup.x, tup.lambda, tup.psi, tup.eta, tup.delta, tup.big_k);
      ok_count += cert.ok ? 1 : 0;
      spot_failures += cert.spot_failures;
    }
    verdicts.push_back({"certify", ok_count == trials && spot_failures == 0,
                        std::to_string(ok_count) + "/" + std::to_string(trials) +
                            " certificates, " + std::to_string(spot_failures) +
                            " spot failures"});
  } else {
    verdicts.push_back({"certify", true, "skipped (needs depth >= 8)"});
  }

  // monotonicity: larger slack and shallower query depth can only admit more
  {
    auto lambdas = cfg.lambdas;
    std::sort(lambdas.begin(), lambdas.end());
    int checked = 0, violations = 0;
    std::vector<Pt> probes;
    for (double lambda : lambdas)
      for (const auto& x : c.sample_t(lambda, cfg.big_k, 60, rng.next_u64()))
        probes.push_back(x);
    for (int i = 0; i < 300; ++i) probes.push_back(rng.in_ball(Pt(c.dim()), 1.2));
    for (const auto& x : probes) {
      for (size_t i = 0; i + 1 < lambdas.size(); ++i) {
        ++checked;
        if (c.in_t_set(x, lambdas[i], cfg.big_k) && !c.in_t_set(x, lambdas[i + 1], cfg.big_k))
          ++violations;
      }
      for (int k = cfg.big_k; k > 1; --k) {
        ++checked;
        if (c.in_t_set(x, lambdas.back(), k) && !c.in_t_set(x, lambdas.back(), k - 1))
          ++violations;
      }
    }
    verdicts.push_back({"monotone", violations == 0,
                        std::to_string(violations) + "/" + std::to_string(checked) +
                            " nesting checks failed"});
  }

  // containment: members of stage k lie inside the stage-k tube union
  {
    int members = 0, violations = 0;
    for (double lambda : cfg.lambdas) {
      for (int trial = 0; trial < 800; ++trial) {
        const int k = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(cfg.big_k)));
        const int n_hi = std::min(Construction::window_end(k, lambda), c.depth());
        const int n = k + static_cast<int>(rng.below(static_cast<uint64_t>(n_hi - k + 1)));
        const Pt x = rng.in_ball(c.sample_web_point(n, rng), 0.95 * lambda * c.w(n) + 1e-13);
        if (!c.in_m_set(x, k, lambda)) continue;
        ++members;
        violations += c.in_tube_stage(x, k) ? 0 : 1;
      }
    }
    verdicts.push_back({"containment", violations == 0,
                        std::to_string(violations) + "/" + std::to_string(members) +
                            " members left the tube union"});
  }

  // cover sums: analytic small-diameter covers stay below the geometric bound
  {
    const auto table = build_segment_table(cfg.d, 64);
    bool ok = true;
    std::string detail;
    for (int n : {6, 10, 14}) {
      const auto rep = cover_sum_certificate(table, n, 1.5, 0.5);
      ok = ok && rep.ok;
      detail += (detail.empty() ? "sum(n=" : ", sum(n=") + std::to_string(n) +
                ")=" + fmt_double(rep.sum);
    }
    verdicts.push_back({"cover", ok, detail});
  }

  const bool pass = all_pass(verdicts);
  save_json(out_path(cfg, "verify.json"),
            json{{"config", config_to_json(cfg)}, {"pass", pass},
                 {"verdicts", verdicts_json(verdicts)}});
  print_verdicts(verdicts);
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// dim: box-counting series for the web and each slack family, least-squares
// slopes, and the exact ball-cover sum identity.

int cmd_dim(const WorkspaceConfig& cfg) {
  if (cfg.d != 2) throw std::invalid_argument("dim: needs d = 2");
  const Construction c(construction_params(cfg));
  std::vector<Verdict> verdicts;
  json doc{{"config", config_to_json(cfg)}};

  std::vector<Segment> web;
  for (int k = 1; k <= cfg.big_k; ++k)
    for (const auto& piece : c.stratum(k).pieces) web.push_back(piece);

  BoxCountSeries web_series;
  for (int e = 3; e <= 8; ++e) {
    web_series.eps.push_back(std::ldexp(1.0, -e));
    web_series.counts.push_back(box_count(web, web_series.eps.back()));
  }
  const auto web_fit = dimension_fit(web_series);
  bool monotone = true;
  for (size_t i = 0; i + 1 < web_series.counts.size(); ++i)
    monotone = monotone && web_series.counts[i] <= web_series.counts[i + 1];
  verdicts.push_back({"web_slope",
                      !web_fit.degenerate && web_fit.slope >= 0.0 &&
                          web_fit.slope <= cfg.d && monotone,
                      "slope=" + fmt_double(web_fit.slope) +
                          " residual=" + fmt_double(web_fit.residual)});
  doc["web"] = json{{"eps", web_series.eps}, {"counts", web_series.counts},
                    {"slope", web_fit.slope}, {"intercept", web_fit.intercept},
                    {"residual", web_fit.residual}, {"degenerate", web_fit.degenerate}};
  atomic_write_text(out_path(cfg, "boxcounts.csv"), box_series_csv(web_series));

  json family = json::array();
  for (double lambda : cfg.lambdas) {
    BoxCountSeries series;
    for (int e = 3; e <= 6; ++e) {
      series.eps.push_back(std::ldexp(1.0, -e));
      series.counts.push_back(box_count_centers(
          2, [&](const Pt& p) { return c.in_t_set(p, lambda, cfg.big_k); },
          series.eps.back()));
    }
    bool fam_monotone = true;
    for (size_t i = 0; i + 1 < series.counts.size(); ++i)
      fam_monotone = fam_monotone && series.counts[i] <= series.counts[i + 1];
    // a thin family can miss every cell center; a flat zero series is
    // degenerate by construction, not a failed verdict
    const auto fit = dimension_fit(series);
    const bool pass =
        fam_monotone && (fit.degenerate || (fit.slope >= 0.0 && fit.slope <= cfg.d));
    verdicts.push_back({"family_slope(lambda=" + fmt_double(lambda) + ")", pass,
                        fit.degenerate ? "degenerate series"
                                       : "slope=" + fmt_double(fit.slope) +
                                             " residual=" + fmt_double(fit.residual)});
    family.push_back(json{{"lambda", lambda}, {"eps", series.eps},
                          {"counts", series.counts}, {"slope", fit.slope},
                          {"residual", fit.residual}, {"degenerate", fit.degenerate}});
  }
  doc["family"] = family;

  {
    const Segment unit{Pt{0.0, 0.0}, Pt{1.0, 0.0}};
    bool ok = true;
    json covers = json::array();
    for (int k : {4, 8, 16, 64}) {
      const auto balls = cover_tube(unit, k);
      for (double r : {1.2, 1.5, 2.0}) {
        const double sum = hausdorff_sum(balls, r);
        const double expect = std::pow(4.0, r) * std::pow(static_cast<double>(k), 1.0 - r);
        ok = ok && std::abs(sum - expect) <= 1e-12 * expect;
        covers.push_back(json{{"k", k}, {"r", r}, {"sum", sum}, {"expect", expect}});
      }
    }
    verdicts.push_back({"cover_sum", ok, "4^r k^(1-r) identity over k in {4,8,16,64}"});
    doc["covers"] = covers;
  }

  const bool pass = all_pass(verdicts);
  doc["pass"] = pass;
  save_json(out_path(cfg, "dim.json"), doc);
  print_verdicts(verdicts);
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// search: derivative hill climb on one library function, report plus profile
// CSV for plotting.

int cmd_search(const WorkspaceConfig& cfg, const std::string& fn_name) {
  const Construction c(construction_params(cfg));
  const auto library = test_function_library(cfg.d, &c);
  const LipschitzFunction* chosen = nullptr;
  std::string names;
  for (const auto& f : library) {
    names += (names.empty() ? "" : ", ") + f.name;
    if (f.name == fn_name) chosen = &f;
  }
  if (chosen == nullptr)
    throw std::invalid_argument("search: unknown function \"" + fn_name +
                                "\"; available: " + names);

  const int budget = 8;
  const auto rep = search_almost_max(*chosen, cfg.lambdas.front(), cfg.big_k, budget,
                                     cfg.seed, c, cfg.eta);

  save_json(out_path(cfg, "search_" + fn_name + ".json"),
            json{{"config", config_to_json(cfg)}, {"function", fn_name},
                 {"report", diff_report_to_json(rep)}});
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < rep.profile.scales.size(); ++i)
    rows.push_back({rep.profile.scales[i], rep.profile.errors[i]});
  atomic_write_text(out_path(cfg, "search_" + fn_name + "_profile.csv"),
                    csv_table({"scale", "error"}, rows));

  std::cout << "[ok]   search: " << fn_name << " estimate=" << fmt_double(rep.estimate)
            << " lambda=" << fmt_double(rep.lambda) << " steps=" << rep.steps.size()
            << " stop=\"" << rep.stop_reason << "\"\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nested segment family workbench"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<double> lambda_flag;
  std::optional<int> depth_flag;
  std::optional<uint64_t> seed_flag;
  std::optional<std::string> out_flag;
  int resolution = 256;
  std::string function_name = "linear";

  app.add_option("--config", config_path, "workspace config JSON path");
  app.add_option("--lambda", lambda_flag, "override the config lambda list with one value");
  app.add_option("--depth", depth_flag, "override the query depth K");
  app.add_option("--seed", seed_flag, "override the RNG seed");
  app.add_option("--out", out_flag, "override the output directory");

  auto* build = app.add_subcommand("build", "build the tables, write JSON + log");
  auto* render = app.add_subcommand(
      "render", "rasterize membership at the largest configured lambda to PGM + CSV");
  render->add_option("--resolution", resolution, "pixels per side of the [-1,1]^2 raster");
  auto* verify = app.add_subcommand("verify", "run the verification suite, write verdict JSON");
  auto* dim = app.add_subcommand("dim", "box-counting slopes and cover-sum certificates");
  auto* search = app.add_subcommand("search", "derivative hill climb on a library function");
  search->add_option("--function", function_name, "library function name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; every real parse error is a usage error.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  WorkspaceConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (lambda_flag) cfg.lambdas = {*lambda_flag};
    if (depth_flag) cfg.big_k = *depth_flag;
    if (seed_flag) cfg.seed = *seed_flag;
    if (out_flag) cfg.out_dir = *out_flag;
    validate_config(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (build->parsed()) return cmd_build(cfg);
    if (render->parsed()) return cmd_render(cfg, cfg.lambdas.back(), resolution);
    if (verify->parsed()) return cmd_verify(cfg);
    if (dim->parsed()) return cmd_dim(cfg);
    if (search->parsed()) return cmd_search(cfg, function_name);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
