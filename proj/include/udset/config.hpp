#pragma once

// Workspace configuration: one JSON document that fixes every knob a command
// needs. Command-line flags override single fields after the file is parsed;
// validation runs on the merged result before any tables are built.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "udset/construction.hpp"
#include "udset/geometry.hpp"
#include "udset/io.hpp"

namespace udset {

struct WorkspaceConfig {
  int d = 2;
  int n_max = 8;
  int big_k = 4;
  std::vector<double> lambdas = {0.0, 0.25, 0.5};
  double psi = 0.5;
  double eta = 0.85;
  uint64_t seed = 20260815;
  std::string out_dir = "out";
  int piece_budget = 600000;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

inline int field_int(const json& j, const char* name, int fallback) {
  if (!j.contains(name)) return fallback;
  const auto& v = j.at(name);
  if (!v.is_number_integer())
    config_error(std::string("field \"") + name + "\" must be an integer");
  return v.get<int>();
}

inline double field_double(const json& j, const char* name, double fallback) {
  if (!j.contains(name)) return fallback;
  const auto& v = j.at(name);
  if (!v.is_number()) config_error(std::string("field \"") + name + "\" must be a number");
  return v.get<double>();
}

inline std::string field_string(const json& j, const char* name, const std::string& fallback) {
  if (!j.contains(name)) return fallback;
  const auto& v = j.at(name);
  if (!v.is_string()) config_error(std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace detail

// Range checks shared by file loads and flag overrides. Throws
// std::invalid_argument naming the offending field.
inline void validate_config(const WorkspaceConfig& c) {
  using detail::config_error;
  if (c.d < 1 || c.d > kMaxDim)
    config_error("field \"d\" must be in [1, " + std::to_string(kMaxDim) + "]");
  if (c.n_max < 1 || c.n_max > 12) config_error("field \"n_max\" must be in [1, 12]");
  if (c.big_k < 1 || c.big_k > c.n_max) config_error("field \"k\" must be in [1, n_max]");
  if (c.lambdas.empty()) config_error("field \"lambdas\" must not be empty");
  double max_lambda = 0.0;
  for (double l : c.lambdas) {
    if (!(l >= 0.0) || !(l < 1.0)) config_error("field \"lambdas\" must lie in [0, 1)");
    max_lambda = std::max(max_lambda, l);
  }
  // Membership at level K and slack lambda scans witnesses up to
  // floor((1+lambda) K); the tables must reach that deep.
  if ((1.0 + max_lambda) * static_cast<double>(c.big_k) >
      static_cast<double>(c.n_max) + kBoundaryTol)
    config_error("fields \"lambdas\"/\"k\": (1 + max lambda) * k must not exceed n_max");
  if (!(c.psi > 0.0) || !(c.psi < 1.0)) config_error("field \"psi\" must be in (0, 1)");
  if (!(c.eta > 0.0) || !(c.eta <= 1.0)) config_error("field \"eta\" must be in (0, 1]");
  if (c.out_dir.empty()) config_error("field \"out_dir\" must not be empty");
  if (c.piece_budget < 1) config_error("field \"piece_budget\" must be positive");
}

// Strict parse: unknown fields are errors so a typo cannot silently fall back
// to a default. Missing fields keep their defaults; validation is separate so
// flag overrides can run in between.
inline WorkspaceConfig config_from_json(const json& j) {
  using detail::config_error;
  if (!j.is_object()) config_error("root must be a JSON object");
  static const char* known[] = {"d",   "n_max", "k",       "lambdas",      "psi",
                                "eta", "seed",  "out_dir", "piece_budget"};
  for (const auto& item : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* name) {
          return item.key() == name;
        }) == std::end(known))
      config_error("unknown field \"" + item.key() + "\"");
  }
  WorkspaceConfig c;
  c.d = detail::field_int(j, "d", c.d);
  c.n_max = detail::field_int(j, "n_max", c.n_max);
  c.big_k = detail::field_int(j, "k", c.big_k);
  if (j.contains("lambdas")) {
    const auto& v = j.at("lambdas");
    if (!v.is_array()) config_error("field \"lambdas\" must be an array of numbers");
    c.lambdas.clear();
    for (const auto& item : v) {
      if (!item.is_number()) config_error("field \"lambdas\" must be an array of numbers");
      c.lambdas.push_back(item.get<double>());
    }
  }
  c.psi = detail::field_double(j, "psi", c.psi);
  c.eta = detail::field_double(j, "eta", c.eta);
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_unsigned() && !v.is_number_integer())
      config_error("field \"seed\" must be an integer");
    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<int64_t>() < 0)
      config_error("field \"seed\" must be nonnegative");
    c.seed = v.get<uint64_t>();
  }
  c.out_dir = detail::field_string(j, "out_dir", c.out_dir);
  c.piece_budget = detail::field_int(j, "piece_budget", c.piece_budget);
  return c;
}

inline WorkspaceConfig load_config(const std::string& path) {
  return config_from_json(load_json(path));
}

inline json config_to_json(const WorkspaceConfig& c) {
  return json{{"d", c.d},
              {"n_max", c.n_max},
              {"k", c.big_k},
              {"lambdas", c.lambdas},
              {"psi", c.psi},
              {"eta", c.eta},
              {"seed", c.seed},
              {"out_dir", c.out_dir},
              {"piece_budget", c.piece_budget}};
}

inline ConstructionParams construction_params(const WorkspaceConfig& c) {
  auto p = ConstructionParams::defaults(c.d, c.n_max);
  p.max_total_pieces = c.piece_budget;
  return p;
}

}  // namespace udset
