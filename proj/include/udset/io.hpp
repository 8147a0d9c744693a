#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace udset {

using json = nlohmann::json;

// All report writers funnel through here: write a sibling temp file, then
// rename over the target so readers never observe a partial file.
inline void atomic_write_text(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void save_json(const std::filesystem::path& path, const json& j) {
  atomic_write_text(path, j.dump(2) + "\n");
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

// Shortest decimal that round-trips a double; keeps CSV exports exact.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char s[32];
      std::snprintf(s, sizeof s, "%.*g", prec, v);
      std::sscanf(s, "%lf", &back);
      if (back == v) return s;
    }
  }
  return buf;
}

inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("csv_table: ragged row");
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += fmt_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

// Plain-text greyscale image (PGM P2). pixels are row-major, top row first,
// each value in [0, maxval].
inline void write_pgm(const std::filesystem::path& path, int width, int height,
                      int maxval, const std::vector<int>& pixels) {
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
    throw std::invalid_argument("write_pgm: bad header fields");
  if (pixels.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
    throw std::invalid_argument("write_pgm: pixel count mismatch");
  std::string out = "P2\n" + std::to_string(width) + " " +
                    std::to_string(height) + "\n" + std::to_string(maxval) + "\n";
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int v = pixels[static_cast<size_t>(y) * width + x];
      if (v < 0 || v > maxval) throw std::invalid_argument("write_pgm: pixel out of range");
      out += std::to_string(v);
      out += (x + 1 == width) ? '\n' : ' ';
    }
  }
  atomic_write_text(path, out);
}

}  // namespace udset
