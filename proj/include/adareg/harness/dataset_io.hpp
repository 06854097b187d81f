#pragma once

// Dataset interchange: `<file>.csv` holds the header y,x1..xd and one row per
// observation; `<file>.csv.meta` holds the generator tag, seed, 1-based
// adaptive columns and generator parameters in the config text format.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adareg/model_core.hpp"
#include "adareg/harness/text_format.hpp"

namespace adareg::harness {

inline std::filesystem::path meta_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".meta");
}

inline std::string dataset_csv(const AdaptiveDataset& ds) {
  std::ostringstream o;
  o << 'y';
  for (std::size_t j = 1; j <= ds.d(); ++j) o << ",x" << j;
  o << '\n';
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    o << format_double(ds.y(i));
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) o << ',' << format_double(ds.X(i, j));
    o << '\n';
  }
  return o.str();
}

inline std::string dataset_meta(const AdaptiveDataset& ds) {
  std::ostringstream o;
  o << "generator = " << quote(ds.meta.generator.empty() ? "external" : ds.meta.generator) << '\n';
  o << "seed = " << ds.meta.seed << '\n';
  o << "adaptive_cols = "
    << format_array(ds.adaptive_idx, [](std::size_t j) { return std::to_string(j + 1); }) << '\n';
  if (!ds.meta.params.empty()) {
    o << "\n[params]\n";
    for (const auto& [k, v] : ds.meta.params) o << k << " = " << quote(v) << '\n';
  }
  return o.str();
}

inline void write_dataset(const std::filesystem::path& csv, const AdaptiveDataset& ds) {
  for (const auto& [path, text] : {std::pair{csv, dataset_csv(ds)}, std::pair{meta_path(csv), dataset_meta(ds)}}) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw IoError("write failed for '" + path.string() + "'");
  }
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

inline AdaptiveDataset parse_dataset_csv(std::string_view text, std::string_view origin = "<dataset>") {
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [&](std::size_t line_no, const std::string& what) {
    return IoError(std::string(origin) + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) throw fail(1, "empty dataset");
  const auto header = split_commas(trim(line));
  if (header.size() < 2 || header[0] != "y") throw fail(1, "header must be y,x1..xd");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 1; j <= d; ++j)
    if (header[j] != "x" + std::to_string(j)) throw fail(1, "header must be y,x1..xd");

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(trim(line));
    if (cells.size() != d + 1) throw fail(line_no, "expected " + std::to_string(d + 1) + " fields");
    for (auto c : cells) {
      const auto v = parse_double(c);
      if (!v) throw fail(line_no, "'" + std::string(c) + "' is not a number");
      values.push_back(*v);
    }
    ++rows;
  }
  AdaptiveDataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  ds.y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = values.data() + i * (d + 1);
    ds.y(static_cast<Eigen::Index>(i)) = row[0];
    for (std::size_t j = 0; j < d; ++j)
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j + 1];
  }
  return ds;
}

inline void apply_meta(AdaptiveDataset& ds, std::string_view text, std::string_view origin) {
  const auto doc = KeyValueDocument::parse(text, origin);
  ConfigReader r(doc);
  if (auto v = r.string("generator")) ds.meta.generator = *v;
  if (auto v = r.integer("seed")) ds.meta.seed = *v;
  if (auto v = r.integers("adaptive_cols")) {
    ds.adaptive_idx.clear();
    for (auto j : *v) {
      if (j == 0) throw ConfigError(std::string(origin) + ": adaptive_cols are 1-based");
      ds.adaptive_idx.push_back(static_cast<std::size_t>(j - 1));
    }
  }
  for (const auto& key : doc.keys()) {
    if (key.rfind("params.", 0) == 0) {
      if (auto v = r.string(key)) ds.meta.params[key.substr(7)] = *v;
    }
  }
  r.reject_unknown();
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Loads the CSV and, when present, its sidecar.
inline AdaptiveDataset read_dataset(const std::filesystem::path& csv) {
  AdaptiveDataset ds = parse_dataset_csv(read_text(csv), csv.string());
  const auto meta = meta_path(csv);
  if (std::filesystem::exists(meta)) apply_meta(ds, read_text(meta), meta.string());
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(csv.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace adareg::harness
