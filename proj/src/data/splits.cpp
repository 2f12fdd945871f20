// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/data/splits.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "refbeauty/errors.hpp"

namespace refbeauty::data {
namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool is_integer(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::filesystem::path resolve(const std::filesystem::path& root, const std::string& name) {
  std::filesystem::path p(name);
  return (root.empty() || p.is_absolute()) ? p : root / p;
}

}  // namespace

std::string canonical_attribute(std::string name) {
  for (auto& c : name) {
    c = c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return name;
}

const std::set<std::string>& default_positive_attributes() {
  static const std::set<std::string> kDefaults = {"Arched_Eyebrows", "Heavy_Makeup", "High_Cheekbones",
                                                  "Wearing_Lipstick"};
  return kDefaults;
}

std::size_t AttributeTable::column_index(const std::string& name) const {
  const auto want = canonical_attribute(name);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (canonical_attribute(columns[i]) == want) return i;
  }
  throw ConfigError("attribute column '" + name + "' not found in attribute table");
}

std::set<std::string> AttributeTable::attributes_of(const Row& row) const {
  std::set<std::string> out;
  for (std::size_t i = 0; i < columns.size() && i < row.values.size(); ++i) {
    if (row.values[i]) out.insert(columns[i]);
  }
  return out;
}

AttributeTable read_attribute_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read attribute table " + path.string());
  AttributeTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (!have_header) {
      if (tokens.size() == 1 && is_integer(tokens[0])) continue;  // leading image count
      table.columns = std::move(tokens);
      have_header = true;
      continue;
    }
    if (tokens.size() != table.columns.size() + 1) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns.size() + 1) + " fields, got " +
                            std::to_string(tokens.size()));
    }
    AttributeTable::Row row;
    row.image = tokens[0];
    row.values.reserve(table.columns.size());
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      const auto& t = tokens[i];
      if (t == "1" || t == "+1") {
        row.values.push_back(true);
      } else if (t == "-1" || t == "0") {
        row.values.push_back(false);
      } else {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": bad attribute value '" + t + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ValidationError(path.string() + ": no attribute header line");
  return table;
}

std::map<std::string, int> read_eval_partition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read partition file " + path.string());
  std::map<std::string, int> out;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2 || !is_integer(tokens[1])) {
      throw ValidationError("malformed partition line: " + line);
    }
    out[tokens[0]] = std::stoi(tokens[1]);
  }
  return out;
}

AttributeTable filter_partition(const AttributeTable& table, const std::map<std::string, int>& partition,
                                const std::set<int>& keep) {
  AttributeTable out;
  out.columns = table.columns;
  for (const auto& row : table.rows) {
    auto it = partition.find(row.image);
    if (it != partition.end() && keep.contains(it->second)) out.rows.push_back(row);
  }
  return out;
}

std::set<int> training_partitions(bool merge_train_val) {
  return merge_train_val ? std::set<int>{0, 1} : std::set<int>{0};
}

TranslationSplit build_translation_split(const AttributeTable& table, const std::set<std::string>& positive_attributes,
                                         const std::filesystem::path& image_root) {
  if (table.rows.empty()) throw ValidationError("attribute table is empty");
  if (positive_attributes.empty()) throw ValidationError("positive attribute set is empty");

  std::vector<std::size_t> positive_cols;
  for (const auto& name : positive_attributes) positive_cols.push_back(table.column_index(name));

  std::vector<ManifestEntry> a, b;
  for (const auto& row : table.rows) {
    ManifestEntry e;
    e.image_path = resolve(image_root, row.image);
    e.attributes = table.attributes_of(row);
    const bool positive = std::any_of(positive_cols.begin(), positive_cols.end(),
                                      [&](std::size_t c) { return row.values[c]; });
    e.domain = positive ? Domain::B : Domain::A;
    (positive ? b : a).push_back(std::move(e));
  }
  return {DatasetManifest(std::move(a)), DatasetManifest(std::move(b))};
}

RegressionSplit build_regression_split(const std::vector<std::pair<std::filesystem::path, double>>& scored_images,
                                       double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction must lie strictly between 0 and 1, got " + std::to_string(train_fraction));
  }
  for (std::size_t i = 0; i < scored_images.size(); ++i) {
    const double s = scored_images[i].second;
    if (!(s >= 1.0 && s <= 5.0)) {
      throw ValidationError("entry " + std::to_string(i) + " (" + scored_images[i].first.string() + "): score " +
                            std::to_string(s) + " outside [1, 5]");
    }
  }

  std::vector<std::size_t> order(scored_images.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
  std::vector<ManifestEntry> train, test;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& [path, score] = scored_images[order[k]];
    ManifestEntry e;
    e.image_path = path;
    e.beauty_score = score;
    (k < n_train ? train : test).push_back(std::move(e));
  }
  return {DatasetManifest(std::move(train)), DatasetManifest(std::move(test))};
}

std::vector<std::pair<std::filesystem::path, double>> read_scores(const std::filesystem::path& path,
                                                                  const std::filesystem::path& image_root) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read score file " + path.string());
  std::vector<std::pair<std::filesystem::path, double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected '<image> <score>'");
    }
    double score = 0.0;
    try {
      score = std::stod(tokens[1]);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header row
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": bad score '" + tokens[1] + "'");
    }
    out.emplace_back(resolve(image_root, tokens[0]), score);
  }
  return out;
}

}  // namespace refbeauty::data
