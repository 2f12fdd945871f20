// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "refbeauty/data/manifest.hpp"

namespace refbeauty::data {

/// Per-image boolean attributes, e.g. CelebA's list_attr_celeba.txt.
struct AttributeTable {
  struct Row {
    std::string image;
    std::vector<bool> values;
  };

  std::vector<std::string> columns;
  std::vector<Row> rows;

  /// Index of a column; attribute names compare case-insensitively with
  /// spaces and underscores treated alike. Throws ConfigError naming the column.
  std::size_t column_index(const std::string& name) const;
  std::set<std::string> attributes_of(const Row& row) const;
};

/// Canonical attribute spelling: lowercase, spaces -> underscores.
std::string canonical_attribute(std::string name);

/// The four beauty-positive attributes used to form the reference domain.
const std::set<std::string>& default_positive_attributes();

/// Parses CelebA's attribute format: an optional image-count line, a header
/// line of attribute names, then `<image> <+1|-1> ...` rows.
AttributeTable read_attribute_table(const std::filesystem::path& path);

/// CelebA's list_eval_partition.txt: `<image> <0|1|2>` (train/val/test).
std::map<std::string, int> read_eval_partition(const std::filesystem::path& path);

/// Keeps only rows whose partition is listed in `keep`. Rows missing from the
/// partition map are dropped.
AttributeTable filter_partition(const AttributeTable& table, const std::map<std::string, int>& partition,
                                const std::set<int>& keep);

/// Partitions to use for training: train only, or train + validation merged.
std::set<int> training_partitions(bool merge_train_val);

struct TranslationSplit {
  DatasetManifest a;
  DatasetManifest b;
};

/// Domain B = images with at least one positive attribute, A = the rest.
/// Image paths are resolved against image_root.
TranslationSplit build_translation_split(const AttributeTable& table, const std::set<std::string>& positive_attributes,
                                         const std::filesystem::path& image_root = {});

struct RegressionSplit {
  DatasetManifest train;
  DatasetManifest test;
};

/// Seeded shuffle then cut: |train| = round(train_fraction * N).
RegressionSplit build_regression_split(const std::vector<std::pair<std::filesystem::path, double>>& scored_images,
                                       double train_fraction, uint64_t seed);

/// `<image> <score>` per line (whitespace or comma separated), as shipped
/// with SCUT-FBP5500. Relative paths resolve against image_root.
std::vector<std::pair<std::filesystem::path, double>> read_scores(const std::filesystem::path& path,
                                                                  const std::filesystem::path& image_root = {});

}  // namespace refbeauty::data
