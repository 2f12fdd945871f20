// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace refbeauty::data {

/// A is the target domain (to be beautified), B the reference domain.
enum class Domain { A, B };

std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);

struct ManifestEntry {
  std::filesystem::path image_path;
  Domain domain = Domain::A;
  std::set<std::string> attributes;
  std::optional<double> beauty_score;

  bool operator==(const ManifestEntry&) const = default;
};

/// Immutable list of image records. Persisted as JSON lines, one record per
/// line: {"path": ..., "domain": "A"|"B", "attributes": [...], "score": x}.
/// Relative paths are resolved against the manifest file's directory on read.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  explicit DatasetManifest(std::vector<ManifestEntry> entries);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  const ManifestEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// True when every entry carries a beauty score (and the manifest is non-empty).
  bool is_regression() const;

  /// Checks scores are either all present or all absent and within [1, 5].
  /// With check_files, also requires every image to exist and decode.
  void validate(bool check_files) const;

  void write(const std::filesystem::path& path) const;
  static DatasetManifest read(const std::filesystem::path& path);

  /// Stable digest of the serialized records (order-sensitive).
  std::string digest() const;

 private:
  std::vector<ManifestEntry> entries_;
};

std::string to_json_line(const ManifestEntry& entry);
ManifestEntry entry_from_json_line(std::string_view line, const std::filesystem::path& base_dir = {});

}  // namespace refbeauty::data
