// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/data/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "refbeauty/digest.hpp"
#include "refbeauty/errors.hpp"
#include "refbeauty/image.hpp"

namespace refbeauty::data {

using nlohmann::json;

std::string_view to_string(Domain d) { return d == Domain::A ? "A" : "B"; }

Domain domain_from_string(std::string_view s) {
  if (s == "A" || s == "a") return Domain::A;
  if (s == "B" || s == "b") return Domain::B;
  throw ValidationError("unknown domain '" + std::string(s) + "' (expected A or B)");
}

DatasetManifest::DatasetManifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {}

bool DatasetManifest::is_regression() const {
  if (entries_.empty()) return false;
  for (const auto& e : entries_) {
    if (!e.beauty_score) return false;
  }
  return true;
}

void DatasetManifest::validate(bool check_files) const {
  std::size_t scored = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.beauty_score) {
      ++scored;
      if (!(*e.beauty_score >= 1.0 && *e.beauty_score <= 5.0)) {
        throw ValidationError("entry " + std::to_string(i) + " (" + e.image_path.string() + "): beauty score " +
                              std::to_string(*e.beauty_score) + " outside [1, 5]");
      }
    }
    if (check_files) {
      if (!std::filesystem::exists(e.image_path)) {
        throw ValidationError("entry " + std::to_string(i) + ": missing image " + e.image_path.string());
      }
      load_image(e.image_path);
    }
  }
  if (scored != 0 && scored != entries_.size()) {
    throw ValidationError("manifest mixes scored and unscored entries (" + std::to_string(scored) + " of " +
                          std::to_string(entries_.size()) + " scored)");
  }
}

std::string to_json_line(const ManifestEntry& entry) {
  json j;
  j["path"] = entry.image_path.generic_string();
  j["domain"] = std::string(to_string(entry.domain));
  j["attributes"] = entry.attributes;
  if (entry.beauty_score) j["score"] = *entry.beauty_score;
  return j.dump();
}

ManifestEntry entry_from_json_line(std::string_view line, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed manifest record: ") + e.what());
  }
  if (!j.contains("path") || !j["path"].is_string()) throw ValidationError("manifest record lacks 'path'");
  ManifestEntry e;
  std::filesystem::path p = j["path"].get<std::string>();
  e.image_path = (p.is_relative() && !base_dir.empty()) ? (base_dir / p).lexically_normal() : p;
  e.domain = domain_from_string(j.value("domain", std::string("A")));
  if (j.contains("attributes")) e.attributes = j["attributes"].get<std::set<std::string>>();
  if (j.contains("score") && !j["score"].is_null()) e.beauty_score = j["score"].get<double>();
  return e;
}

void DatasetManifest::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  // In memory, paths are relative to the working directory; on disk they are
  // stored relative to the manifest so that read() finds them again.
  const auto dir = std::filesystem::absolute(path).parent_path();
  for (auto e : entries_) {
    const auto abs = std::filesystem::absolute(e.image_path).lexically_normal();
    const auto rel = abs.lexically_relative(dir);
    e.image_path = rel.empty() ? abs : rel;
    out << to_json_line(e) << '\n';
  }
}

DatasetManifest DatasetManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  const auto base = path.parent_path();
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    entries.push_back(entry_from_json_line(line, base));
  }
  return DatasetManifest(std::move(entries));
}

std::string DatasetManifest::digest() const {
  std::ostringstream os;
  for (const auto& e : entries_) os << to_json_line(e) << '\n';
  return sha256_hex(os.str());
}

}  // namespace refbeauty::data
