// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP inference service.
//
//   GET  /healthz             liveness + model digests
//   GET  /references          gallery entries {id, name, score, thumbnail}
//   POST /beautify            multipart: target (file), reference (file) or
//                             reference_id, steps | weights | w1+w2, want_scores
//   GET  /score?image=<id>    beauty score of a gallery image
//   POST /score               multipart: image (file)
//
// Every error body is {"error": {"code", "message", "precondition"}}.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "refbeauty/beautifier.hpp"
#include "refbeauty/trainer/trainer.hpp"

namespace httplib {
class Server;
}

namespace refbeauty::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path checkpoint;
  std::filesystem::path backbone_checkpoint;  // optional override
  std::filesystem::path gallery_dir;
  int max_concurrent_requests = 4;
  std::size_t max_image_bytes = 4 * 1024 * 1024;

  /// Paths exist (when given) and limits are positive. Throws ConfigError.
  void validate() const;

  static ServiceConfig load(const std::filesystem::path& path);
  /// REFBEAUTY_HOST, REFBEAUTY_PORT, REFBEAUTY_CHECKPOINT, REFBEAUTY_BACKBONE,
  /// REFBEAUTY_GALLERY override the corresponding fields when set.
  void apply_environment();
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);

struct GalleryEntry {
  std::string id;  // first 16 hex chars of the file's SHA-256
  std::string name;
  std::filesystem::path path;
  torch::Tensor image;  // resized to the model input size
  std::optional<double> score;
  std::string thumbnail_png;
};

/// Status code plus JSON body; transport independent.
struct Reply {
  int status = 200;
  nlohmann::json body;
};

Reply error_reply(int status, const std::string& code, const std::string& message, const std::string& precondition);

/// Parsed /beautify input (file contents are raw encoded bytes).
struct BeautifyInput {
  std::optional<std::string> target;
  std::optional<std::string> reference;
  std::optional<std::string> reference_id;
  std::optional<std::string> steps;
  std::optional<std::string> weights;
  std::optional<std::string> w1;
  std::optional<std::string> w2;
  bool want_scores = false;
};

class Service {
 public:
  /// Loads the checkpoint and scans the gallery; refuses to construct on a
  /// bad checkpoint.
  explicit Service(ServiceConfig config);
  ~Service();

  Reply health() const;
  Reply references() const;
  Reply beautify(const BeautifyInput& input);
  Reply score_reference(const std::string& id);
  Reply score_image(const std::string& bytes);

  /// Binds (port 0 picks a free port) and returns the bound port, or -1.
  int bind();
  /// Blocks serving requests until stop().
  bool listen_after_bind();
  void stop();

  const ServiceConfig& config() const { return config_; }
  const std::vector<GalleryEntry>& gallery() const { return gallery_; }

 private:
  void scan_gallery();
  void install_routes();
  torch::Tensor decode_request_image(const std::string& bytes) const;

  ServiceConfig config_;
  LoadedModel model_;
  std::unique_ptr<Beautifier> beautifier_;
  std::string backbone_digest_;
  std::vector<GalleryEntry> gallery_;
  std::map<std::string, std::size_t> gallery_index_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace refbeauty::service
