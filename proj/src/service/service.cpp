// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/service/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "refbeauty/digest.hpp"
#include "refbeauty/errors.hpp"
#include "refbeauty/image.hpp"

namespace refbeauty::service {

using nlohmann::json;

namespace {

constexpr const char* kWeightPrecondition = "w1 + w2 = 1 and 0 <= w1, w2 <= 1; w2 values strictly increasing";

bool is_image_file(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".webp";
}

std::string base64(const std::vector<unsigned char>& bytes) {
  return httplib::detail::base64_encode(std::string(bytes.begin(), bytes.end()));
}

bool truthy(const std::string& s) { return s == "1" || s == "true" || s == "yes" || s == "on"; }

std::optional<double> parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// "0,0.5,1" or "[0, 0.5, 1]".
std::optional<std::vector<double>> parse_weight_list(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || std::isspace(c); }),
          s.end());
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_double(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

json score_json(const std::optional<double>& score) {
  return score ? json(*score) : json(nullptr);
}

json display_json(const std::optional<double>& score) {
  return score ? json(PerceptionBackboneImpl::clamp_score(*score)) : json(nullptr);
}

}  // namespace

void ServiceConfig::validate() const {
  if (checkpoint.empty() || !std::filesystem::exists(checkpoint)) {
    throw ConfigError("service checkpoint not found: '" + checkpoint.string() + "'");
  }
  if (!backbone_checkpoint.empty() && !std::filesystem::exists(backbone_checkpoint)) {
    throw ConfigError("backbone checkpoint not found: " + backbone_checkpoint.string());
  }
  if (!gallery_dir.empty() && !std::filesystem::is_directory(gallery_dir)) {
    throw ConfigError("gallery directory not found: " + gallery_dir.string());
  }
  if (max_concurrent_requests < 1) throw ConfigError("max_concurrent_requests must be positive");
  if (max_image_bytes < 1) throw ConfigError("max_image_bytes must be positive");
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
}

void to_json(json& j, const ServiceConfig& c) {
  j = {{"host", c.host},
       {"port", c.port},
       {"checkpoint", c.checkpoint.string()},
       {"backbone_checkpoint", c.backbone_checkpoint.string()},
       {"gallery_dir", c.gallery_dir.string()},
       {"max_concurrent_requests", c.max_concurrent_requests},
       {"max_image_bytes", c.max_image_bytes}};
}

void from_json(const json& j, ServiceConfig& c) {
  ServiceConfig d;
  c.host = j.value("host", d.host);
  c.port = j.value("port", d.port);
  c.checkpoint = j.value("checkpoint", std::string());
  c.backbone_checkpoint = j.value("backbone_checkpoint", std::string());
  c.gallery_dir = j.value("gallery_dir", std::string());
  c.max_concurrent_requests = j.value("max_concurrent_requests", d.max_concurrent_requests);
  c.max_image_bytes = j.value("max_image_bytes", d.max_image_bytes);
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read service config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto c = j.get<ServiceConfig>();
  const auto base = path.parent_path();
  for (auto* p : {&c.checkpoint, &c.backbone_checkpoint, &c.gallery_dir}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return c;
}

void ServiceConfig::apply_environment() {
  if (const char* v = std::getenv("REFBEAUTY_HOST")) host = v;
  if (const char* v = std::getenv("REFBEAUTY_PORT")) port = std::atoi(v);
  if (const char* v = std::getenv("REFBEAUTY_CHECKPOINT")) checkpoint = v;
  if (const char* v = std::getenv("REFBEAUTY_BACKBONE")) backbone_checkpoint = v;
  if (const char* v = std::getenv("REFBEAUTY_GALLERY")) gallery_dir = v;
}

Reply error_reply(int status, const std::string& code, const std::string& message, const std::string& precondition) {
  return {status, json{{"error", {{"code", code}, {"message", message}, {"precondition", precondition}}}}};
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  config_.validate();
  try {
    model_ = load_model(config_.checkpoint, config_.backbone_checkpoint.empty()
                                                ? std::nullopt
                                                : std::optional<std::filesystem::path>(config_.backbone_checkpoint));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("cannot load checkpoint " + config_.checkpoint.string() + ": " + e.what());
  }
  backbone_digest_ = model_.backbone->digest();
  beautifier_ = std::make_unique<Beautifier>(model_.translator, model_.backbone);
  scan_gallery();
  server_ = std::make_unique<httplib::Server>();
  install_routes();
}

Service::~Service() { stop(); }

void Service::scan_gallery() {
  gallery_.clear();
  gallery_index_.clear();
  if (config_.gallery_dir.empty()) return;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(config_.gallery_dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  const bool can_score = model_.backbone->state() == BackboneState::kFineTuned;
  torch::NoGradGuard no_grad;
  for (const auto& f : files) {
    GalleryEntry g;
    g.path = f;
    g.name = f.filename().string();
    g.id = sha256_file(f).substr(0, 16);
    if (gallery_index_.contains(g.id)) continue;  // duplicate content
    try {
      g.image = load_image(f, model_.config.image_size);
    } catch (const IoError& e) {
      std::cerr << "warning: skipping gallery file " << f << ": " << e.what() << '\n';
      continue;
    }
    if (can_score) g.score = model_.backbone->predict_score(g.image);
    g.thumbnail_png = base64(encode_png(resize(g.image, ImageSize{64, 64})));
    gallery_index_[g.id] = gallery_.size();
    gallery_.push_back(std::move(g));
  }
  if (gallery_.empty()) std::cerr << "warning: reference gallery is empty\n";
}

torch::Tensor Service::decode_request_image(const std::string& bytes) const {
  return decode_image(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()),
                      model_.config.image_size);
}

Reply Service::health() const {
  return {200, json{{"status", "ok"},
                    {"checkpoint_digest", model_.digest},
                    {"backbone_digest", backbone_digest_},
                    {"backbone_state", std::string(to_string(model_.backbone->state()))},
                    {"iteration", model_.iteration},
                    {"image_height", model_.config.image_size.height},
                    {"image_width", model_.config.image_size.width},
                    {"gallery_size", gallery_.size()}}};
}

Reply Service::references() const {
  json list = json::array();
  for (const auto& g : gallery_) {
    list.push_back({{"id", g.id},
                    {"name", g.name},
                    {"score", score_json(g.score)},
                    {"score_display", display_json(g.score)},
                    {"thumbnail_png_base64", g.thumbnail_png}});
  }
  json body{{"references", list}};
  if (gallery_.empty()) body["warnings"] = json::array({"reference gallery is empty"});
  return {200, body};
}

Reply Service::beautify(const BeautifyInput& in) {
  const std::string size_pre = "image bytes <= " + std::to_string(config_.max_image_bytes);
  for (const auto* f : {&in.target, &in.reference}) {
    if (*f && (*f)->size() > config_.max_image_bytes) {
      return error_reply(413, "payload_too_large",
                         "uploaded image has " + std::to_string((*f)->size()) + " bytes", size_pre);
    }
  }
  if (!in.target) return error_reply(400, "missing_target", "multipart field 'target' is required", "target present");

  // Weights.
  std::vector<double> w2s;
  if (in.weights) {
    auto parsed = parse_weight_list(*in.weights);
    if (!parsed) return error_reply(422, "invalid_weights", "cannot parse weights '" + *in.weights + "'", kWeightPrecondition);
    w2s = *parsed;
  } else if (in.w1 || in.w2) {
    auto w1 = in.w1 ? parse_double(*in.w1) : std::optional<double>();
    auto w2 = in.w2 ? parse_double(*in.w2) : std::optional<double>();
    if ((in.w1 && !w1) || (in.w2 && !w2)) {
      return error_reply(422, "invalid_weights", "weights must be numbers", kWeightPrecondition);
    }
    if (!w2) w2 = 1.0 - *w1;
    if (!w1) w1 = 1.0 - *w2;
    try {
      validate_mix_weights(*w1, *w2);
    } catch (const ValidationError& e) {
      return error_reply(422, "invalid_weights", e.what(), kWeightPrecondition);
    }
    w2s = {*w2};
  } else {
    int64_t steps = 1;
    if (in.steps) {
      auto v = parse_double(*in.steps);
      if (!v || *v != std::floor(*v) || *v < 1 || *v > 1000) {
        return error_reply(422, "invalid_steps", "steps must be an integer in [1, 1000]", "1 <= steps <= 1000");
      }
      steps = static_cast<int64_t>(*v);
    }
    w2s = linspace_weights(steps);
  }

  BeautifyRequest request;
  request.w2_values = w2s;
  request.score_outputs = in.want_scores;
  try {
    request.target = decode_request_image(*in.target);
  } catch (const IoError& e) {
    return error_reply(400, "invalid_image", std::string("target: ") + e.what(), "target is a decodable image");
  }
  if (in.reference) {
    try {
      request.reference = decode_request_image(*in.reference);
    } catch (const IoError& e) {
      return error_reply(400, "invalid_image", std::string("reference: ") + e.what(), "reference is a decodable image");
    }
  } else if (in.reference_id) {
    auto it = gallery_index_.find(*in.reference_id);
    if (it == gallery_index_.end()) {
      return error_reply(404, "unknown_reference", "no gallery reference with id '" + *in.reference_id + "'",
                         "reference_id names an entry of GET /references");
    }
    request.reference = gallery_[it->second].image;
  } else {
    return error_reply(400, "missing_reference", "provide 'reference' (file) or 'reference_id'",
                       "reference or reference_id present");
  }
  try {
    request.validate();
  } catch (const ValidationError& e) {
    return error_reply(422, "invalid_weights", e.what(), kWeightPrecondition);
  }
  if (request.score_outputs && model_.backbone->state() != BackboneState::kFineTuned) {
    return error_reply(409, "scores_unavailable", "perception backbone is not fine-tuned",
                       "backbone state is finetuned");
  }

  auto sequence = beautifier_->beautify(request);
  json frames = json::array();
  json weights = json::array();
  json scores = json::array();
  for (std::size_t i = 0; i < sequence.frames.size(); ++i) {
    const auto& f = sequence.frames[i];
    frames.push_back({{"index", i},
                      {"w1", 1.0 - f.w2},
                      {"w2", f.w2},
                      {"png_base64", base64(encode_png(f.image))},
                      {"score", score_json(f.score)},
                      {"score_display", display_json(f.score)}});
    weights.push_back(f.w2);
    scores.push_back(score_json(f.score));
  }
  return {200, json{{"frames", frames},
                    {"weights", weights},
                    {"scores", in.want_scores ? scores : json(nullptr)},
                    {"checkpoint_digest", model_.digest}}};
}

Reply Service::score_reference(const std::string& id) {
  auto it = gallery_index_.find(id);
  if (it == gallery_index_.end()) {
    return error_reply(404, "unknown_reference", "no gallery reference with id '" + id + "'",
                       "image names an entry of GET /references");
  }
  const auto& g = gallery_[it->second];
  if (!g.score) {
    return error_reply(409, "scores_unavailable", "perception backbone is not fine-tuned", "backbone state is finetuned");
  }
  return {200, json{{"id", g.id}, {"score", *g.score}, {"score_display", display_json(g.score)}}};
}

Reply Service::score_image(const std::string& bytes) {
  if (bytes.size() > config_.max_image_bytes) {
    return error_reply(413, "payload_too_large", "uploaded image has " + std::to_string(bytes.size()) + " bytes",
                       "image bytes <= " + std::to_string(config_.max_image_bytes));
  }
  if (model_.backbone->state() != BackboneState::kFineTuned) {
    return error_reply(409, "scores_unavailable", "perception backbone is not fine-tuned", "backbone state is finetuned");
  }
  torch::Tensor image;
  try {
    image = decode_request_image(bytes);
  } catch (const IoError& e) {
    return error_reply(400, "invalid_image", e.what(), "image is a decodable image");
  }
  const double s = model_.backbone->predict_score(image);
  return {200, json{{"score", s}, {"score_display", PerceptionBackboneImpl::clamp_score(s)}}};
}

void Service::install_routes() {
  auto& srv = *server_;
  const int workers = config_.max_concurrent_requests;
  srv.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(workers)); };
  // Leave room for two images plus form overhead; per-image limits are
  // enforced in the handlers so the reply carries the error envelope.
  srv.set_payload_max_length(2 * config_.max_image_bytes + (1 << 20));

  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto field = [](const httplib::Request& req, const char* name) -> std::optional<std::string> {
    if (req.has_file(name)) return req.get_file_value(name).content;
    if (req.has_param(name)) return req.get_param_value(name);
    return std::nullopt;
  };

  srv.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  srv.Get("/references", [this, send](const httplib::Request&, httplib::Response& res) { send(res, references()); });
  srv.Post("/beautify", [this, send, field](const httplib::Request& req, httplib::Response& res) {
    BeautifyInput in;
    in.target = field(req, "target");
    in.reference = field(req, "reference");
    in.reference_id = field(req, "reference_id");
    in.steps = field(req, "steps");
    in.weights = field(req, "weights");
    in.w1 = field(req, "w1");
    in.w2 = field(req, "w2");
    if (auto s = field(req, "want_scores")) in.want_scores = truthy(*s);
    send(res, beautify(in));
  });
  srv.Get("/score", [this, send](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("image")) {
      send(res, error_reply(400, "missing_image", "query parameter 'image' is required", "image=<reference id>"));
      return;
    }
    send(res, score_reference(req.get_param_value("image")));
  });
  srv.Post("/score", [this, send, field](const httplib::Request& req, httplib::Response& res) {
    auto image = field(req, "image");
    if (!image) {
      send(res, error_reply(400, "missing_image", "multipart field 'image' is required", "image present"));
      return;
    }
    send(res, score_image(*image));
  });
  srv.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    std::string code = "internal";
    int status = 500;
    try {
      std::rethrow_exception(ep);
    } catch (const ShapeError& e) {
      what = e.what();
      code = "invalid_shape";
      status = 422;
    } catch (const ValidationError& e) {
      what = e.what();
      code = "invalid_request";
      status = 422;
    } catch (const std::exception& e) {
      what = e.what();
    }
    send(res, error_reply(status, code, what, "request satisfies the endpoint contract"));
  });
  srv.set_error_handler([send](const httplib::Request&, httplib::Response& res) {
    if (res.status == 413) {
      send(res, error_reply(413, "payload_too_large", "request body exceeds the server limit", "smaller request body"));
    } else if (res.body.empty()) {
      send(res, error_reply(res.status, "http_" + std::to_string(res.status), "request failed", "valid route and method"));
    }
  });
}

int Service::bind() {
  if (config_.port == 0) return server_->bind_to_any_port(config_.host);
  return server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

bool Service::listen_after_bind() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace refbeauty::service
