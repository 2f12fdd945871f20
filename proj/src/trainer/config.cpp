// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/trainer/config.hpp"

#include <cmath>
#include <fstream>

#include "refbeauty/errors.hpp"

namespace refbeauty {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (total_iterations < 0) throw ValidationError("total_iterations must be >= 0");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (lr_decay_every < 1) throw ValidationError("lr_decay_every must be >= 1");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw ValidationError("lr_decay_factor must be in (0, 1]");
  if (checkpoint_every < 1 || log_every < 1) throw ValidationError("checkpoint_every and log_every must be >= 1");
  weights.validate();
  generator.validate();
  discriminator.validate();
  const auto m = generator.size_multiple();
  if (image_size.height % m != 0 || image_size.width % m != 0) {
    throw ValidationError("image size must be divisible by " + std::to_string(m));
  }
  const auto min_side = discriminator.min_input_side();
  if (image_size.height < min_side || image_size.width < min_side) {
    throw ValidationError("image size below the discriminator minimum of " + std::to_string(min_side));
  }
  if (backbone_checkpoint.empty() && !backbone_stub_seed) {
    throw ConfigError("set 'backbone_checkpoint' to a fine-tuned backbone or 'backbone_stub_seed' to train with an "
                      "untrained stub");
  }
}

namespace {

std::string to_string(BeautyTarget t) { return t == BeautyTarget::kReference ? "reference" : "source"; }

BeautyTarget beauty_target_from(const std::string& s) {
  if (s == "reference") return BeautyTarget::kReference;
  if (s == "source") return BeautyTarget::kSource;
  throw ConfigError("beauty_target must be 'reference' or 'source', got '" + s + "'");
}

std::string to_string(AdversarialMode m) { return m == AdversarialMode::kLeastSquares ? "lsgan" : "log"; }

AdversarialMode adversarial_mode_from(const std::string& s) {
  if (s == "lsgan") return AdversarialMode::kLeastSquares;
  if (s == "log") return AdversarialMode::kLog;
  throw ConfigError("adversarial_mode must be 'lsgan' or 'log', got '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size},
       {"total_iterations", c.total_iterations},
       {"learning_rate", c.learning_rate},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"lr_decay_every", c.lr_decay_every},
       {"lr_decay_factor", c.lr_decay_factor},
       {"seed", c.seed},
       {"weights", c.weights},
       {"beauty_target", to_string(c.beauty_target)},
       {"adversarial_mode", to_string(c.adversarial_mode)},
       {"generator", c.generator},
       {"discriminator", c.discriminator},
       {"image_height", c.image_size.height},
       {"image_width", c.image_size.width},
       {"manifest_a", c.manifest_a.string()},
       {"manifest_b", c.manifest_b.string()},
       {"backbone_checkpoint", c.backbone_checkpoint.string()},
       {"backbone", c.backbone},
       {"out_dir", c.out_dir.string()},
       {"checkpoint_every", c.checkpoint_every},
       {"log_every", c.log_every}};
  if (c.backbone_stub_seed) j["backbone_stub_seed"] = *c.backbone_stub_seed;
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.total_iterations = j.value("total_iterations", d.total_iterations);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.lr_decay_every = j.value("lr_decay_every", d.lr_decay_every);
  c.lr_decay_factor = j.value("lr_decay_factor", d.lr_decay_factor);
  c.seed = j.value("seed", d.seed);
  c.weights = j.value("weights", d.weights);
  c.beauty_target = beauty_target_from(j.value("beauty_target", std::string("reference")));
  c.adversarial_mode = adversarial_mode_from(j.value("adversarial_mode", std::string("lsgan")));
  c.generator = j.value("generator", d.generator);
  c.discriminator = j.value("discriminator", d.discriminator);
  c.image_size.height = j.value("image_height", d.image_size.height);
  c.image_size.width = j.value("image_width", d.image_size.width);
  c.manifest_a = j.value("manifest_a", std::string());
  c.manifest_b = j.value("manifest_b", std::string());
  c.backbone_checkpoint = j.value("backbone_checkpoint", std::string());
  c.backbone = j.value("backbone", d.backbone);
  if (j.contains("backbone_stub_seed") && !j["backbone_stub_seed"].is_null()) {
    c.backbone_stub_seed = j["backbone_stub_seed"].get<uint64_t>();
  } else {
    c.backbone_stub_seed.reset();
  }
  c.out_dir = j.value("out_dir", d.out_dir.string());
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.log_every = j.value("log_every", d.log_every);
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto config = j.get<TrainConfig>();
  // Relative paths in a config file are relative to the file.
  const auto base = path.parent_path();
  for (auto* p : {&config.manifest_a, &config.manifest_b, &config.backbone_checkpoint, &config.out_dir}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return config;
}

double learning_rate_at(const TrainConfig& config, int64_t iteration) {
  const auto decays = iteration / config.lr_decay_every;
  return config.learning_rate * std::pow(config.lr_decay_factor, static_cast<double>(decays));
}

void apply_ablation(TrainConfig& config, const std::string& which) {
  if (which == "id") {
    config.weights.identity = 0.0;
  } else if (which == "beauty") {
    config.weights.beauty = 0.0;
  } else if (which == "perceptual") {
    config.weights.perceptual = 0.0;
  } else {
    throw ConfigError("unknown ablation '" + which + "' (expected id, beauty or perceptual)");
  }
}

}  // namespace refbeauty
