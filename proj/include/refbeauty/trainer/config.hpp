// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "refbeauty/discriminator.hpp"
#include "refbeauty/generator/translator.hpp"
#include "refbeauty/image.hpp"
#include "refbeauty/losses.hpp"
#include "refbeauty/perception/backbone.hpp"

namespace refbeauty {

struct TrainConfig {
  int64_t batch_size = 4;
  int64_t total_iterations = 360000;
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int64_t lr_decay_every = 100000;
  double lr_decay_factor = 0.5;
  uint64_t seed = 0;

  LossWeights weights;
  BeautyTarget beauty_target = BeautyTarget::kReference;
  AdversarialMode adversarial_mode = AdversarialMode::kLeastSquares;

  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  ImageSize image_size{128, 128};

  std::filesystem::path manifest_a;
  std::filesystem::path manifest_b;
  /// Fine-tuned perception backbone. When empty, `backbone_stub_seed` must be
  /// set and a freshly initialised backbone with `backbone` config is used.
  std::filesystem::path backbone_checkpoint;
  std::optional<uint64_t> backbone_stub_seed;
  BackboneConfig backbone;

  std::filesystem::path out_dir = "runs/default";
  int64_t checkpoint_every = 10000;
  int64_t log_every = 1;

  void validate() const;

  static TrainConfig load(const std::filesystem::path& path);
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// base_lr * factor^floor(t / decay_every).
double learning_rate_at(const TrainConfig& config, int64_t iteration);

/// Zeroes the weight of one loss family: "id", "beauty" or "perceptual".
void apply_ablation(TrainConfig& config, const std::string& which);

}  // namespace refbeauty
