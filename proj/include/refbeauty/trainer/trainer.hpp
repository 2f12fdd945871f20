// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Alternating least-squares GAN training of the translator.
//
// Each step performs one discriminator update followed by one update of the
// encoders, MLP and decoder. During training the beautified image is always
// decode(E_c(A), E_s(B)); weighted style mixing is an inference-time feature.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "refbeauty/data/loader.hpp"
#include "refbeauty/discriminator.hpp"
#include "refbeauty/generator/translator.hpp"
#include "refbeauty/losses.hpp"
#include "refbeauty/perception/backbone.hpp"
#include "refbeauty/trainer/config.hpp"

namespace refbeauty {

struct IterationRecord {
  int64_t iteration = 0;
  double learning_rate = 0.0;
  double d_loss = 0.0;
  LossBundle losses;

  bool operator==(const IterationRecord&) const = default;
};

void to_json(nlohmann::json& j, const IterationRecord& r);
void from_json(const nlohmann::json& j, IterationRecord& r);

/// Data-stream positions and manifest identities stored with a checkpoint.
struct TrainingProgress {
  data::LoaderCursor cursor_a;
  data::LoaderCursor cursor_b;
  std::map<std::string, std::string> manifest_digests;
};

class Trainer {
 public:
  /// Seeds torch with config.seed and builds fresh translator/discriminator.
  /// The backbone is frozen for the lifetime of the trainer.
  Trainer(TrainConfig config, PerceptionBackbone backbone,
          std::shared_ptr<FeatureExtractor> perceptual_extractor = nullptr);

  /// One discriminator update then one generator-side update at the current
  /// iteration's learning rate. Advances the iteration counter.
  /// Throws NonFiniteLossError (before any parameter update) on NaN/inf.
  IterationRecord train_step(const torch::Tensor& batch_a, const torch::Tensor& batch_b);

  /// Computes the generator-side terms without updating anything.
  LossTerms compute_losses(const torch::Tensor& batch_a, const torch::Tensor& batch_b);

  void save_checkpoint(const std::filesystem::path& path, const TrainingProgress& progress = {}) const;
  /// Restores weights, optimizer state and iteration counter.
  TrainingProgress load_checkpoint(const std::filesystem::path& path);

  int64_t iteration() const { return iteration_; }
  void set_iteration(int64_t t) { iteration_ = t; }
  double current_learning_rate() const { return learning_rate_at(config_, iteration_); }

  const TrainConfig& config() const { return config_; }
  Translator& translator() { return translator_; }
  MultiScaleDiscriminator& discriminator() { return discriminator_; }
  PerceptionBackbone& backbone() { return backbone_; }

  std::vector<torch::Tensor> generator_parameters() const;
  std::vector<torch::Tensor> discriminator_parameters() const;

 private:
  void apply_learning_rate(double lr);

  TrainConfig config_;
  PerceptionBackbone backbone_;
  std::shared_ptr<FeatureExtractor> perceptual_;
  Translator translator_{nullptr};
  MultiScaleDiscriminator discriminator_{nullptr};
  std::unique_ptr<torch::optim::Adam> gen_opt_;
  std::unique_ptr<torch::optim::Adam> dis_opt_;
  int64_t iteration_ = 0;
};

/// Loads the backbone named by the config (or builds the explicit stub).
PerceptionBackbone make_training_backbone(const TrainConfig& config);

/// Called after every iteration; return false to stop (a checkpoint is written).
using IterationCallback = std::function<bool(const IterationRecord&)>;

struct TrainingResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path log_path;
  int64_t iterations_run = 0;
  bool stopped_early = false;
};

/// Full loop over manifests A and B with periodic checkpoints and a JSON-lines
/// log (out_dir/train_log.jsonl). With `resume`, continues from that checkpoint.
TrainingResult run_training(const TrainConfig& config, const std::optional<std::filesystem::path>& resume = {},
                            const IterationCallback& callback = {});

/// Translator + backbone restored from a training checkpoint for inference.
struct LoadedModel {
  TrainConfig config;
  Translator translator{nullptr};
  PerceptionBackbone backbone{nullptr};
  int64_t iteration = 0;
  std::string digest;
};

/// `backbone_override`, when given, replaces the embedded backbone.
LoadedModel load_model(const std::filesystem::path& checkpoint,
                       const std::optional<std::filesystem::path>& backbone_override = {});

}  // namespace refbeauty
