// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Piggybacked identity/beauty feature extractor.
//
//   image -> trunk (conv + max-feature-map + max-pool blocks) -> adaptive pool
//         -> FC1 (identity features, frozen)
//         -> FC2 (beauty features, trainable) -> scorer (scalar beauty score)
//
// The trunk and FC1 stand in for a pretrained recognition network and never
// receive gradients: their parameters have requires_grad == false for the
// lifetime of the object. Only FC2 and the scorer are fine-tuned.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "refbeauty/data/manifest.hpp"
#include "refbeauty/image.hpp"

namespace refbeauty {

struct BackboneConfig {
  ImageSize input_size{128, 128};
  std::vector<int64_t> trunk_channels{16, 32, 64, 64};
  int64_t pool_size = 4;
  int64_t identity_dim = 8192;
  int64_t beauty_dim = 256;
  /// Number of trunk blocks feeding the perceptual feature map.
  int64_t perceptual_blocks = 2;

  void validate() const;
  bool operator==(const BackboneConfig&) const = default;
};

void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);

enum class BackboneState { kUninitialized, kInitialized, kPretrained, kFineTuned };
std::string_view to_string(BackboneState s);

struct PerceptionFeatures {
  torch::Tensor identity;  // (N, identity_dim), FC1 output
  torch::Tensor beauty;    // (N, beauty_dim), FC2 output
  torch::Tensor score;     // (N), raw regression output
};

struct PretrainOptions {
  int64_t steps = 200;
  int64_t batch_size = 8;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
};

/// Defaults mirror the translation trainer: Adam(0.5, 0.999), lr 1e-4, batch 4.
struct FinetuneOptions {
  int64_t epochs = 100;
  int64_t batch_size = 4;
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  uint64_t seed = 0;
};

struct FinetuneEpoch {
  int64_t epoch = 0;
  double train_mae = 0.0;
  std::optional<double> test_mae;
};

struct FinetuneLog {
  std::vector<FinetuneEpoch> epochs;
  double baseline_mae = 0.0;  // constant predictor at the training mean, on the test set when given
};

/// Max-feature-map activation: split channels in two halves, keep the max.
class MaxFeatureMapImpl : public torch::nn::Module {
 public:
  torch::Tensor forward(const torch::Tensor& x);
};
TORCH_MODULE(MaxFeatureMap);

class PerceptionBackboneImpl : public torch::nn::Module {
 public:
  explicit PerceptionBackboneImpl(BackboneConfig config = {});

  /// Seeded Kaiming initialisation of every layer. Moves the state to kInitialized.
  void initialize(uint64_t seed);

  /// Self-supervised warm-up of trunk + FC1 (4-way rotation prediction) on
  /// unlabeled images (N, 3, H, W). Stand-in for recognition pretraining.
  /// Returns the final rotation-classification accuracy.
  double pretrain(const torch::Tensor& images, const PretrainOptions& options);

  /// One pass producing identity, beauty and score. Differentiable with respect
  /// to the input. Throws NotReadyError before initialisation.
  PerceptionFeatures extract(const torch::Tensor& images);

  /// Trunk feature map used by the perceptual loss.
  torch::Tensor perceptual_features(const torch::Tensor& images);

  /// Raw scores (N). Throws NotReadyError unless the head is fine-tuned.
  torch::Tensor predict_scores(const torch::Tensor& images);
  double predict_score(const torch::Tensor& image);

  /// Trains FC2 + scorer on a scored manifest; trunk and FC1 stay frozen.
  FinetuneLog finetune(const data::DatasetManifest& train, const data::DatasetManifest* test,
                       const FinetuneOptions& options);

  /// Mean absolute error of predict_scores over a scored manifest.
  double evaluate_mae(const data::DatasetManifest& manifest);

  std::vector<torch::Tensor> frozen_parameters() const;
  std::vector<torch::Tensor> head_parameters() const;
  void set_head_trainable(bool trainable);

  std::string frozen_digest() const;
  std::string digest() const;

  const BackboneConfig& config() const { return config_; }
  BackboneState state() const { return state_; }
  const std::vector<std::string>& provenance() const { return provenance_; }

  void save(torch::serialize::OutputArchive& archive) const override;
  void load(torch::serialize::InputArchive& archive) override;
  void save_file(const std::filesystem::path& path) const;

  /// Config is read from the archive before the weights.
  static std::shared_ptr<PerceptionBackboneImpl> from_archive(torch::serialize::InputArchive& archive);
  static std::shared_ptr<PerceptionBackboneImpl> load_file(const std::filesystem::path& path);

  static double clamp_score(double raw) { return raw < 1.0 ? 1.0 : (raw > 5.0 ? 5.0 : raw); }

 private:
  torch::Tensor prepare(const torch::Tensor& images) const;
  torch::Tensor run_trunk(const torch::Tensor& x, int64_t blocks);
  torch::Tensor identity_from_input(const torch::Tensor& x);
  torch::Tensor load_resized(const data::DatasetManifest& manifest);
  void require_ready(const char* op) const;

  BackboneConfig config_;
  std::vector<torch::nn::Sequential> trunk_;
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
  torch::nn::Linear scorer_{nullptr};
  BackboneState state_ = BackboneState::kUninitialized;
  std::vector<std::string> provenance_;
};
TORCH_MODULE(PerceptionBackbone);

}  // namespace refbeauty
