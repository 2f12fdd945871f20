// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

namespace refbeauty {

/// Least-squares (default) or log-loss adversarial objective.
enum class AdversarialMode { kLeastSquares, kLog };

struct DiscriminatorConfig {
  int64_t input_channels = 3;
  int64_t base_channels = 64;
  int64_t layers = 4;  // d64, d128, d256, d512
  int64_t scales = 3;

  /// Smallest side accepted by judge(): the coarsest scale must survive
  /// `layers` stride-2 convolutions.
  int64_t min_input_side() const { return int64_t{1} << (scales - 1 + layers); }
  void validate() const;
  bool operator==(const DiscriminatorConfig&) const = default;
};

void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);

/// One score map per pyramid level, finest first: (N, 1, h_k, w_k).
struct MultiScaleJudgment {
  std::vector<torch::Tensor> per_scale;
};

/// Patch discriminator for a single scale: dk blocks with leaky ReLU (0.2),
/// no normalization, and a 1x1 conv producing the score map.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(const DiscriminatorConfig& config);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential layers_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

class MultiScaleDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit MultiScaleDiscriminatorImpl(const DiscriminatorConfig& config);

  /// Scale k sees the input average-pooled k times by a factor of 2.
  /// Throws ShapeError naming the minimum size for too-small inputs.
  MultiScaleJudgment judge(const torch::Tensor& images);

  const DiscriminatorConfig& config() const { return config_; }
  const std::vector<PatchDiscriminator>& scales() const { return scales_; }

 private:
  DiscriminatorConfig config_;
  std::vector<PatchDiscriminator> scales_;
};
TORCH_MODULE(MultiScaleDiscriminator);

/// Mean over scales of mean((real - 1)^2) + mean(fake^2); the log form uses
/// binary cross-entropy on logits with the same targets.
torch::Tensor discriminator_loss(const MultiScaleJudgment& real, const MultiScaleJudgment& fake,
                                 AdversarialMode mode = AdversarialMode::kLeastSquares);

/// Mean over scales of mean((fake - 1)^2) (or BCE toward "real").
torch::Tensor generator_adversarial_loss(const MultiScaleJudgment& fake,
                                         AdversarialMode mode = AdversarialMode::kLeastSquares);

inline torch::Tensor lsgan_d_loss(const MultiScaleJudgment& real, const MultiScaleJudgment& fake) {
  return discriminator_loss(real, fake, AdversarialMode::kLeastSquares);
}
inline torch::Tensor lsgan_g_loss(const MultiScaleJudgment& fake) {
  return generator_adversarial_loss(fake, AdversarialMode::kLeastSquares);
}

}  // namespace refbeauty
