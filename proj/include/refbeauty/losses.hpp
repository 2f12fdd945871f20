// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Training objective for the translator:
//
//   total = l1 * (rec_A + rec_B)
//         + l2 * (id_A + id_B + id_AB)
//         + l3 * (bt_A + bt_B + bt_AB)
//         + l4 * gan_AB
//         + l5 * perc_AB
//
// All L1 terms use mean reduction.

#pragma once

#include <memory>
#include <string>

#include <json.hpp>
#include <torch/torch.h>

#include "refbeauty/perception/backbone.hpp"

namespace refbeauty {

struct LossWeights {
  double reconstruction = 10.0;  // lambda1
  double identity = 1.0;         // lambda2
  double beauty = 1.0;           // lambda3
  double adversarial = 1.0;      // lambda4
  double perceptual = 1.0;       // lambda5

  /// Throws ValidationError for negative or non-finite weights.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

/// Which beauty features the beautified image is pulled toward:
/// the reference B (default) or the source A.
enum class BeautyTarget { kReference, kSource };

/// Differentiable loss terms for one minibatch.
struct LossTerms {
  torch::Tensor rec_A, rec_B;
  torch::Tensor id_A, id_B, id_AB;
  torch::Tensor bt_A, bt_B, bt_AB;
  torch::Tensor gan_AB;
  torch::Tensor perc_AB;
};

/// Scalar snapshot of the terms plus their weighted total.
struct LossBundle {
  double rec_A = 0, rec_B = 0;
  double id_A = 0, id_B = 0, id_AB = 0;
  double bt_A = 0, bt_B = 0, bt_AB = 0;
  double gan_AB = 0;
  double perc_AB = 0;
  double total = 0;

  bool operator==(const LossBundle&) const = default;
};

void to_json(nlohmann::json& j, const LossBundle& b);
void from_json(const nlohmann::json& j, LossBundle& b);

/// Weighted sum of the terms (differentiable).
torch::Tensor weighted_total(const LossTerms& terms, const LossWeights& weights);

/// Recomputes bundle.total from its terms.
double weighted_total(const LossBundle& bundle, const LossWeights& weights);

/// Reads every term and fills in the weighted total. Throws NonFiniteLossError
/// naming the first non-finite term.
LossBundle summarize(const LossTerms& terms, const LossWeights& weights);

/// Mean absolute difference. Throws ShapeError on shape mismatch.
torch::Tensor reconstruction_loss(const torch::Tensor& recon, const torch::Tensor& original);

/// Mean absolute difference between two feature batches.
torch::Tensor feature_l1(const torch::Tensor& a, const torch::Tensor& b);

/// L1 distance between FC1 identity features of the two images.
torch::Tensor identity_loss(const torch::Tensor& generated, const torch::Tensor& anchor,
                            PerceptionBackboneImpl& backbone);

/// L1 distance between FC2 beauty features of the two images.
torch::Tensor beauty_loss(const torch::Tensor& generated, const torch::Tensor& target,
                          PerceptionBackboneImpl& backbone);

/// Fixed network producing deep feature maps for the perceptual loss.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual torch::Tensor features(const torch::Tensor& images) = 0;
};

/// The perception backbone's frozen trunk as perceptual feature network.
class BackboneFeatureExtractor : public FeatureExtractor {
 public:
  explicit BackboneFeatureExtractor(PerceptionBackbone backbone) : backbone_(std::move(backbone)) {}
  torch::Tensor features(const torch::Tensor& images) override { return backbone_->perceptual_features(images); }

 private:
  PerceptionBackbone backbone_;
};

/// Per-channel instance normalization of (N, C, H, W) features (no affine).
torch::Tensor instance_normalize(const torch::Tensor& features, double eps = 1e-5);

/// Distance between instance-normalized features of the two images:
/// per-sample Euclidean norm of the difference divided by sqrt(C*H*W),
/// averaged over the batch. Throws ConfigError if extractor is null.
torch::Tensor perceptual_loss(const torch::Tensor& generated, const torch::Tensor& reference,
                              FeatureExtractor* extractor);

}  // namespace refbeauty
