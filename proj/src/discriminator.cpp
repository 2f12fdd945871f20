// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/discriminator.hpp"

#include "refbeauty/errors.hpp"
#include "refbeauty/generator/layers.hpp"

namespace refbeauty {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

void DiscriminatorConfig::validate() const {
  if (input_channels < 1 || base_channels < 1 || layers < 1 || scales < 1) {
    throw ConfigError("discriminator sizes must be positive");
  }
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = {{"input_channels", c.input_channels},
       {"base_channels", c.base_channels},
       {"layers", c.layers},
       {"scales", c.scales}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  DiscriminatorConfig d;
  c.input_channels = j.value("input_channels", d.input_channels);
  c.base_channels = j.value("base_channels", d.base_channels);
  c.layers = j.value("layers", d.layers);
  c.scales = j.value("scales", d.scales);
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(const DiscriminatorConfig& c) {
  nn::Sequential seq;
  int64_t in = c.input_channels;
  int64_t out = c.base_channels;
  for (int64_t i = 0; i < c.layers; ++i) {
    seq->push_back(ConvBlock(ConvSpec{in, out, 4, 2, 1, Norm::kNone, Activation::kLeakyReLU}));
    in = out;
    out *= 2;
  }
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(in, 1, 1)));
  layers_ = register_module("layers", seq);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) { return layers_->forward(x); }

MultiScaleDiscriminatorImpl::MultiScaleDiscriminatorImpl(const DiscriminatorConfig& config) : config_(config) {
  config_.validate();
  for (int64_t k = 0; k < config_.scales; ++k) {
    scales_.push_back(register_module("scale" + std::to_string(k), PatchDiscriminator(config_)));
  }
  kaiming_init(*this, 0.2);
}

MultiScaleJudgment MultiScaleDiscriminatorImpl::judge(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != config_.input_channels) {
    throw ShapeError("judge: expected (N, " + std::to_string(config_.input_channels) + ", H, W) images");
  }
  const auto min_side = config_.min_input_side();
  if (images.size(2) < min_side || images.size(3) < min_side) {
    throw ShapeError("judge: input " + std::to_string(images.size(2)) + "x" + std::to_string(images.size(3)) +
                     " is below the minimum " + std::to_string(min_side) + "x" + std::to_string(min_side) +
                     " for " + std::to_string(config_.scales) + " scales");
  }
  MultiScaleJudgment out;
  auto x = images;
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    if (k > 0) x = F::avg_pool2d(x, F::AvgPool2dFuncOptions(2).stride(2));
    out.per_scale.push_back(scales_[k]->forward(x));
  }
  return out;
}

namespace {

void check_scales(const MultiScaleJudgment& a, const MultiScaleJudgment& b) {
  if (a.per_scale.size() != b.per_scale.size()) {
    throw ShapeError("judgments have different scale counts (" + std::to_string(a.per_scale.size()) + " vs " +
                     std::to_string(b.per_scale.size()) + ")");
  }
}

torch::Tensor toward(const torch::Tensor& scores, double target, AdversarialMode mode) {
  if (mode == AdversarialMode::kLeastSquares) return (scores - target).pow(2).mean();
  return F::binary_cross_entropy_with_logits(scores, torch::full_like(scores, target));
}

}  // namespace

torch::Tensor discriminator_loss(const MultiScaleJudgment& real, const MultiScaleJudgment& fake,
                                 AdversarialMode mode) {
  check_scales(real, fake);
  if (real.per_scale.empty()) throw ShapeError("empty judgment");
  torch::Tensor total;
  for (std::size_t k = 0; k < real.per_scale.size(); ++k) {
    auto term = toward(real.per_scale[k], 1.0, mode) + toward(fake.per_scale[k], 0.0, mode);
    total = total.defined() ? total + term : term;
  }
  return total / static_cast<double>(real.per_scale.size());
}

torch::Tensor generator_adversarial_loss(const MultiScaleJudgment& fake, AdversarialMode mode) {
  if (fake.per_scale.empty()) throw ShapeError("empty judgment");
  torch::Tensor total;
  for (const auto& scores : fake.per_scale) {
    auto term = toward(scores, 1.0, mode);
    total = total.defined() ? total + term : term;
  }
  return total / static_cast<double>(fake.per_scale.size());
}

}  // namespace refbeauty
