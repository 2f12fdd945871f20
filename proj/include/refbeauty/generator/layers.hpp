// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Building blocks shared by the translator and discriminator.
//
// Block naming follows the fast-neural-style convention:
//   c7s1-k  7x7 conv, k filters, stride 1
//   dk      4x4 conv, k filters, stride 2
//   rk      residual block of two 3x3 convs
//   uk      2x nearest upsample, then 5x5 conv, k filters, stride 1

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace refbeauty {

enum class Norm { kNone, kInstance };
enum class Activation { kNone, kReLU, kLeakyReLU, kTanh };
enum class Padding { kReflect, kZero };

struct ConvSpec {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int64_t kernel = 3;
  int64_t stride = 1;
  int64_t padding = 1;
  Norm norm = Norm::kNone;
  Activation activation = Activation::kReLU;
  Padding pad_mode = Padding::kReflect;
  double leaky_slope = 0.2;
};

/// pad -> conv -> [norm] -> [activation]
class ConvBlockImpl : public torch::nn::Module {
 public:
  explicit ConvBlockImpl(const ConvSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);

  const ConvSpec& spec() const { return spec_; }

 private:
  ConvSpec spec_;
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::ReflectionPad2d reflect_{nullptr};
  torch::nn::InstanceNorm2d norm_{nullptr};
  torch::nn::AnyModule activation_;
};
TORCH_MODULE(ConvBlock);

/// Residual block with instance normalization: x + (conv-IN-ReLU-conv-IN)(x).
class ResBlockImpl : public torch::nn::Module {
 public:
  explicit ResBlockImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvBlock first_{nullptr};
  ConvBlock second_{nullptr};
};
TORCH_MODULE(ResBlock);

/// Epsilon added to the variance inside adain().
inline constexpr double kAdainEpsilon = 1e-5;

/// Adaptive instance normalization:
///   gamma * (z - mean(z)) / sqrt(var(z) + eps) + beta
/// with mean/var taken per sample and channel over the spatial dims.
/// z is (N, C, H, W); gamma and beta are (C) or (N, C).
torch::Tensor adain(const torch::Tensor& z, const torch::Tensor& gamma, const torch::Tensor& beta,
                    double eps = kAdainEpsilon);

/// Residual block whose two normalizations are AdaIN layers driven by
/// externally generated (gamma, beta).
class AdainResBlockImpl : public torch::nn::Module {
 public:
  explicit AdainResBlockImpl(int64_t channels);

  /// gammas/betas hold exactly two (N, C) tensors, one per AdaIN layer.
  torch::Tensor forward(const torch::Tensor& x, const std::vector<torch::Tensor>& gammas,
                        const std::vector<torch::Tensor>& betas);

  static constexpr int kAdainLayers = 2;

 private:
  ConvBlock first_{nullptr};
  ConvBlock second_{nullptr};
  torch::nn::ReLU relu_{nullptr};
};
TORCH_MODULE(AdainResBlock);

/// 2x nearest-neighbour upsampling followed by a 5x5 conv block.
class UpsampleBlockImpl : public torch::nn::Module {
 public:
  UpsampleBlockImpl(int64_t in_channels, int64_t out_channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvBlock conv_{nullptr};
};
TORCH_MODULE(UpsampleBlock);

/// Kaiming (fan-in) initialisation of conv/linear weights, zero biases.
void kaiming_init(torch::nn::Module& module, double negative_slope = 0.0);

int64_t parameter_count(const torch::nn::Module& module);

/// Class names of every submodule, depth first (e.g. "torch::nn::ReLUImpl").
std::vector<std::string> layer_inventory(const torch::nn::Module& module);

}  // namespace refbeauty
