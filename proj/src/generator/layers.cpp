// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/generator/layers.hpp"

#include <cmath>

#include "refbeauty/errors.hpp"

namespace refbeauty {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

ConvBlockImpl::ConvBlockImpl(const ConvSpec& spec) : spec_(spec) {
  const bool reflect = spec.pad_mode == Padding::kReflect && spec.padding > 0;
  if (reflect) reflect_ = register_module("pad", nn::ReflectionPad2d(spec.padding));
  conv_ = register_module(
      "conv", nn::Conv2d(nn::Conv2dOptions(spec.in_channels, spec.out_channels, spec.kernel)
                             .stride(spec.stride)
                             .padding(reflect ? 0 : spec.padding)
                             .bias(true)));
  if (spec.norm == Norm::kInstance) {
    norm_ = register_module("norm", nn::InstanceNorm2d(nn::InstanceNorm2dOptions(spec.out_channels)));
  }
  switch (spec.activation) {
    case Activation::kReLU:
      activation_ = nn::AnyModule(register_module("act", nn::ReLU()));
      break;
    case Activation::kLeakyReLU:
      activation_ = nn::AnyModule(
          register_module("act", nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(spec.leaky_slope))));
      break;
    case Activation::kTanh:
      activation_ = nn::AnyModule(register_module("act", nn::Tanh()));
      break;
    case Activation::kNone:
      break;
  }
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) {
  auto y = reflect_ ? reflect_(x) : x;
  y = conv_(y);
  if (norm_) y = norm_(y);
  if (!activation_.is_empty()) y = activation_.forward(y);
  return y;
}

ResBlockImpl::ResBlockImpl(int64_t channels) {
  first_ = register_module("conv1", ConvBlock(ConvSpec{channels, channels, 3, 1, 1, Norm::kInstance,
                                                       Activation::kReLU}));
  second_ = register_module("conv2", ConvBlock(ConvSpec{channels, channels, 3, 1, 1, Norm::kInstance,
                                                        Activation::kNone}));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) { return x + second_(first_(x)); }

torch::Tensor adain(const torch::Tensor& z, const torch::Tensor& gamma, const torch::Tensor& beta, double eps) {
  if (z.dim() != 4) throw ShapeError("adain expects an (N, C, H, W) feature tensor");
  const auto n = z.size(0);
  const auto c = z.size(1);
  auto shape_params = [&](const torch::Tensor& p, const char* name) {
    if (p.dim() == 1 && p.size(0) == c) return p.view({1, c, 1, 1});
    if (p.dim() == 2 && p.size(0) == n && p.size(1) == c) return p.view({n, c, 1, 1});
    throw ShapeError(std::string("adain: ") + name + " has shape " + std::to_string(p.dim()) +
                     "-d with last dim " + std::to_string(p.size(-1)) + ", feature map has " + std::to_string(c) +
                     " channels");
  };
  auto g = shape_params(gamma, "gamma");
  auto b = shape_params(beta, "beta");
  auto mean = z.mean({2, 3}, /*keepdim=*/true);
  auto var = z.var({2, 3}, /*unbiased=*/false, /*keepdim=*/true);
  return g * (z - mean) / torch::sqrt(var + eps) + b;
}

AdainResBlockImpl::AdainResBlockImpl(int64_t channels) {
  first_ = register_module("conv1", ConvBlock(ConvSpec{channels, channels, 3, 1, 1, Norm::kNone, Activation::kNone}));
  second_ =
      register_module("conv2", ConvBlock(ConvSpec{channels, channels, 3, 1, 1, Norm::kNone, Activation::kNone}));
  relu_ = register_module("act", nn::ReLU());
}

torch::Tensor AdainResBlockImpl::forward(const torch::Tensor& x, const std::vector<torch::Tensor>& gammas,
                                         const std::vector<torch::Tensor>& betas) {
  if (gammas.size() != kAdainLayers || betas.size() != kAdainLayers) {
    throw ShapeError("AdainResBlock needs exactly two (gamma, beta) pairs");
  }
  auto y = relu_(adain(first_(x), gammas[0], betas[0]));
  y = adain(second_(y), gammas[1], betas[1]);
  return x + y;
}

UpsampleBlockImpl::UpsampleBlockImpl(int64_t in_channels, int64_t out_channels) {
  conv_ = register_module("conv", ConvBlock(ConvSpec{in_channels, out_channels, 5, 1, 2, Norm::kNone,
                                                     Activation::kReLU}));
}

torch::Tensor UpsampleBlockImpl::forward(const torch::Tensor& x) {
  auto up = F::interpolate(x, F::InterpolateFuncOptions()
                                  .scale_factor(std::vector<double>{2.0, 2.0})
                                  .mode(torch::kNearest));
  return conv_(up);
}

void kaiming_init(torch::nn::Module& module, double negative_slope) {
  torch::NoGradGuard no_grad;
  const auto nonlinearity = negative_slope > 0.0 ? torch::nn::init::NonlinearityType(torch::kLeakyReLU)
                                                 : torch::nn::init::NonlinearityType(torch::kReLU);
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      nn::init::kaiming_normal_(conv->weight, negative_slope, torch::kFanIn, nonlinearity);
      if (conv->bias.defined()) nn::init::zeros_(conv->bias);
    } else if (auto* linear = m->as<nn::Linear>()) {
      nn::init::kaiming_normal_(linear->weight, negative_slope, torch::kFanIn, nonlinearity);
      if (linear->bias.defined()) nn::init::zeros_(linear->bias);
    }
  }
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t total = 0;
  for (const auto& p : module.parameters()) total += p.numel();
  return total;
}

std::vector<std::string> layer_inventory(const torch::nn::Module& module) {
  std::vector<std::string> out;
  for (const auto& m : module.modules(/*include_self=*/false)) out.push_back(m->name());
  return out;
}

}  // namespace refbeauty
