// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Content encoder, style encoder, style-to-AdaIN MLP and decoder.
//
// Default recipe (base_channels = 64):
//   content encoder  c7s1-64, d128, d256, r256 x3          (instance norm throughout)
//   style encoder    c7s1-64, d128, d256, d256, d256, gap, fc  (no normalization)
//   decoder          r256 x4 (AdaIN), u128, u64, c7s1-3 (tanh)
//   mlp              style_dim -> 256 -> 256 -> 2 * (#AdaIN channels)

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "refbeauty/generator/layers.hpp"

namespace refbeauty {

struct GeneratorConfig {
  int64_t input_channels = 3;
  int64_t base_channels = 64;
  int64_t content_downsample = 2;
  int64_t content_res_blocks = 3;
  int64_t style_downsample = 4;
  int64_t style_dim = 64;
  int64_t decoder_res_blocks = 4;
  int64_t mlp_hidden = 256;
  int64_t mlp_hidden_layers = 2;

  int64_t content_channels() const { return base_channels << content_downsample; }
  int64_t adain_layers() const { return decoder_res_blocks * AdainResBlockImpl::kAdainLayers; }
  /// Spatial dims must be multiples of this.
  int64_t size_multiple() const { return int64_t{1} << content_downsample; }

  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

/// Spatial feature map from the content encoder: (N, content_channels, H/4, W/4).
struct ContentCode {
  torch::Tensor features;
};

/// Style vector from the style encoder: (N, style_dim).
struct StyleCode {
  torch::Tensor vector;
};

/// Per-AdaIN-layer affine parameters, each (N, content_channels).
struct AdainParams {
  std::vector<torch::Tensor> gamma;
  std::vector<torch::Tensor> beta;
};

class ContentEncoderImpl : public torch::nn::Module {
 public:
  explicit ContentEncoderImpl(const GeneratorConfig& config);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential layers_{nullptr};
};
TORCH_MODULE(ContentEncoder);

class StyleEncoderImpl : public torch::nn::Module {
 public:
  explicit StyleEncoderImpl(const GeneratorConfig& config);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential convs_{nullptr};
  torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(StyleEncoder);

class StyleMlpImpl : public torch::nn::Module {
 public:
  explicit StyleMlpImpl(const GeneratorConfig& config);
  torch::Tensor forward(const torch::Tensor& style);

 private:
  torch::nn::Sequential layers_{nullptr};
};
TORCH_MODULE(StyleMlp);

class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const GeneratorConfig& config);
  torch::Tensor forward(const torch::Tensor& content, const AdainParams& params);

 private:
  std::vector<AdainResBlock> res_blocks_;
  torch::nn::Sequential head_{nullptr};
};
TORCH_MODULE(Decoder);

/// The full translation network. Forward passes are read-only over weights.
class TranslatorImpl : public torch::nn::Module {
 public:
  explicit TranslatorImpl(const GeneratorConfig& config);

  /// Throws ShapeError when spatial dims are not multiples of 4 (or too small
  /// for the style encoder) before doing any computation.
  ContentCode encode_content(const torch::Tensor& images);
  StyleCode encode_style(const torch::Tensor& images);
  AdainParams adain_params(const StyleCode& style);
  /// Throws ConfigError if the codes were not produced by a compatible config.
  torch::Tensor decode(const ContentCode& content, const StyleCode& style);

  /// Training-mode translation: decode(E_c(target), E_s(reference)).
  torch::Tensor translate(const torch::Tensor& target, const torch::Tensor& reference);
  torch::Tensor reconstruct(const torch::Tensor& images);

  const GeneratorConfig& config() const { return config_; }
  ContentEncoder& content_encoder() { return content_encoder_; }
  StyleEncoder& style_encoder() { return style_encoder_; }
  StyleMlp& mlp() { return mlp_; }
  Decoder& decoder() { return decoder_; }

  /// Encoder invocation counters (instrumentation for shared-encoding checks).
  uint64_t content_encodings() const { return counters_->content.load(); }
  uint64_t style_encodings() const { return counters_->style.load(); }
  void reset_counters();

 private:
  void check_input(const torch::Tensor& images, const char* op) const;

  struct Counters {
    std::atomic<uint64_t> content{0};
    std::atomic<uint64_t> style{0};
  };

  GeneratorConfig config_;
  ContentEncoder content_encoder_{nullptr};
  StyleEncoder style_encoder_{nullptr};
  StyleMlp mlp_{nullptr};
  Decoder decoder_{nullptr};
  std::shared_ptr<Counters> counters_ = std::make_shared<Counters>();
};
TORCH_MODULE(Translator);

}  // namespace refbeauty
