// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/generator/translator.hpp"

#include <algorithm>

#include "refbeauty/errors.hpp"

namespace refbeauty {

namespace nn = torch::nn;

void GeneratorConfig::validate() const {
  if (input_channels < 1 || base_channels < 1 || style_dim < 1 || mlp_hidden < 1) {
    throw ConfigError("generator channel counts must be positive");
  }
  if (content_downsample < 0 || style_downsample < 0 || content_res_blocks < 0 || decoder_res_blocks < 0 ||
      mlp_hidden_layers < 0) {
    throw ConfigError("generator layer counts must be non-negative");
  }
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"input_channels", c.input_channels},       {"base_channels", c.base_channels},
       {"content_downsample", c.content_downsample}, {"content_res_blocks", c.content_res_blocks},
       {"style_downsample", c.style_downsample},     {"style_dim", c.style_dim},
       {"decoder_res_blocks", c.decoder_res_blocks}, {"mlp_hidden", c.mlp_hidden},
       {"mlp_hidden_layers", c.mlp_hidden_layers}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  GeneratorConfig d;
  c.input_channels = j.value("input_channels", d.input_channels);
  c.base_channels = j.value("base_channels", d.base_channels);
  c.content_downsample = j.value("content_downsample", d.content_downsample);
  c.content_res_blocks = j.value("content_res_blocks", d.content_res_blocks);
  c.style_downsample = j.value("style_downsample", d.style_downsample);
  c.style_dim = j.value("style_dim", d.style_dim);
  c.decoder_res_blocks = j.value("decoder_res_blocks", d.decoder_res_blocks);
  c.mlp_hidden = j.value("mlp_hidden", d.mlp_hidden);
  c.mlp_hidden_layers = j.value("mlp_hidden_layers", d.mlp_hidden_layers);
}

ContentEncoderImpl::ContentEncoderImpl(const GeneratorConfig& c) {
  nn::Sequential seq;
  int64_t ch = c.base_channels;
  seq->push_back(ConvBlock(ConvSpec{c.input_channels, ch, 7, 1, 3, Norm::kInstance, Activation::kReLU}));
  for (int64_t i = 0; i < c.content_downsample; ++i) {
    seq->push_back(ConvBlock(ConvSpec{ch, ch * 2, 4, 2, 1, Norm::kInstance, Activation::kReLU}));
    ch *= 2;
  }
  for (int64_t i = 0; i < c.content_res_blocks; ++i) seq->push_back(ResBlock(ch));
  layers_ = register_module("layers", seq);
}

torch::Tensor ContentEncoderImpl::forward(const torch::Tensor& x) { return layers_->forward(x); }

StyleEncoderImpl::StyleEncoderImpl(const GeneratorConfig& c) {
  nn::Sequential seq;
  int64_t ch = c.base_channels;
  const int64_t cap = c.base_channels * 4;
  seq->push_back(ConvBlock(ConvSpec{c.input_channels, ch, 7, 1, 3, Norm::kNone, Activation::kReLU}));
  for (int64_t i = 0; i < c.style_downsample; ++i) {
    const int64_t next = std::min(ch * 2, cap);
    seq->push_back(ConvBlock(ConvSpec{ch, next, 4, 2, 1, Norm::kNone, Activation::kReLU}));
    ch = next;
  }
  convs_ = register_module("convs", seq);
  fc_ = register_module("fc", nn::Linear(ch, c.style_dim));
}

torch::Tensor StyleEncoderImpl::forward(const torch::Tensor& x) {
  auto features = convs_->forward(x);
  auto pooled = features.mean({2, 3});
  return fc_(pooled);
}

StyleMlpImpl::StyleMlpImpl(const GeneratorConfig& c) {
  nn::Sequential seq;
  int64_t in = c.style_dim;
  for (int64_t i = 0; i < c.mlp_hidden_layers; ++i) {
    seq->push_back(nn::Linear(in, c.mlp_hidden));
    seq->push_back(nn::ReLU());
    in = c.mlp_hidden;
  }
  seq->push_back(nn::Linear(in, 2 * c.adain_layers() * c.content_channels()));
  layers_ = register_module("layers", seq);
}

torch::Tensor StyleMlpImpl::forward(const torch::Tensor& style) { return layers_->forward(style); }

DecoderImpl::DecoderImpl(const GeneratorConfig& c) {
  int64_t ch = c.content_channels();
  for (int64_t i = 0; i < c.decoder_res_blocks; ++i) {
    res_blocks_.push_back(register_module("res" + std::to_string(i), AdainResBlock(ch)));
  }
  nn::Sequential head;
  for (int64_t i = 0; i < c.content_downsample; ++i) {
    head->push_back(UpsampleBlock(ch, ch / 2));
    ch /= 2;
  }
  head->push_back(ConvBlock(ConvSpec{ch, c.input_channels, 7, 1, 3, Norm::kNone, Activation::kTanh}));
  head_ = register_module("head", head);
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& content, const AdainParams& params) {
  auto x = content;
  for (std::size_t i = 0; i < res_blocks_.size(); ++i) {
    const auto k = i * AdainResBlockImpl::kAdainLayers;
    x = res_blocks_[i]->forward(x, {params.gamma[k], params.gamma[k + 1]}, {params.beta[k], params.beta[k + 1]});
  }
  return head_->forward(x);
}

TranslatorImpl::TranslatorImpl(const GeneratorConfig& config) : config_(config) {
  config_.validate();
  content_encoder_ = register_module("content_encoder", ContentEncoder(config_));
  style_encoder_ = register_module("style_encoder", StyleEncoder(config_));
  mlp_ = register_module("mlp", StyleMlp(config_));
  decoder_ = register_module("decoder", Decoder(config_));
  kaiming_init(*this);
}

void TranslatorImpl::check_input(const torch::Tensor& images, const char* op) const {
  if (images.dim() != 4 || images.size(1) != config_.input_channels) {
    throw ShapeError(std::string(op) + ": expected (N, " + std::to_string(config_.input_channels) +
                     ", H, W) images");
  }
  const auto h = images.size(2);
  const auto w = images.size(3);
  const auto m = config_.size_multiple();
  if (h % m != 0 || w % m != 0) {
    throw ShapeError(std::string(op) + ": height and width must be divisible by " + std::to_string(m) + ", got " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  const int64_t min_side = std::max<int64_t>(int64_t{1} << config_.style_downsample, 4);
  if (h < min_side || w < min_side) {
    throw ShapeError(std::string(op) + ": images must be at least " + std::to_string(min_side) + "x" +
                     std::to_string(min_side));
  }
}

ContentCode TranslatorImpl::encode_content(const torch::Tensor& images) {
  check_input(images, "encode_content");
  counters_->content.fetch_add(1);
  return {content_encoder_(images)};
}

StyleCode TranslatorImpl::encode_style(const torch::Tensor& images) {
  check_input(images, "encode_style");
  counters_->style.fetch_add(1);
  return {style_encoder_(images)};
}

AdainParams TranslatorImpl::adain_params(const StyleCode& style) {
  if (style.vector.dim() != 2 || style.vector.size(1) != config_.style_dim) {
    throw ConfigError("style code has dimension " + std::to_string(style.vector.size(-1)) +
                      ", decoder expects " + std::to_string(config_.style_dim));
  }
  auto flat = mlp_(style.vector);
  const auto ch = config_.content_channels();
  AdainParams params;
  auto chunks = flat.split(ch, /*dim=*/1);
  for (int64_t layer = 0; layer < config_.adain_layers(); ++layer) {
    params.gamma.push_back(chunks[2 * layer]);
    params.beta.push_back(chunks[2 * layer + 1]);
  }
  return params;
}

torch::Tensor TranslatorImpl::decode(const ContentCode& content, const StyleCode& style) {
  if (content.features.dim() != 4 || content.features.size(1) != config_.content_channels()) {
    throw ConfigError("content code has " + std::to_string(content.features.size(1)) +
                      " channels, decoder expects " + std::to_string(config_.content_channels()));
  }
  if (style.vector.size(0) != content.features.size(0)) {
    throw ConfigError("content and style batch sizes differ");
  }
  return decoder_(content.features, adain_params(style));
}

torch::Tensor TranslatorImpl::translate(const torch::Tensor& target, const torch::Tensor& reference) {
  return decode(encode_content(target), encode_style(reference));
}

torch::Tensor TranslatorImpl::reconstruct(const torch::Tensor& images) {
  return decode(encode_content(images), encode_style(images));
}

void TranslatorImpl::reset_counters() {
  counters_->content.store(0);
  counters_->style.store(0);
}

}  // namespace refbeauty
