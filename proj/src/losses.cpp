// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/losses.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "refbeauty/errors.hpp"

namespace refbeauty {

void LossWeights::validate() const {
  const std::pair<const char*, double> all[] = {{"lambda1 (reconstruction)", reconstruction},
                                                {"lambda2 (identity)", identity},
                                                {"lambda3 (beauty)", beauty},
                                                {"lambda4 (adversarial)", adversarial},
                                                {"lambda5 (perceptual)", perceptual}};
  for (const auto& [name, value] : all) {
    if (!std::isfinite(value) || value < 0.0) {
      throw ValidationError(std::string("loss weight ") + name + " must be a finite non-negative number, got " +
                            std::to_string(value));
    }
  }
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = {{"lambda1", w.reconstruction},
       {"lambda2", w.identity},
       {"lambda3", w.beauty},
       {"lambda4", w.adversarial},
       {"lambda5", w.perceptual}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  LossWeights d;
  w.reconstruction = j.value("lambda1", d.reconstruction);
  w.identity = j.value("lambda2", d.identity);
  w.beauty = j.value("lambda3", d.beauty);
  w.adversarial = j.value("lambda4", d.adversarial);
  w.perceptual = j.value("lambda5", d.perceptual);
}

void to_json(nlohmann::json& j, const LossBundle& b) {
  j = {{"rec_A", b.rec_A}, {"rec_B", b.rec_B}, {"id_A", b.id_A},     {"id_B", b.id_B},
       {"id_AB", b.id_AB}, {"bt_A", b.bt_A},   {"bt_B", b.bt_B},     {"bt_AB", b.bt_AB},
       {"gan_AB", b.gan_AB}, {"perc_AB", b.perc_AB}, {"total", b.total}};
}

void from_json(const nlohmann::json& j, LossBundle& b) {
  b.rec_A = j.at("rec_A");
  b.rec_B = j.at("rec_B");
  b.id_A = j.at("id_A");
  b.id_B = j.at("id_B");
  b.id_AB = j.at("id_AB");
  b.bt_A = j.at("bt_A");
  b.bt_B = j.at("bt_B");
  b.bt_AB = j.at("bt_AB");
  b.gan_AB = j.at("gan_AB");
  b.perc_AB = j.at("perc_AB");
  b.total = j.at("total");
}

torch::Tensor weighted_total(const LossTerms& t, const LossWeights& w) {
  return w.reconstruction * (t.rec_A + t.rec_B) + w.identity * (t.id_A + t.id_B + t.id_AB) +
         w.beauty * (t.bt_A + t.bt_B + t.bt_AB) + w.adversarial * t.gan_AB + w.perceptual * t.perc_AB;
}

double weighted_total(const LossBundle& b, const LossWeights& w) {
  return w.reconstruction * (b.rec_A + b.rec_B) + w.identity * (b.id_A + b.id_B + b.id_AB) +
         w.beauty * (b.bt_A + b.bt_B + b.bt_AB) + w.adversarial * b.gan_AB + w.perceptual * b.perc_AB;
}

LossBundle summarize(const LossTerms& t, const LossWeights& w) {
  LossBundle b;
  const std::pair<const char*, std::pair<const torch::Tensor*, double*>> fields[] = {
      {"rec_A", {&t.rec_A, &b.rec_A}}, {"rec_B", {&t.rec_B, &b.rec_B}},       {"id_A", {&t.id_A, &b.id_A}},
      {"id_B", {&t.id_B, &b.id_B}},    {"id_AB", {&t.id_AB, &b.id_AB}},       {"bt_A", {&t.bt_A, &b.bt_A}},
      {"bt_B", {&t.bt_B, &b.bt_B}},    {"bt_AB", {&t.bt_AB, &b.bt_AB}},       {"gan_AB", {&t.gan_AB, &b.gan_AB}},
      {"perc_AB", {&t.perc_AB, &b.perc_AB}}};
  for (const auto& [name, slot] : fields) {
    const double v = slot.first->item<double>();
    if (!std::isfinite(v)) throw NonFiniteLossError(name, "value " + std::to_string(v));
    *slot.second = v;
  }
  b.total = weighted_total(b, w);
  return b;
}

torch::Tensor reconstruction_loss(const torch::Tensor& recon, const torch::Tensor& original) {
  if (recon.sizes() != original.sizes()) {
    throw ShapeError("reconstruction_loss: shapes differ (" + std::to_string(recon.numel()) + " vs " +
                     std::to_string(original.numel()) + " elements)");
  }
  return (recon - original).abs().mean();
}

torch::Tensor feature_l1(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ShapeError("feature_l1: feature shapes differ");
  return (a - b).abs().mean();
}

torch::Tensor identity_loss(const torch::Tensor& generated, const torch::Tensor& anchor,
                            PerceptionBackboneImpl& backbone) {
  return feature_l1(backbone.extract(generated).identity, backbone.extract(anchor).identity);
}

torch::Tensor beauty_loss(const torch::Tensor& generated, const torch::Tensor& target,
                          PerceptionBackboneImpl& backbone) {
  return feature_l1(backbone.extract(generated).beauty, backbone.extract(target).beauty);
}

torch::Tensor instance_normalize(const torch::Tensor& features, double eps) {
  if (features.dim() != 4) throw ShapeError("instance_normalize expects (N, C, H, W) features");
  auto mean = features.mean({2, 3}, true);
  auto var = features.var({2, 3}, /*unbiased=*/false, true);
  return (features - mean) / torch::sqrt(var + eps);
}

torch::Tensor perceptual_loss(const torch::Tensor& generated, const torch::Tensor& reference,
                              FeatureExtractor* extractor) {
  if (extractor == nullptr) {
    throw ConfigError("perceptual loss has no feature extractor; configure 'perceptual_extractor' or provide a "
                      "perception backbone checkpoint");
  }
  if (generated.sizes() != reference.sizes()) throw ShapeError("perceptual_loss: image shapes differ");
  auto diff = (instance_normalize(extractor->features(generated)) - instance_normalize(extractor->features(reference)))
                  .flatten(1);
  const double scale = std::sqrt(static_cast<double>(diff.size(1)));
  return (torch::linalg_vector_norm(diff, 2, {1}, false, c10::nullopt) / scale).mean();
}

}  // namespace refbeauty
