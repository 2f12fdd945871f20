// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/beautifier.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "refbeauty/errors.hpp"
#include "refbeauty/image.hpp"

namespace refbeauty {

namespace {
constexpr const char* kWeightConstraint = "w1 + w2 = 1 and 0 <= w1, w2 <= 1";

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}
}  // namespace

void validate_mix_weights(double w1, double w2) {
  const bool in_range = w1 >= 0.0 && w1 <= 1.0 && w2 >= 0.0 && w2 <= 1.0;
  const bool sums = std::abs(w1 + w2 - 1.0) <= kWeightSumTolerance;
  if (!in_range || !sums) {
    throw ValidationError(std::string("style weights must satisfy ") + kWeightConstraint + " (got w1=" + fmt(w1) +
                          ", w2=" + fmt(w2) + ")");
  }
}

StyleCode mix_styles(const StyleCode& a, const StyleCode& b, double w1, double w2) {
  validate_mix_weights(w1, w2);
  if (a.vector.sizes() != b.vector.sizes()) throw ShapeError("mix_styles: style codes have different shapes");
  return {torch::lerp(a.vector, b.vector, w2)};
}

std::vector<double> linspace_weights(int64_t steps) {
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (steps == 1) return {1.0};
  std::vector<double> out(static_cast<std::size_t>(steps));
  for (int64_t i = 0; i < steps; ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(i) / (steps - 1);
  return out;
}

double weight_from_percent(double q) {
  if (!(q >= 0.0 && q <= 100.0)) throw ValidationError("Q must lie in [0, 100], got " + fmt(q));
  return q / 100.0;
}

void BeautifyRequest::validate() const {
  if (!target.defined() || !reference.defined()) throw ValidationError("request needs a target and a reference image");
  if (w2_values.empty()) throw ValidationError("request needs at least one weight");
  for (std::size_t i = 0; i < w2_values.size(); ++i) {
    validate_mix_weights(1.0 - w2_values[i], w2_values[i]);
    if (i > 0 && !(w2_values[i] > w2_values[i - 1])) {
      throw ValidationError("w2 values must be strictly increasing");
    }
  }
}

Beautifier::Beautifier(Translator translator, PerceptionBackbone backbone)
    : translator_(std::move(translator)), backbone_(std::move(backbone)) {
  if (!translator_) throw ConfigError("beautifier needs a translator");
  translator_->eval();
  if (backbone_) backbone_->eval();
}

PerceptionBackboneImpl& Beautifier::scorer() {
  if (!backbone_) throw ConfigError("scores requested but no perception backbone is loaded");
  return *backbone_;
}

std::size_t Beautifier::beautify_streaming(const BeautifyRequest& request, const FrameSink& sink) {
  request.validate();
  torch::NoGradGuard no_grad;
  const auto target = as_batch(request.target);
  const auto reference = as_batch(request.reference);
  if (target.size(0) != 1 || reference.size(0) != 1) throw ValidationError("beautify takes one target and one reference");
  if (request.score_outputs) scorer();

  const auto content = translator_->encode_content(target);
  const auto style_target = translator_->encode_style(target);
  const auto style_reference = translator_->encode_style(reference);

  for (const double w2 : request.w2_values) {
    const auto style = mix_styles(style_target, style_reference, 1.0 - w2, w2);
    BeautifyFrame frame;
    frame.w2 = w2;
    frame.image = translator_->decode(content, style).squeeze(0);
    if (request.score_outputs) frame.score = scorer().predict_score(frame.image);
    sink(frame);
  }
  return request.w2_values.size();
}

BeautifySequence Beautifier::beautify(const BeautifyRequest& request) {
  BeautifySequence seq;
  beautify_streaming(request, [&](const BeautifyFrame& f) { seq.frames.push_back(f); });
  return seq;
}

ScoreSearchResult Beautifier::search_weight_for_score(const torch::Tensor& target, const torch::Tensor& reference,
                                                      double target_score, double tolerance, int max_iterations) {
  auto frame_at = [&](double w2) {
    BeautifyRequest req{target, reference, {w2}, true};
    return beautify(req).frames.front();
  };
  double lo = 0.0, hi = 1.0;
  ScoreSearchResult best;
  best.frame = frame_at(hi);
  best.w2 = hi;
  best.score = *best.frame.score;
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto frame = frame_at(mid);
    const double s = *frame.score;
    best.iterations = it + 1;
    if (std::abs(s - target_score) < std::abs(best.score - target_score)) {
      best.w2 = mid;
      best.score = s;
      best.frame = frame;
    }
    if (std::abs(s - target_score) <= tolerance) break;
    (s < target_score ? lo : hi) = mid;
  }
  return best;
}

double Beautifier::score(const torch::Tensor& image) { return scorer().predict_score(image); }

GainReport gain_from_means(double mean_before, double mean_after) {
  if (mean_before == 0.0) throw ValidationError("mean score before beautification is zero");
  return {mean_before, mean_after, 100.0 * (mean_after - mean_before) / mean_before};
}

GainReport gain_from_scores(const std::vector<double>& before, const std::vector<double>& after) {
  if (before.size() != after.size()) {
    throw ValidationError("gain needs one beautified image per original (" + std::to_string(before.size()) + " vs " +
                          std::to_string(after.size()) + ")");
  }
  if (before.empty()) throw ValidationError("gain needs at least one image");
  const double n = static_cast<double>(before.size());
  return gain_from_means(std::accumulate(before.begin(), before.end(), 0.0) / n,
                         std::accumulate(after.begin(), after.end(), 0.0) / n);
}

GainReport evaluate_gain(const data::DatasetManifest& originals, const std::vector<torch::Tensor>& beautified,
                         PerceptionBackboneImpl& backbone) {
  if (originals.size() != beautified.size()) {
    throw ValidationError("gain needs one beautified image per original (" + std::to_string(originals.size()) +
                          " vs " + std::to_string(beautified.size()) + ")");
  }
  std::vector<double> before, after;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    before.push_back(backbone.predict_score(load_image(originals[i].image_path)));
    after.push_back(backbone.predict_score(beautified[i]));
  }
  return gain_from_scores(before, after);
}

}  // namespace refbeauty
