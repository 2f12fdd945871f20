// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Inference: reference-guided beautification with a controllable degree.
//
// The beautified image is decode(E_c(A), w1 * E_s(A) + w2 * E_s(B)) with
// w1 + w2 = 1 and 0 <= w1, w2 <= 1. w2 = 0 is the reconstruction of the
// target, w2 = 1 the full transfer of the reference style.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "refbeauty/data/manifest.hpp"
#include "refbeauty/generator/translator.hpp"
#include "refbeauty/perception/backbone.hpp"

namespace refbeauty {

/// Tolerance on |w1 + w2 - 1|.
inline constexpr double kWeightSumTolerance = 1e-6;

/// Throws ValidationError quoting the constraint when violated.
void validate_mix_weights(double w1, double w2);

/// Convex combination w1 * a + w2 * b, evaluated as a linear interpolation so
/// that w2 = 0 returns `a` and w2 = 1 returns `b` bit for bit, and mixing a
/// code with itself returns it unchanged.
StyleCode mix_styles(const StyleCode& a, const StyleCode& b, double w1, double w2);

/// `steps` evenly spaced w2 values over [0, 1] inclusive; steps == 1 gives {1}.
std::vector<double> linspace_weights(int64_t steps);

/// Maps a beautification percentage Q in [0, 100] to w2 = Q / 100.
double weight_from_percent(double q);

struct BeautifyRequest {
  torch::Tensor target;     // (3, H, W) or (1, 3, H, W)
  torch::Tensor reference;  // (3, H', W') or (1, 3, H', W')
  std::vector<double> w2_values{1.0};
  bool score_outputs = false;

  /// w2 values within [0, 1] and strictly increasing.
  void validate() const;
};

struct BeautifyFrame {
  double w2 = 0.0;
  torch::Tensor image;  // (3, H, W)
  std::optional<double> score;  // raw regression output
};

struct BeautifySequence {
  std::vector<BeautifyFrame> frames;
};

using FrameSink = std::function<void(const BeautifyFrame&)>;

struct ScoreSearchResult {
  double w2 = 0.0;
  double score = 0.0;
  int iterations = 0;
  BeautifyFrame frame;
};

class Beautifier {
 public:
  /// The backbone may be null when no scores are ever requested.
  Beautifier(Translator translator, PerceptionBackbone backbone);

  /// Encodes target and reference once, then decodes one frame per weight.
  BeautifySequence beautify(const BeautifyRequest& request);

  /// Same, but hands each frame to `sink` as soon as it is decoded instead of
  /// keeping it. Returns the number of frames produced.
  std::size_t beautify_streaming(const BeautifyRequest& request, const FrameSink& sink);

  /// Bisection on w2 for a frame whose (raw) score reaches `target_score`
  /// within `tolerance`, assuming the score is monotone in w2. Off the
  /// default path; returns the closest frame found.
  ScoreSearchResult search_weight_for_score(const torch::Tensor& target, const torch::Tensor& reference,
                                            double target_score, double tolerance = 0.01, int max_iterations = 20);

  double score(const torch::Tensor& image);

  Translator& translator() { return translator_; }
  PerceptionBackbone& backbone() { return backbone_; }

 private:
  PerceptionBackboneImpl& scorer();

  Translator translator_;
  PerceptionBackbone backbone_;
};

struct GainReport {
  double mean_before = 0.0;
  double mean_after = 0.0;
  double gain_percent = 0.0;
};

/// gain = 100 * (after - before) / before.
GainReport gain_from_means(double mean_before, double mean_after);
GainReport gain_from_scores(const std::vector<double>& before, const std::vector<double>& after);

/// Scores every original image and its beautified counterpart with the
/// backbone. Throws ValidationError on a length mismatch.
GainReport evaluate_gain(const data::DatasetManifest& originals, const std::vector<torch::Tensor>& beautified,
                         PerceptionBackboneImpl& backbone);

}  // namespace refbeauty
