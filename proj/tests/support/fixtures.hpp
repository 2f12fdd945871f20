// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic images, scaled-down configurations and on-disk fixtures shared by
// the unit tests and the acceptance runner.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "refbeauty/data/manifest.hpp"
#include "refbeauty/discriminator.hpp"
#include "refbeauty/generator/translator.hpp"
#include "refbeauty/perception/backbone.hpp"
#include "refbeauty/trainer/config.hpp"

namespace refbeauty::testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "refbeauty");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// RGB8 image of smooth colour gradients and a few discs, distinct per seed.
cv::Mat pattern_image(int size, uint64_t seed);

/// RGB8 image whose mean intensity is close to `brightness` (in [0, 1]) with
/// a small seeded texture on top.
cv::Mat brightness_image(int size, double brightness, uint64_t seed);

/// Mean of all channels, in [0, 1].
double mean_brightness(const cv::Mat& rgb);

void write_png(const fs::path& path, const cv::Mat& rgb);

/// Writes `count` pattern images to dir/<prefix>_<i>.png and returns a manifest.
data::DatasetManifest write_pattern_set(const fs::path& dir, const std::string& prefix, int count, int size,
                                        uint64_t seed, data::Domain domain);

/// Scored manifest where score = 1 + 4 * mean brightness (exactly affine).
data::DatasetManifest write_brightness_set(const fs::path& dir, int count, int size, uint64_t seed);

// Scaled-down architectures. Same block recipes as the defaults, fewer filters.
GeneratorConfig tiny_generator();
DiscriminatorConfig tiny_discriminator();
BackboneConfig tiny_backbone(int input_size);

// Miniature variants for 8x8 inputs (gradient checks in double precision).
GeneratorConfig mini_generator();
DiscriminatorConfig mini_discriminator();
BackboneConfig mini_backbone();

/// Training config over the given manifests with tiny networks and a stub backbone.
TrainConfig tiny_train_config(const fs::path& manifest_a, const fs::path& manifest_b, const fs::path& out_dir,
                              int image_size);

/// Everything the HTTP service needs: a training checkpoint with a fine-tuned
/// backbone and a gallery of reference images.
struct ServiceFixture {
  fs::path checkpoint;
  fs::path backbone;
  fs::path gallery;
  std::vector<fs::path> gallery_files;
  fs::path target;
  int image_size = 32;
};

ServiceFixture make_service_fixture(const fs::path& root, int gallery_size = 3);

}  // namespace refbeauty::testing
