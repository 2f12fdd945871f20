// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <atomic>
#include <random>
#include <stdexcept>
#include <unistd.h>

#include "refbeauty/trainer/trainer.hpp"

namespace refbeauty::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

cv::Mat pattern_image(int size, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cv::Mat img(size, size, CV_8UC3);
  const double fx = 1 + 3 * u(rng), fy = 1 + 3 * u(rng);
  const double p0 = u(rng) * 6.28, p1 = u(rng) * 6.28, p2 = u(rng) * 6.28;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double sx = static_cast<double>(x) / size, sy = static_cast<double>(y) / size;
      auto& px = img.at<cv::Vec3b>(y, x);
      px[0] = cv::saturate_cast<uchar>(127.5 + 100 * std::sin(fx * 3.14 * sx + p0));
      px[1] = cv::saturate_cast<uchar>(127.5 + 100 * std::sin(fy * 3.14 * sy + p1));
      px[2] = cv::saturate_cast<uchar>(127.5 + 100 * std::sin(fx * 3.14 * (sx + sy) + p2));
    }
  }
  const int discs = 2 + static_cast<int>(u(rng) * 3);
  for (int i = 0; i < discs; ++i) {
    const cv::Point c(static_cast<int>(u(rng) * size), static_cast<int>(u(rng) * size));
    const int r = std::max(2, static_cast<int>((0.08 + 0.15 * u(rng)) * size));
    cv::circle(img, c, r, cv::Scalar(u(rng) * 255, u(rng) * 255, u(rng) * 255), cv::FILLED);
  }
  return img;
}

cv::Mat brightness_image(int size, double brightness, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  cv::Mat img(size, size, CV_8UC3);
  const double base = 20.0 + brightness * 215.0;
  const double phase = u(rng) * 3.14;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double texture = 12.0 * std::sin(0.4 * x + phase) * std::cos(0.3 * y - phase);
      auto& px = img.at<cv::Vec3b>(y, x);
      for (int ch = 0; ch < 3; ++ch) px[ch] = cv::saturate_cast<uchar>(base + texture + 3.0 * u(rng));
    }
  }
  return img;
}

double mean_brightness(const cv::Mat& rgb) {
  const auto m = cv::mean(rgb);
  return (m[0] + m[1] + m[2]) / (3.0 * 255.0);
}

void write_png(const fs::path& path, const cv::Mat& rgb) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) throw std::runtime_error("cannot write " + path.string());
}

data::DatasetManifest write_pattern_set(const fs::path& dir, const std::string& prefix, int count, int size,
                                        uint64_t seed, data::Domain domain) {
  std::vector<data::ManifestEntry> entries;
  for (int i = 0; i < count; ++i) {
    const auto path = dir / (prefix + "_" + std::to_string(i) + ".png");
    write_png(path, pattern_image(size, seed * 1000 + static_cast<uint64_t>(i)));
    data::ManifestEntry e;
    e.image_path = path;
    e.domain = domain;
    entries.push_back(e);
  }
  return data::DatasetManifest(entries);
}

data::DatasetManifest write_brightness_set(const fs::path& dir, int count, int size, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<data::ManifestEntry> entries;
  for (int i = 0; i < count; ++i) {
    const auto img = brightness_image(size, u(rng), seed * 7919 + static_cast<uint64_t>(i));
    const auto path = dir / ("face_" + std::to_string(i) + ".png");
    write_png(path, img);
    data::ManifestEntry e;
    e.image_path = path;
    e.domain = data::Domain::A;
    e.beauty_score = 1.0 + 4.0 * mean_brightness(img);
    entries.push_back(e);
  }
  return data::DatasetManifest(entries);
}

GeneratorConfig tiny_generator() {
  GeneratorConfig g;
  g.base_channels = 8;
  g.style_dim = 8;
  g.mlp_hidden = 32;
  return g;
}

DiscriminatorConfig tiny_discriminator() {
  DiscriminatorConfig d;
  d.base_channels = 8;
  d.layers = 2;
  d.scales = 3;
  return d;
}

BackboneConfig tiny_backbone(int input_size) {
  BackboneConfig b;
  b.input_size = {input_size, input_size};
  b.trunk_channels = {8, 8};
  b.pool_size = 2;
  b.identity_dim = 64;
  b.beauty_dim = 16;
  b.perceptual_blocks = 1;
  return b;
}

GeneratorConfig mini_generator() {
  GeneratorConfig g;
  g.base_channels = 2;
  g.content_res_blocks = 1;
  g.style_downsample = 2;
  g.style_dim = 4;
  g.decoder_res_blocks = 1;
  g.mlp_hidden = 8;
  return g;
}

DiscriminatorConfig mini_discriminator() {
  DiscriminatorConfig d;
  d.base_channels = 2;
  d.layers = 1;
  d.scales = 3;
  return d;
}

BackboneConfig mini_backbone() {
  BackboneConfig b;
  b.input_size = {8, 8};
  b.trunk_channels = {2, 2};
  b.pool_size = 2;
  b.identity_dim = 8;
  b.beauty_dim = 4;
  b.perceptual_blocks = 1;
  return b;
}

TrainConfig tiny_train_config(const fs::path& manifest_a, const fs::path& manifest_b, const fs::path& out_dir,
                              int image_size) {
  TrainConfig c;
  c.batch_size = 2;
  c.total_iterations = 10;
  c.generator = tiny_generator();
  c.discriminator = tiny_discriminator();
  c.image_size = {image_size, image_size};
  c.manifest_a = manifest_a;
  c.manifest_b = manifest_b;
  c.backbone_stub_seed = 7;
  c.backbone = tiny_backbone(image_size);
  c.out_dir = out_dir;
  c.checkpoint_every = 1000;
  return c;
}

ServiceFixture make_service_fixture(const fs::path& root, int gallery_size) {
  ServiceFixture f;
  const int size = f.image_size;

  // Backbone with a fitted beauty head so that scores are available.
  PerceptionBackbone backbone(tiny_backbone(size));
  backbone->initialize(3);
  const auto scored = write_brightness_set(root / "scored", 24, size, 11);
  FinetuneOptions ft;
  ft.epochs = 5;
  backbone->finetune(scored, nullptr, ft);
  f.backbone = root / "backbone.pt";
  backbone->save_file(f.backbone);

  const auto a = write_pattern_set(root / "a", "a", 2, size, 1, data::Domain::A);
  const auto b = write_pattern_set(root / "b", "b", 2, size, 2, data::Domain::B);
  a.write(root / "a.jsonl");
  b.write(root / "b.jsonl");
  auto config = tiny_train_config(root / "a.jsonl", root / "b.jsonl", root / "run", size);
  config.backbone_checkpoint = f.backbone;
  config.backbone_stub_seed.reset();
  config.backbone = backbone->config();
  Trainer trainer(config, backbone);
  f.checkpoint = root / "model.pt";
  trainer.save_checkpoint(f.checkpoint);

  f.gallery = root / "gallery";
  fs::create_directories(f.gallery);
  for (int i = 0; i < gallery_size; ++i) {
    const auto p = f.gallery / ("ref_" + std::to_string(i) + ".png");
    write_png(p, pattern_image(size, 500 + static_cast<uint64_t>(i)));
    f.gallery_files.push_back(p);
  }
  f.target = root / "target.png";
  write_png(f.target, pattern_image(size, 900));
  return f;
}

}  // namespace refbeauty::testing
