// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Conversions between encoded images on disk / on the wire and the
// normalized tensors every model consumes.
//
// An image tensor is float32, channels-first, RGB, with values in [-1, 1].
// A single image is (3, H, W); a batch is (N, 3, H, W).

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

namespace refbeauty {

struct ImageSize {
  int64_t height = 128;
  int64_t width = 128;

  bool operator==(const ImageSize&) const = default;
};

/// uint8 RGB matrix -> (3, H, W) tensor in [-1, 1].
torch::Tensor normalize(const cv::Mat& rgb8);

/// (3, H, W) tensor in [-1, 1] -> uint8 RGB matrix. Values are clamped and
/// rounded, so denormalize(normalize(x)) == x for any uint8 image.
cv::Mat denormalize(const torch::Tensor& image);

/// Decode and (optionally) resize. Throws IoError when the data is not an image.
torch::Tensor load_image(const std::filesystem::path& path,
                         std::optional<ImageSize> size = std::nullopt);
torch::Tensor decode_image(std::span<const unsigned char> bytes,
                           std::optional<ImageSize> size = std::nullopt);

/// Lossless PNG encoding of a (3, H, W) tensor.
std::vector<unsigned char> encode_png(const torch::Tensor& image);
void save_image(const torch::Tensor& image, const std::filesystem::path& path);

/// Bilinear resize of a (3, H, W) or (N, 3, H, W) tensor.
torch::Tensor resize(const torch::Tensor& image, ImageSize size);

/// Concatenate equally sized (3, H, W) frames left to right.
torch::Tensor compose_strip(const std::vector<torch::Tensor>& frames);

/// Promote (3, H, W) to (1, 3, H, W); pass batches through. Throws ShapeError
/// for anything that is not a 3- or 4-d channels-first tensor.
torch::Tensor as_batch(const torch::Tensor& image);

}  // namespace refbeauty
