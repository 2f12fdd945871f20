// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "refbeauty/data/manifest.hpp"
#include "refbeauty/image.hpp"

namespace refbeauty::data {

struct BatchSpec {
  int64_t batch_size = 4;
  ImageSize image_size{128, 128};
  uint64_t shuffle_seed = 0;
  bool shuffle = true;

  /// batch_size >= 1; height and width positive multiples of 4.
  void validate() const;
};

/// Position in the (epoch, index) stream. Part of every training checkpoint.
struct LoaderCursor {
  int64_t epoch = 0;
  int64_t position = 0;

  bool operator==(const LoaderCursor&) const = default;
};

void to_json(nlohmann::json& j, const LoaderCursor& c);
void from_json(const nlohmann::json& j, LoaderCursor& c);

enum class DecodeFailurePolicy { kFailFast, kSkipWithWarning };

struct LoadedBatch {
  torch::Tensor images;                 // (batch_size, 3, H, W), values in [-1, 1]
  std::vector<std::size_t> indices;     // manifest rows that produced each sample
  LoaderCursor next;
};

/// Visiting order of the manifest rows in a given epoch. A pure function of
/// (size, seed, epoch) so checkpoints only need to store the cursor.
std::vector<std::size_t> epoch_order(std::size_t size, uint64_t seed, int64_t epoch, bool shuffle);

/// Loads `spec.batch_size` images starting at `cursor`, wrapping into the
/// next epoch when the manifest is exhausted.
LoadedBatch load_batch(const DatasetManifest& manifest, const BatchSpec& spec, const LoaderCursor& cursor,
                       DecodeFailurePolicy policy = DecodeFailurePolicy::kFailFast);

/// Convenience holder that owns the cursor.
class BatchStream {
 public:
  BatchStream(DatasetManifest manifest, BatchSpec spec,
              DecodeFailurePolicy policy = DecodeFailurePolicy::kFailFast);

  torch::Tensor next();

  const LoaderCursor& cursor() const { return cursor_; }
  void seek(LoaderCursor c) { cursor_ = c; }
  const DatasetManifest& manifest() const { return manifest_; }
  const BatchSpec& spec() const { return spec_; }

 private:
  DatasetManifest manifest_;
  BatchSpec spec_;
  DecodeFailurePolicy policy_;
  LoaderCursor cursor_;
};

}  // namespace refbeauty::data
