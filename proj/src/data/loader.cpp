// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/data/loader.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <random>

#include "refbeauty/errors.hpp"

namespace refbeauty::data {

void BatchSpec::validate() const {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (image_size.height <= 0 || image_size.width <= 0 || image_size.height % 4 != 0 || image_size.width % 4 != 0) {
    throw ValidationError("image height and width must be positive multiples of 4, got " +
                          std::to_string(image_size.height) + "x" + std::to_string(image_size.width));
  }
}

void to_json(nlohmann::json& j, const LoaderCursor& c) { j = {{"epoch", c.epoch}, {"position", c.position}}; }

void from_json(const nlohmann::json& j, LoaderCursor& c) {
  c.epoch = j.at("epoch").get<int64_t>();
  c.position = j.at("position").get<int64_t>();
}

std::vector<std::size_t> epoch_order(std::size_t size, uint64_t seed, int64_t epoch, bool shuffle) {
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(epoch),
                      static_cast<uint32_t>(static_cast<uint64_t>(epoch) >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

LoadedBatch load_batch(const DatasetManifest& manifest, const BatchSpec& spec, const LoaderCursor& cursor,
                       DecodeFailurePolicy policy) {
  if (manifest.empty()) throw ValidationError("cannot load a batch from an empty manifest");
  spec.validate();

  const auto n = manifest.size();
  LoadedBatch out;
  out.next = cursor;
  std::vector<torch::Tensor> images;
  images.reserve(static_cast<std::size_t>(spec.batch_size));

  auto order = epoch_order(n, spec.shuffle_seed, out.next.epoch, spec.shuffle);
  std::size_t consecutive_failures = 0;
  while (static_cast<int64_t>(images.size()) < spec.batch_size) {
    if (out.next.position >= static_cast<int64_t>(n)) {
      out.next.epoch += 1;
      out.next.position = 0;
      order = epoch_order(n, spec.shuffle_seed, out.next.epoch, spec.shuffle);
    }
    const auto row = order[static_cast<std::size_t>(out.next.position)];
    out.next.position += 1;
    try {
      images.push_back(load_image(manifest[row].image_path, spec.image_size));
      out.indices.push_back(row);
      consecutive_failures = 0;
    } catch (const IoError& e) {
      if (policy == DecodeFailurePolicy::kFailFast) throw;
      std::cerr << "warning: skipping " << manifest[row].image_path << ": " << e.what() << '\n';
      if (++consecutive_failures >= n) throw IoError("no decodable image in manifest");
    }
  }
  out.images = torch::stack(images);
  return out;
}

BatchStream::BatchStream(DatasetManifest manifest, BatchSpec spec, DecodeFailurePolicy policy)
    : manifest_(std::move(manifest)), spec_(spec), policy_(policy) {
  spec_.validate();
  if (manifest_.empty()) throw ValidationError("BatchStream needs a non-empty manifest");
}

torch::Tensor BatchStream::next() {
  auto batch = load_batch(manifest_, spec_, cursor_, policy_);
  cursor_ = batch.next;
  return batch.images;
}

}  // namespace refbeauty::data
