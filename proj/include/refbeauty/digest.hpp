// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace refbeauty {

/// Hex-encoded SHA-256 of a byte range.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// Digest over the raw bytes of every tensor, in order. Used to prove that
/// frozen parameters are bit-identical across a training phase.
std::string tensors_digest(const std::vector<torch::Tensor>& tensors);

}  // namespace refbeauty
