// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#include "refbeauty/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "refbeauty/errors.hpp"

namespace refbeauty {
namespace {

cv::Mat to_rgb8(const cv::Mat& decoded) {
  cv::Mat rgb;
  switch (decoded.channels()) {
    case 1:
      cv::cvtColor(decoded, rgb, cv::COLOR_GRAY2RGB);
      break;
    case 3:
      cv::cvtColor(decoded, rgb, cv::COLOR_BGR2RGB);
      break;
    case 4:
      cv::cvtColor(decoded, rgb, cv::COLOR_BGRA2RGB);
      break;
    default:
      throw IoError("unsupported channel count " + std::to_string(decoded.channels()));
  }
  if (rgb.depth() != CV_8U) {
    cv::Mat tmp;
    rgb.convertTo(tmp, CV_8U, rgb.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
    rgb = tmp;
  }
  return rgb;
}

cv::Mat fit(const cv::Mat& rgb, std::optional<ImageSize> size) {
  if (!size || (rgb.rows == size->height && rgb.cols == size->width)) return rgb;
  cv::Mat out;
  const bool shrinking = rgb.rows > size->height || rgb.cols > size->width;
  cv::resize(rgb, out, cv::Size(static_cast<int>(size->width), static_cast<int>(size->height)), 0, 0,
             shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  return out;
}

}  // namespace

torch::Tensor normalize(const cv::Mat& rgb8) {
  if (rgb8.type() != CV_8UC3) throw ShapeError("normalize expects an 8-bit 3-channel image");
  cv::Mat contiguous = rgb8.isContinuous() ? rgb8 : rgb8.clone();
  auto hwc = torch::from_blob(contiguous.data, {contiguous.rows, contiguous.cols, 3}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).contiguous();
}

cv::Mat denormalize(const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw ShapeError("denormalize expects a (3, H, W) tensor");
  }
  auto hwc = image.detach()
                 .to(torch::kCPU, torch::kFloat32)
                 .add(1.0)
                 .mul(127.5)
                 .round()
                 .clamp(0, 255)
                 .to(torch::kUInt8)
                 .permute({1, 2, 0})
                 .contiguous();
  cv::Mat view(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_8UC3, hwc.data_ptr());
  return view.clone();
}

torch::Tensor load_image(const std::filesystem::path& path, std::optional<ImageSize> size) {
  cv::Mat decoded = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (decoded.empty() || decoded.rows < 1 || decoded.cols < 1) {
    throw IoError("cannot decode image " + path.string());
  }
  return normalize(fit(to_rgb8(decoded), size));
}

torch::Tensor decode_image(std::span<const unsigned char> bytes, std::optional<ImageSize> size) {
  if (bytes.empty()) throw IoError("empty image payload");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<unsigned char*>(bytes.data()));
  cv::Mat decoded = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  if (decoded.empty()) throw IoError("payload is not a decodable image");
  return normalize(fit(to_rgb8(decoded), size));
}

std::vector<unsigned char> encode_png(const torch::Tensor& image) {
  cv::Mat bgr;
  cv::cvtColor(denormalize(image), bgr, cv::COLOR_RGB2BGR);
  std::vector<unsigned char> out;
  if (!cv::imencode(".png", bgr, out)) throw IoError("PNG encoding failed");
  return out;
}

void save_image(const torch::Tensor& image, const std::filesystem::path& path) {
  cv::Mat bgr;
  cv::cvtColor(denormalize(image), bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) throw IoError("cannot write " + path.string());
}

torch::Tensor resize(const torch::Tensor& image, ImageSize size) {
  auto batch = as_batch(image);
  if (batch.size(2) == size.height && batch.size(3) == size.width) return image;
  namespace F = torch::nn::functional;
  auto out = F::interpolate(batch, F::InterpolateFuncOptions()
                                       .size(std::vector<int64_t>{size.height, size.width})
                                       .mode(torch::kBilinear)
                                       .align_corners(false));
  return image.dim() == 3 ? out.squeeze(0) : out;
}

torch::Tensor compose_strip(const std::vector<torch::Tensor>& frames) {
  if (frames.empty()) throw ValidationError("compose_strip needs at least one frame");
  return torch::cat(frames, /*dim=*/2);
}

torch::Tensor as_batch(const torch::Tensor& image) {
  if (image.dim() == 3) return image.unsqueeze(0);
  if (image.dim() == 4) return image;
  throw ShapeError("expected a (C, H, W) or (N, C, H, W) tensor, got " + std::to_string(image.dim()) +
                   " dimensions");
}

}  // namespace refbeauty
