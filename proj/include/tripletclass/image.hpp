#pragma once

#include <array>
#include <filesystem>
#include <random>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tripletclass/tensor.hpp"

namespace tripletclass {

/// Target geometry for decoded images: height, width, channels (1 or 3).
struct ImageSize {
  int height = 0;
  int width = 0;
  int channels = 3;

  bool operator==(const ImageSize&) const = default;

  void validate() const {
    if (height < 1 || width < 1) fail(ErrorCode::config, "image size must be positive");
    if (channels != 1 && channels != 3) {
      fail(ErrorCode::config, "image channels must be 1 or 3, got " + std::to_string(channels));
    }
  }
};

/// Decodes a JPEG/PNG file into an [h,w,c] tensor scaled to [0,1].
/// Resizing is bilinear; channel order is RGB for c=3. Deterministic for
/// a fixed file and target size.
inline Tensor load_image(const std::filesystem::path& path, const ImageSize& size,
                         ElementKind kind = ElementKind::float32) {
  size.validate();
  cv::Mat raw = cv::imread(path.string(),
                           size.channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
  if (raw.empty()) {
    fail(ErrorCode::data, "cannot decode image '" + path.string() + "'");
  }
  if (size.channels == 3) cv::cvtColor(raw, raw, cv::COLOR_BGR2RGB);
  if (raw.rows != size.height || raw.cols != size.width) {
    cv::resize(raw, raw, cv::Size(size.width, size.height), 0, 0, cv::INTER_LINEAR);
  }

  Tensor out({size.height, size.width, size.channels}, ElementKind::float32);
  float* dst = out.ptr();
  const int c = size.channels;
  for (int y = 0; y < size.height; ++y) {
    const unsigned char* row = raw.ptr<unsigned char>(y);
    for (int x = 0; x < size.width * c; ++x) {
      *dst++ = static_cast<float>(row[x]) / 255.0f;
    }
  }
  if (kind == ElementKind::float16) out.convert_to(ElementKind::float16);
  return out;
}

enum class AugmentOp { identity, horizontal_flip, vertical_flip, rotate_left, rotate_right };

inline const char* augment_op_name(AugmentOp op) {
  switch (op) {
    case AugmentOp::identity: return "identity";
    case AugmentOp::horizontal_flip: return "horizontal_flip";
    case AugmentOp::vertical_flip: return "vertical_flip";
    case AugmentOp::rotate_left: return "rotate_left";
    case AugmentOp::rotate_right: return "rotate_right";
  }
  return "?";
}

/// Per-op selection probabilities; whatever mass is left after the four
/// listed ops goes to identity.
struct AugmentConfig {
  float horizontal_flip = 0.2f;
  float vertical_flip = 0.2f;
  float rotate_left = 0.2f;
  float rotate_right = 0.2f;

  void validate() const {
    const float probs[] = {horizontal_flip, vertical_flip, rotate_left, rotate_right};
    float sum = 0.0f;
    for (float p : probs) {
      if (p < 0.0f || p > 1.0f) fail(ErrorCode::config, "augment probability outside [0,1]");
      sum += p;
    }
    if (sum > 1.0f + 1e-6f) fail(ErrorCode::config, "augment probabilities sum to more than 1");
  }

  bool rotations_enabled() const { return rotate_left > 0.0f || rotate_right > 0.0f; }
};

/// Applies one augmentation op to an [h,w,c] image. Every op is a pure
/// pixel permutation, so the value histogram is preserved exactly.
inline Tensor apply_augment(const Tensor& image, AugmentOp op) {
  if (image.rank() != 3) fail(ErrorCode::contract, "augment expects an [h,w,c] tensor");
  const int h = image.shape[0], w = image.shape[1], c = image.shape[2];
  if ((op == AugmentOp::rotate_left || op == AugmentOp::rotate_right) && h != w) {
    fail(ErrorCode::config, "rotation augment requires square images, got " + shape_string(image));
  }
  if (op == AugmentOp::identity) return image;

  Tensor out({h, w, c}, image.kind);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int sy = y, sx = x;
      switch (op) {
        case AugmentOp::horizontal_flip: sx = w - 1 - x; break;
        case AugmentOp::vertical_flip: sy = h - 1 - y; break;
        case AugmentOp::rotate_left: sy = x; sx = w - 1 - y; break;
        case AugmentOp::rotate_right: sy = h - 1 - x; sx = y; break;
        case AugmentOp::identity: break;
      }
      for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = image.at(sy, sx, ch);
    }
  }
  return out;
}

/// Draws one op according to the configured probabilities.
inline AugmentOp sample_augment_op(const AugmentConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double edge = cfg.horizontal_flip;
  if (u < edge) return AugmentOp::horizontal_flip;
  edge += cfg.vertical_flip;
  if (u < edge) return AugmentOp::vertical_flip;
  edge += cfg.rotate_left;
  if (u < edge) return AugmentOp::rotate_left;
  edge += cfg.rotate_right;
  if (u < edge) return AugmentOp::rotate_right;
  return AugmentOp::identity;
}

inline Tensor augment(const Tensor& image, const AugmentConfig& cfg, std::mt19937_64& rng) {
  if (image.rank() == 3 && cfg.rotations_enabled() && image.shape[0] != image.shape[1]) {
    fail(ErrorCode::config, "rotation augment requires square images, got " + shape_string(image));
  }
  return apply_augment(image, sample_augment_op(cfg, rng));
}

}  // namespace tripletclass
