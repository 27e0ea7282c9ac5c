#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "tripletclass/dataset.hpp"

namespace tripletclass {

/// Writes a synthetic folder-per-class dataset of procedural textures:
/// sinusoidal bands, checkerboards, and scattered spots. Three visually
/// distinct classes that a small CNN separates within a few epochs, which
/// makes end-to-end behavior checkable on a laptop CPU. Deterministic for
/// a fixed seed.
inline void write_synthetic_dataset(const std::filesystem::path& root, int images_per_class,
                                    int side, std::uint64_t seed) {
  if (images_per_class < 1 || side < 8) {
    fail(ErrorCode::config, "synthetic dataset needs images_per_class >= 1 and side >= 8");
  }
  std::mt19937_64 rng(mix64(seed, 0x5e7d));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::string class_names[] = {"bands", "checker", "spots"};
  for (const auto& name : class_names) {
    std::filesystem::create_directories(root / name);
  }

  // bright/dark color pairs: guaranteed contrast, so the class texture is
  // visible in every image rather than only in lucky color draws
  auto base_colors = [&](cv::Vec3b& a, cv::Vec3b& b) {
    for (int ch = 0; ch < 3; ++ch) {
      a[ch] = static_cast<unsigned char>(140 + 90 * unit(rng));
      b[ch] = static_cast<unsigned char>(20 + 90 * unit(rng));
    }
  };

  for (int cls = 0; cls < 3; ++cls) {
    for (int i = 0; i < images_per_class; ++i) {
      cv::Mat img(side, side, CV_8UC3);
      cv::Vec3b color_a, color_b;
      base_colors(color_a, color_b);

      if (cls == 0) {  // bands: sinusoidal stripes at a mild random angle
        const double freq = 2.0 + 6.0 * unit(rng);
        const double phase = 6.28318 * unit(rng);
        const double tilt = 0.5 * (unit(rng) - 0.5);
        for (int y = 0; y < side; ++y) {
          for (int x = 0; x < side; ++x) {
            const double t = (y + tilt * x) / side;
            const double s = 0.5 + 0.5 * std::sin(6.28318 * freq * t + phase);
            cv::Vec3b& px = img.at<cv::Vec3b>(y, x);
            for (int ch = 0; ch < 3; ++ch) {
              px[ch] = static_cast<unsigned char>(s * color_a[ch] + (1 - s) * color_b[ch]);
            }
          }
        }
      } else if (cls == 1) {  // checker: alternating cells
        const int cell = 4 + static_cast<int>(unit(rng) * (side / 6));
        for (int y = 0; y < side; ++y) {
          for (int x = 0; x < side; ++x) {
            const bool odd = ((y / cell) + (x / cell)) % 2 == 1;
            img.at<cv::Vec3b>(y, x) = odd ? color_a : color_b;
          }
        }
      } else {  // spots: random filled disks on a flat background
        img.setTo(color_b);
        const int spots = 6 + static_cast<int>(unit(rng) * 8);
        for (int s = 0; s < spots; ++s) {
          const int cx = static_cast<int>(unit(rng) * side);
          const int cy = static_cast<int>(unit(rng) * side);
          const int radius = 2 + static_cast<int>(unit(rng) * (side / 8));
          for (int y = std::max(0, cy - radius); y < std::min(side, cy + radius + 1); ++y) {
            for (int x = std::max(0, cx - radius); x < std::min(side, cx + radius + 1); ++x) {
              const int dy = y - cy, dx = x - cx;
              if (dy * dy + dx * dx <= radius * radius) img.at<cv::Vec3b>(y, x) = color_a;
            }
          }
        }
      }

      // mild pixel noise so classes are not constant-color shortcuts
      std::uniform_int_distribution<int> jitter(-12, 12);
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          cv::Vec3b& px = img.at<cv::Vec3b>(y, x);
          for (int ch = 0; ch < 3; ++ch) {
            px[ch] = cv::saturate_cast<unsigned char>(px[ch] + jitter(rng));
          }
        }
      }

      char name[64];
      std::snprintf(name, sizeof(name), "img_%04d.png", i);
      const auto path = root / class_names[cls] / name;
      if (!cv::imwrite(path.string(), img)) {
        fail(ErrorCode::data, "cannot write synthetic image '" + path.string() + "'");
      }
    }
  }
}

}  // namespace tripletclass
