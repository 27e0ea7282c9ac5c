#pragma once

#include <unistd.h>

#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "tripletclass/dataset.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Self-cleaning scratch directory under the system temp root.
struct TempDir {
  fs::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("tlc_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

/// Writes a tiny RGB PNG whose pixel (y, x) is fn(y, x) -> {r, g, b}.
template <typename Fn>
void write_png(const fs::path& path, int h, int w, Fn&& fn) {
  cv::Mat img(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto rgb = fn(y, x);
      img.at<cv::Vec3b>(y, x) = cv::Vec3b(rgb[2], rgb[1], rgb[0]);  // OpenCV stores BGR
    }
  }
  cv::imwrite(path.string(), img);
}

inline void write_solid_png(const fs::path& path, int h, int w, unsigned char r, unsigned char g,
                            unsigned char b) {
  write_png(path, h, w, [&](int, int) { return std::array<unsigned char, 3>{r, g, b}; });
}

/// Folder-per-class layout with per-class solid colors plus per-image noise
/// so records are distinguishable.
inline fs::path make_image_tree(const TempDir& dir, const std::vector<std::string>& classes,
                                int per_class, int side = 16) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> noise(0, 60);
  const fs::path root = dir.path / "dataset";
  for (std::size_t c = 0; c < classes.size(); ++c) {
    fs::create_directories(root / classes[c]);
    for (int i = 0; i < per_class; ++i) {
      const unsigned char base = static_cast<unsigned char>(40 + 60 * c);
      const int jitter = noise(rng);
      write_png(root / classes[c] / ("img" + std::to_string(i) + ".png"), side, side,
                [&](int y, int x) {
                  return std::array<unsigned char, 3>{
                      static_cast<unsigned char>(base + jitter),
                      static_cast<unsigned char>((x * 9 + y) % 200),
                      static_cast<unsigned char>((i * 31) % 255)};
                });
    }
  }
  return root;
}

/// In-memory manifest with fake paths; enough for index-level sampling and
/// split logic that never touches the files.
inline tripletclass::DatasetManifest fake_manifest(const std::vector<int>& per_class_train,
                                                   const std::vector<int>& per_class_val) {
  tripletclass::DatasetManifest m;
  m.image_size = {8, 8, 3};
  for (std::size_t c = 0; c < per_class_train.size(); ++c) {
    m.classes.push_back({static_cast<int>(c), "class" + std::to_string(c)});
    for (int i = 0; i < per_class_train[c]; ++i) {
      m.records.push_back({"mem://" + std::to_string(c) + "/" + std::to_string(i),
                           static_cast<int>(c), tripletclass::SplitKind::train});
    }
    for (int i = 0; i < per_class_val[c]; ++i) {
      m.records.push_back({"mem://" + std::to_string(c) + "/v" + std::to_string(i),
                           static_cast<int>(c), tripletclass::SplitKind::validation});
    }
  }
  return m;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testsupport
