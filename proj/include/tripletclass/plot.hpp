#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tripletclass/metrics.hpp"
#include "tripletclass/tensor.hpp"

namespace tripletclass {

// Quantitative artifacts always exist as CSV first; these renders are a
// convenience layer on top and are never parsed by tests.

namespace plotdetail {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMargin = 60;

inline const std::vector<cv::Scalar>& palette() {
  static const std::vector<cv::Scalar> colors = {
      {180, 119, 31},  {14, 127, 255},  {44, 160, 44},  {40, 39, 214},
      {189, 103, 148}, {75, 86, 140},   {194, 119, 227}, {127, 127, 127},
  };
  return colors;
}

inline void save(const cv::Mat& canvas, const std::filesystem::path& path) {
  if (!cv::imwrite(path.string(), canvas)) {
    fail(ErrorCode::data, "cannot write plot '" + path.string() + "'");
  }
}

}  // namespace plotdetail

/// Line chart of one or more equally indexed series (e.g. loss per epoch).
inline void render_line_chart(const std::vector<std::vector<double>>& series,
                              const std::vector<std::string>& names, const std::string& y_label,
                              const std::filesystem::path& path) {
  using namespace plotdetail;
  cv::Mat canvas(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));

  double lo = 0.0, hi = 1e-9;
  std::size_t longest = 2;
  for (const auto& s : series) {
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    longest = std::max(longest, s.size());
  }
  const double span = std::max(hi - lo, 1e-9);

  auto to_px = [&](std::size_t i, double v) {
    const int x = kMargin + static_cast<int>((kWidth - 2 * kMargin) *
                                             static_cast<double>(i) / (longest - 1));
    const int y = kHeight - kMargin -
                  static_cast<int>((kHeight - 2 * kMargin) * (v - lo) / span);
    return cv::Point(x, y);
  };

  cv::rectangle(canvas, {kMargin, kMargin}, {kWidth - kMargin, kHeight - kMargin},
                {190, 190, 190});
  cv::putText(canvas, y_label, {10, kMargin - 14}, cv::FONT_HERSHEY_SIMPLEX, 0.5, {60, 60, 60});

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto color = palette()[s % palette().size()];
    for (std::size_t i = 1; i < series[s].size(); ++i) {
      cv::line(canvas, to_px(i - 1, series[s][i - 1]), to_px(i, series[s][i]), color, 2,
               cv::LINE_AA);
    }
    if (s < names.size()) {
      cv::putText(canvas, names[s], {kWidth - kMargin - 180, kMargin + 20 * (static_cast<int>(s) + 1)},
                  cv::FONT_HERSHEY_SIMPLEX, 0.45, color);
    }
  }
  save(canvas, path);
}

/// Scatter of 2-D points colored by class.
inline void render_scatter(const Tensor& coords, const std::vector<int>& labels,
                           const std::vector<std::string>& class_names,
                           const std::filesystem::path& path) {
  using namespace plotdetail;
  if (coords.rank() != 2 || coords.shape[1] != 2) {
    fail(ErrorCode::contract, "render_scatter expects [N,2] coordinates");
  }
  cv::Mat canvas(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));

  float xlo = coords.at(0, 0), xhi = xlo, ylo = coords.at(0, 1), yhi = ylo;
  for (int i = 0; i < coords.shape[0]; ++i) {
    xlo = std::min(xlo, coords.at(i, 0));
    xhi = std::max(xhi, coords.at(i, 0));
    ylo = std::min(ylo, coords.at(i, 1));
    yhi = std::max(yhi, coords.at(i, 1));
  }
  const float xspan = std::max(xhi - xlo, 1e-9f);
  const float yspan = std::max(yhi - ylo, 1e-9f);

  for (int i = 0; i < coords.shape[0]; ++i) {
    const int x = kMargin + static_cast<int>((kWidth - 2 * kMargin) * (coords.at(i, 0) - xlo) / xspan);
    const int y = kHeight - kMargin -
                  static_cast<int>((kHeight - 2 * kMargin) * (coords.at(i, 1) - ylo) / yspan);
    const auto color = palette()[labels[i] % palette().size()];
    cv::circle(canvas, {x, y}, 3, color, cv::FILLED, cv::LINE_AA);
  }
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    cv::putText(canvas, class_names[c], {kWidth - kMargin - 140, kMargin + 20 * (static_cast<int>(c) + 1)},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, palette()[c % palette().size()]);
  }
  save(canvas, path);
}

/// Confusion-matrix heat map with per-cell counts.
inline void render_confusion_heatmap(const ConfusionMatrix& cm,
                                     const std::filesystem::path& path) {
  using namespace plotdetail;
  const int k = cm.num_classes();
  const int cell = std::max(48, 360 / std::max(k, 1));
  const int size = k * cell + 2 * kMargin;
  cv::Mat canvas(size, size, CV_8UC3, cv::Scalar(255, 255, 255));

  long peak = 1;
  for (const auto& row : cm.counts) {
    for (long v : row) peak = std::max(peak, v);
  }
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      const double heat = static_cast<double>(cm.counts[r][c]) / static_cast<double>(peak);
      const auto shade = static_cast<unsigned char>(255 - 200 * heat);
      const cv::Rect box(kMargin + c * cell, kMargin + r * cell, cell, cell);
      cv::rectangle(canvas, box, cv::Scalar(shade, shade, 255), cv::FILLED);
      cv::rectangle(canvas, box, {120, 120, 120});
      cv::putText(canvas, std::to_string(cm.counts[r][c]),
                  {box.x + cell / 3, box.y + 2 * cell / 3}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                  {30, 30, 30});
    }
    cv::putText(canvas, cm.class_names[r], {4, kMargin + r * cell + cell / 2},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, {60, 60, 60});
    cv::putText(canvas, cm.class_names[r], {kMargin + r * cell + 4, kMargin - 8},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, {60, 60, 60});
  }
  save(canvas, path);
}

}  // namespace tripletclass
