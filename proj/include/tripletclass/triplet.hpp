#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tripletclass/dataset.hpp"
#include "tripletclass/tensor.hpp"

namespace tripletclass {

enum class DistanceKind { euclidean, squared_euclidean };

inline const char* distance_kind_name(DistanceKind d) {
  return d == DistanceKind::euclidean ? "euclidean" : "squared_euclidean";
}

inline DistanceKind distance_kind_from_name(const std::string& name) {
  if (name == "euclidean") return DistanceKind::euclidean;
  if (name == "squared_euclidean") return DistanceKind::squared_euclidean;
  fail(ErrorCode::config, "unknown distance '" + name + "'");
}

/// Exact Euclidean distance between two equal-length vectors.
inline double euclidean_distance(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    fail(ErrorCode::contract, "euclidean_distance: dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = static_cast<double>(u[i]) - v[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

inline double euclidean_distance(const Tensor& u, const Tensor& v) {
  return euclidean_distance(std::span<const float>(u.data), std::span<const float>(v.data));
}

struct TripletConfig {
  double margin = 0.4;
  DistanceKind distance = DistanceKind::euclidean;
  int batch_size = 16;

  void validate() const {
    if (margin < 0.0) fail(ErrorCode::config, "triplet margin must be >= 0");
    if (batch_size < 1) fail(ErrorCode::config, "triplet batch size must be >= 1");
  }
};

namespace detail {

// Stabilized row distance used inside the loss: the 1e-12 term under the
// square root keeps the gradient finite at coincident points.
template <typename Scalar>
double stabilized_row_distance(const Scalar* a, const Scalar* b, int dim, DistanceKind kind) {
  double sum = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
    sum += diff * diff;
  }
  if (kind == DistanceKind::squared_euclidean) return sum;
  return std::sqrt(sum + 1e-12);
}

inline void check_triplet_shapes(const Tensor& a, const Tensor& p, const Tensor& n) {
  if (a.rank() != 2 || !a.same_shape(p) || !a.same_shape(n)) {
    fail(ErrorCode::contract, "triplet loss expects three [B,D] tensors of equal shape");
  }
}

}  // namespace detail

/// Mean hinge loss over the batch: max(d(a,p) - d(a,n) + margin, 0).
namespace detail {

// Mean via translated summation: an all-equal batch (a=p=n everywhere
// gives margin per row) returns the common value exactly instead of
// picking up round-off from sum/B.
inline double translated_mean(const std::vector<double>& values) {
  const double base = values.front();
  double total = 0.0;
  for (double v : values) total += v - base;
  return base + total / static_cast<double>(values.size());
}

}  // namespace detail

/// Hinge of a single triplet, max(d(a,p) - d(a,n) + margin, 0). The Tensor
/// loss below runs the identical arithmetic per row; this overload exists
/// for callers holding full-precision vectors.
template <typename Scalar>
double triplet_hinge(std::span<const Scalar> anchor, std::span<const Scalar> positive,
                     std::span<const Scalar> negative, const TripletConfig& cfg) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    fail(ErrorCode::contract, "triplet_hinge: dimension mismatch");
  }
  cfg.validate();
  const int dim = static_cast<int>(anchor.size());
  const double d_ap = detail::stabilized_row_distance(anchor.data(), positive.data(), dim,
                                                      cfg.distance);
  const double d_an = detail::stabilized_row_distance(anchor.data(), negative.data(), dim,
                                                      cfg.distance);
  return std::max(d_ap - d_an + cfg.margin, 0.0);
}

inline double triplet_loss(const Tensor& anchors, const Tensor& positives,
                           const Tensor& negatives, const TripletConfig& cfg) {
  detail::check_triplet_shapes(anchors, positives, negatives);
  cfg.validate();
  const int B = anchors.shape[0], D = anchors.shape[1];
  std::vector<double> hinges(B);
  for (int b = 0; b < B; ++b) {
    const float* a = anchors.ptr() + static_cast<std::int64_t>(b) * D;
    const float* p = positives.ptr() + static_cast<std::int64_t>(b) * D;
    const float* n = negatives.ptr() + static_cast<std::int64_t>(b) * D;
    const double d_ap = detail::stabilized_row_distance(a, p, D, cfg.distance);
    const double d_an = detail::stabilized_row_distance(a, n, D, cfg.distance);
    hinges[b] = std::max(d_ap - d_an + cfg.margin, 0.0);
  }
  return detail::translated_mean(hinges);
}

struct TripletLossGrads {
  double loss = 0.0;
  Tensor d_anchor, d_positive, d_negative;
  int active = 0;  // rows with a positive hinge
};

/// Loss plus analytic gradients with respect to all three inputs. At the
/// hinge kink the subgradient 0 is used.
inline TripletLossGrads triplet_loss_with_grads(const Tensor& anchors, const Tensor& positives,
                                                const Tensor& negatives,
                                                const TripletConfig& cfg) {
  detail::check_triplet_shapes(anchors, positives, negatives);
  cfg.validate();
  const int B = anchors.shape[0], D = anchors.shape[1];

  TripletLossGrads out;
  out.d_anchor = Tensor({B, D});
  out.d_positive = Tensor({B, D});
  out.d_negative = Tensor({B, D});

  std::vector<double> hinges(B, 0.0);
  const double inv_b = 1.0 / B;
  for (int b = 0; b < B; ++b) {
    const std::int64_t off = static_cast<std::int64_t>(b) * D;
    const float* a = anchors.ptr() + off;
    const float* p = positives.ptr() + off;
    const float* n = negatives.ptr() + off;
    const double d_ap = detail::stabilized_row_distance(a, p, D, cfg.distance);
    const double d_an = detail::stabilized_row_distance(a, n, D, cfg.distance);
    const double violation = d_ap - d_an + cfg.margin;
    if (violation <= 0.0) continue;

    hinges[b] = violation;
    ++out.active;
    float* da = out.d_anchor.ptr() + off;
    float* dp = out.d_positive.ptr() + off;
    float* dn = out.d_negative.ptr() + off;
    if (cfg.distance == DistanceKind::squared_euclidean) {
      // d = |u|^2: dd/da = 2u
      for (int d = 0; d < D; ++d) {
        const double u = static_cast<double>(a[d]) - p[d];
        const double v = static_cast<double>(a[d]) - n[d];
        da[d] = static_cast<float>(2.0 * (u - v) * inv_b);
        dp[d] = static_cast<float>(-2.0 * u * inv_b);
        dn[d] = static_cast<float>(2.0 * v * inv_b);
      }
    } else {
      for (int d = 0; d < D; ++d) {
        const double u = (static_cast<double>(a[d]) - p[d]) / d_ap;
        const double v = (static_cast<double>(a[d]) - n[d]) / d_an;
        da[d] = static_cast<float>((u - v) * inv_b);
        dp[d] = static_cast<float>(-u * inv_b);
        dn[d] = static_cast<float>(v * inv_b);
      }
    }
  }
  out.loss = detail::translated_mean(hinges);
  return out;
}

// --- triplet sampling --------------------------------------------------------

struct TripletBatch {
  Tensor anchors, positives, negatives;  // [B, h, w, c]
  std::vector<int> anchor_labels;
};

struct TripletIndices {
  std::vector<int> anchor, positive, negative;  // record indices into the manifest
  std::vector<int> anchor_labels;
};

/// Draws batch_size (anchor, positive, negative) record triples from one
/// split: the positive uniformly from the anchor's class minus the anchor,
/// the negative uniformly from the union of all other classes.
inline TripletIndices sample_triplet_indices(const DatasetManifest& manifest, SplitKind split,
                                             int batch_size, std::mt19937_64& rng) {
  if (batch_size < 1) fail(ErrorCode::config, "triplet batch size must be >= 1");
  const auto by_class = manifest.indices_by_class(split);
  std::vector<int> pool;  // all records of the split
  int populated_classes = 0;
  for (const auto& group : by_class) {
    if (!group.empty()) ++populated_classes;
    pool.insert(pool.end(), group.begin(), group.end());
  }
  if (populated_classes < 2) {
    fail(ErrorCode::sampling, std::string("split '") + split_name(split) +
                                  "' needs at least 2 populated classes for triplets");
  }

  TripletIndices out;
  std::uniform_int_distribution<int> pick_pool(0, static_cast<int>(pool.size()) - 1);
  for (int i = 0; i < batch_size; ++i) {
    const int anchor = pool[pick_pool(rng)];
    const int label = manifest.records[anchor].label;
    const auto& same = by_class[label];
    if (same.size() < 2) {
      fail(ErrorCode::sampling, "class '" + manifest.classes[label].name +
                                    "' has a single record; cannot draw a positive");
    }
    int positive = anchor;
    std::uniform_int_distribution<int> pick_same(0, static_cast<int>(same.size()) - 1);
    while (positive == anchor) positive = same[pick_same(rng)];

    int negative = anchor;
    while (manifest.records[negative].label == label) negative = pool[pick_pool(rng)];

    out.anchor.push_back(anchor);
    out.positive.push_back(positive);
    out.negative.push_back(negative);
    out.anchor_labels.push_back(label);
  }
  return out;
}

/// Index sampling plus image loading; the three tensors are aligned row
/// by row.
inline TripletBatch sample_triplets(const DatasetManifest& manifest, SplitKind split,
                                    int batch_size, std::mt19937_64& rng,
                                    ElementKind kind = ElementKind::float32) {
  const TripletIndices idx = sample_triplet_indices(manifest, split, batch_size, rng);
  const ImageSize& sz = manifest.image_size;
  const std::int64_t stride = static_cast<std::int64_t>(sz.height) * sz.width * sz.channels;

  TripletBatch batch;
  batch.anchor_labels = idx.anchor_labels;
  for (Tensor* t : {&batch.anchors, &batch.positives, &batch.negatives}) {
    *t = Tensor({batch_size, sz.height, sz.width, sz.channels}, kind);
  }
  auto fill = [&](Tensor& dst, const std::vector<int>& records) {
    for (int i = 0; i < batch_size; ++i) {
      Tensor img = load_image(manifest.records[records[i]].path, sz, kind);
      std::copy(img.data.begin(), img.data.end(), dst.data.begin() + i * stride);
    }
  };
  fill(batch.anchors, idx.anchor);
  fill(batch.positives, idx.positive);
  fill(batch.negatives, idx.negative);
  return batch;
}

// --- semi-hard mining ----------------------------------------------------------

/// One (anchor, positive, negative) index triple into a batch.
using MinedTriplet = std::array<int, 3>;

/// For every anchor with at least one same-class partner: the hardest
/// positive, then the hardest negative inside the semi-hard window
/// d(a,p) < d(a,n) < d(a,p) + margin; when the window is empty, the
/// negative with the smallest hinge violation (ties to the lower index).
inline std::vector<MinedTriplet> mine_semi_hard(const Tensor& embeddings,
                                                const std::vector<int>& labels, double margin) {
  if (embeddings.rank() != 2) fail(ErrorCode::contract, "mine_semi_hard expects [B,D]");
  const int B = embeddings.shape[0], D = embeddings.shape[1];
  if (static_cast<int>(labels.size()) != B) {
    fail(ErrorCode::contract, "mine_semi_hard: labels length does not match batch");
  }

  auto dist = [&](int i, int j) {
    return euclidean_distance(
        std::span<const float>(embeddings.ptr() + static_cast<std::int64_t>(i) * D, D),
        std::span<const float>(embeddings.ptr() + static_cast<std::int64_t>(j) * D, D));
  };

  std::vector<MinedTriplet> out;
  for (int a = 0; a < B; ++a) {
    int positive = -1;
    double d_ap = -1.0;
    for (int p = 0; p < B; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      const double d = dist(a, p);
      if (d > d_ap) {
        d_ap = d;
        positive = p;
      }
    }
    if (positive < 0) continue;  // no same-class partner for this anchor

    int semi_hard = -1, fallback = -1;
    double best_window = std::numeric_limits<double>::infinity();
    double best_violation = std::numeric_limits<double>::infinity();
    for (int n = 0; n < B; ++n) {
      if (labels[n] == labels[a]) continue;
      const double d_an = dist(a, n);
      if (d_an > d_ap && d_an < d_ap + margin && d_an < best_window) {
        best_window = d_an;
        semi_hard = n;
      }
      const double violation = std::max(d_ap - d_an + margin, 0.0);
      if (violation < best_violation) {
        best_violation = violation;
        fallback = n;
      }
    }
    const int negative = semi_hard >= 0 ? semi_hard : fallback;
    if (negative < 0) continue;  // single-class batch; caught below
    out.push_back({a, positive, negative});
  }

  if (out.empty()) {
    fail(ErrorCode::mining, "no valid triplet in batch: need two classes with a repeated label");
  }
  return out;
}

}  // namespace tripletclass
