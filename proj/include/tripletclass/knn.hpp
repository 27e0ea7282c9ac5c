#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tripletclass/dataset.hpp"
#include "tripletclass/model.hpp"
#include "tripletclass/triplet.hpp"

namespace tripletclass {

struct EmbeddingSet {
  Tensor vectors;           // [N, D], unit-norm rows
  std::vector<int> labels;  // [N]
  SplitKind source_split = SplitKind::train;

  int count() const { return vectors.rank() == 2 ? vectors.shape[0] : 0; }
  int dim() const { return vectors.rank() == 2 ? vectors.shape[1] : 0; }
};

/// Inference-mode embeddings for every record of one split, in manifest
/// order.
inline EmbeddingSet embed_dataset(const Model& model, const DatasetManifest& manifest,
                                  SplitKind split, int batch_size = 32, int workers = 1) {
  if (model.head.kind != HeadKind::embedding) {
    fail(ErrorCode::contract, "embed_dataset needs an embedding head");
  }
  BatchIterator::Options opt;
  opt.batch_size = batch_size;
  opt.shuffle = false;
  opt.workers = workers;
  BatchIterator it(manifest, split, opt);

  EmbeddingSet set;
  set.source_split = split;
  const int D = model.embedding_dim();
  set.vectors = Tensor({it.records_per_epoch(), D});
  int row = 0;
  while (auto batch = it.next()) {
    const Tensor emb = embedding_forward(model, batch->images);
    std::copy(emb.data.begin(), emb.data.end(),
              set.vectors.data.begin() + static_cast<std::int64_t>(row) * D);
    set.labels.insert(set.labels.end(), batch->labels.begin(), batch->labels.end());
    row += batch->labels.size();
  }
  return set;
}

/// Exact nearest-neighbor index; brute-force scan, no approximation.
struct KnnIndex {
  EmbeddingSet reference;
  int k = 1;
};

inline KnnIndex knn_fit(EmbeddingSet reference, int k) {
  if (reference.count() == 0) fail(ErrorCode::config, "knn_fit: reference set is empty");
  if (k < 1) fail(ErrorCode::config, "knn_fit: k must be >= 1");
  if (k > reference.count()) {
    fail(ErrorCode::config, "knn_fit: k=" + std::to_string(k) + " exceeds reference size " +
                                std::to_string(reference.count()));
  }
  return {std::move(reference), k};
}

/// Majority label among the k exact nearest references. Neighbor ordering
/// and tie-breaks are intrinsic (distance, then label; vote ties by smaller
/// summed distance, then lower class index), so predictions are invariant
/// under permutations of the reference set.
inline std::vector<int> knn_predict(const KnnIndex& index, const Tensor& queries) {
  if (queries.rank() != 2 || queries.shape[1] != index.reference.dim()) {
    fail(ErrorCode::contract, "knn_predict: query dimension mismatch");
  }
  const int N = index.reference.count();
  const int D = index.reference.dim();
  const int M = queries.shape[0];
  const int k = index.k;

  int max_label = 0;
  for (int label : index.reference.labels) max_label = std::max(max_label, label);

  std::vector<int> predictions(M);
  std::vector<std::pair<double, int>> scored(N);  // (distance, label)
  for (int q = 0; q < M; ++q) {
    const float* query = queries.ptr() + static_cast<std::int64_t>(q) * D;
    for (int i = 0; i < N; ++i) {
      const float* ref = index.reference.vectors.ptr() + static_cast<std::int64_t>(i) * D;
      double sum = 0.0;
      for (int d = 0; d < D; ++d) {
        const double diff = static_cast<double>(query[d]) - ref[d];
        sum += diff * diff;
      }
      scored[i] = {std::sqrt(sum), index.reference.labels[i]};
    }
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end());

    std::vector<int> votes(max_label + 1, 0);
    std::vector<double> summed(max_label + 1, 0.0);
    for (int i = 0; i < k; ++i) {
      votes[scored[i].second] += 1;
      summed[scored[i].second] += scored[i].first;
    }
    int winner = -1;
    for (int label = 0; label <= max_label; ++label) {
      if (votes[label] == 0) continue;
      if (winner < 0 || votes[label] > votes[winner] ||
          (votes[label] == votes[winner] && summed[label] < summed[winner])) {
        winner = label;
      }
    }
    predictions[q] = winner;
  }
  return predictions;
}

// --- CSV persistence ----------------------------------------------------------

inline void save_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::data, "cannot write embeddings '" + path.string() + "'");
  out << "label";
  for (int d = 0; d < set.dim(); ++d) out << ",v" << d;
  out << "\n";
  char cell[48];
  for (int i = 0; i < set.count(); ++i) {
    out << set.labels[i];
    const float* row = set.vectors.ptr() + static_cast<std::int64_t>(i) * set.dim();
    for (int d = 0; d < set.dim(); ++d) {
      std::snprintf(cell, sizeof(cell), ",%.9g", static_cast<double>(row[d]));
      out << cell;
    }
    out << "\n";
  }
}

inline EmbeddingSet load_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::data, "cannot read embeddings '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::data, "embeddings CSV is empty");

  std::vector<float> values;
  std::vector<int> labels;
  int dim = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    labels.push_back(std::stoi(cell));
    int d = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stof(cell));
      ++d;
    }
    if (dim < 0) dim = d;
    if (d != dim) fail(ErrorCode::data, "ragged embeddings CSV: '" + path.string() + "'");
  }
  if (labels.empty()) fail(ErrorCode::data, "embeddings CSV holds no rows");
  EmbeddingSet set;
  set.labels = std::move(labels);
  set.vectors = Tensor::from_data({static_cast<int>(set.labels.size()), dim}, std::move(values));
  return set;
}

}  // namespace tripletclass
