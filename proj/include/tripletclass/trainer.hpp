#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>

#include "tripletclass/adam.hpp"
#include "tripletclass/dataset.hpp"
#include "tripletclass/model.hpp"
#include "tripletclass/triplet.hpp"

namespace tripletclass {

enum class Regime { classifier, triplet };

inline const char* regime_name(Regime r) {
  return r == Regime::classifier ? "classifier" : "triplet";
}

inline Regime regime_from_name(const std::string& name) {
  if (name == "classifier") return Regime::classifier;
  if (name == "triplet") return Regime::triplet;
  fail(ErrorCode::config, "unknown regime '" + name + "'");
}

struct TrainConfig {
  Regime regime = Regime::classifier;
  double learning_rate = 1e-3;
  int epochs = 1;
  std::optional<int> steps_per_epoch;   // empty = full pass over the train split
  std::optional<int> validation_steps;  // empty = full pass (classifier) / 50 (triplet)
  int batch_size = 18;
  ElementKind element_kind = ElementKind::float32;
  std::uint64_t seed = 0;
  double margin = 0.4;  // triplet only
  DistanceKind distance = DistanceKind::euclidean;
  bool augment = false;
  AugmentConfig augment_config;
  bool record_wall_time = true;
  int workers = 1;

  void validate() const {
    if (learning_rate < 0.0) fail(ErrorCode::config, "learning rate must be >= 0");
    if (epochs < 1) fail(ErrorCode::config, "epochs must be >= 1");
    if (batch_size < 1) fail(ErrorCode::config, "batch size must be >= 1");
    if (margin < 0.0) fail(ErrorCode::config, "margin must be >= 0");
    if (steps_per_epoch && *steps_per_epoch < 1) {
      fail(ErrorCode::config, "steps_per_epoch must be >= 1");
    }
    if (validation_steps && *validation_steps < 1) {
      fail(ErrorCode::config, "validation_steps must be >= 1");
    }
    if (augment) augment_config.validate();
    if (augment && regime == Regime::triplet) {
      fail(ErrorCode::config, "augmentation is not applied in the triplet regime");
    }
  }
};

namespace detail {

class EpochTimer {
 public:
  explicit EpochTimer(bool enabled) : enabled_(enabled) {
    if (enabled_) start_ = std::chrono::steady_clock::now();
  }
  double seconds() const {
    if (!enabled_) return 0.0;
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(now - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

[[noreturn]] inline void diverged(double loss, int epoch, int step) {
  fail(ErrorCode::training, "loss " + std::to_string(loss) + " is not finite at epoch " +
                                std::to_string(epoch) + ", step " + std::to_string(step));
}

/// Mean cross-entropy over a split in manifest order, inference mode.
inline double classifier_validation_loss(const Model& model, const DatasetManifest& data,
                                         const TrainConfig& cfg) {
  BatchIterator::Options opt;
  opt.batch_size = cfg.batch_size;
  opt.shuffle = false;
  opt.element_kind = cfg.element_kind;
  opt.workers = cfg.workers;
  BatchIterator it(data, SplitKind::validation, opt);

  double sum = 0.0;
  std::int64_t count = 0;
  int batches = 0;
  while (auto batch = it.next()) {
    const Tensor probs = classifier_forward(model, batch->images);
    sum += cross_entropy(probs, batch->labels) * batch->labels.size();
    count += static_cast<std::int64_t>(batch->labels.size());
    if (cfg.validation_steps && ++batches >= *cfg.validation_steps) break;
  }
  return sum / static_cast<double>(count);
}

}  // namespace detail

/// Cross-entropy training: full passes over the train split (or a fixed
/// step budget), per-epoch validation loss, and best-validation checkpoint
/// retention. The returned model carries the best parameters and the full
/// history.
inline Model train_classifier(const TrainConfig& cfg, const DatasetManifest& data,
                              Model model) {
  cfg.validate();
  if (cfg.regime != Regime::classifier) {
    fail(ErrorCode::config, "train_classifier called with a non-classifier config");
  }
  if (model.head.kind != HeadKind::classifier) {
    fail(ErrorCode::contract, "train_classifier needs a classifier head");
  }
  if (model.head.num_classes != data.num_classes()) {
    fail(ErrorCode::config, "model expects " + std::to_string(model.head.num_classes) +
                                " classes but the manifest holds " +
                                std::to_string(data.num_classes()));
  }

  BatchIterator::Options opt;
  opt.batch_size = cfg.batch_size;
  opt.seed = cfg.seed;
  opt.shuffle = true;
  opt.element_kind = cfg.element_kind;
  if (cfg.augment) opt.augment = cfg.augment_config;
  opt.workers = cfg.workers;
  BatchIterator train_batches(data, SplitKind::train, opt);

  auto params = trainable_params(model);
  AdamState adam = AdamState::for_params(params);
  const AdamConfig adam_cfg{.learning_rate = cfg.learning_rate};

  Model best = model;
  double best_val = std::numeric_limits<double>::infinity();
  TrainingHistory history;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    detail::EpochTimer timer(cfg.record_wall_time);
    train_batches.start_epoch(epoch);

    double loss_sum = 0.0;
    std::int64_t seen = 0;
    int step = 0;
    while (auto batch = train_batches.next()) {
      ++step;
      ForwardCache cache;
      const Tensor logits = classifier_logits_cached(model, batch->images, cache);
      SoftmaxCrossEntropy sce = softmax_cross_entropy(logits, batch->labels);
      if (!std::isfinite(sce.loss)) detail::diverged(sce.loss, epoch, step);

      zero_grads(model);
      classifier_backward(model, cache, sce.dlogits);
      try {
        adam_update(params, adam, adam_cfg);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::numerical) {
          fail(ErrorCode::training, std::string(e.what()) + " at epoch " +
                                        std::to_string(epoch) + ", step " + std::to_string(step));
        }
        throw;
      }

      loss_sum += sce.loss * batch->labels.size();
      seen += static_cast<std::int64_t>(batch->labels.size());
      if (cfg.steps_per_epoch && step >= *cfg.steps_per_epoch) break;
    }

    const double train_loss = loss_sum / static_cast<double>(seen);
    const double val_loss = detail::classifier_validation_loss(model, data, cfg);
    if (!std::isfinite(val_loss)) detail::diverged(val_loss, epoch, 0);
    history.push_back({epoch, train_loss, val_loss, timer.seconds()});

    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
    }
  }

  best.history = std::move(history);
  return best;
}

/// Triplet-loss training: every step draws a fresh random triplet batch,
/// embeds all three members, and applies one Adam step. Validation draws
/// freshly sampled triplets from the validation split with a seed derived
/// from (seed, epoch), so two runs with one config see identical batches.
inline Model train_triplet(const TrainConfig& cfg, const DatasetManifest& data, Model model) {
  cfg.validate();
  if (cfg.regime != Regime::triplet) {
    fail(ErrorCode::config, "train_triplet called with a non-triplet config");
  }
  if (model.head.kind != HeadKind::embedding) {
    fail(ErrorCode::contract, "train_triplet needs an embedding head");
  }
  if (data.split_indices(SplitKind::train).empty()) {
    fail(ErrorCode::validation, "split 'train' holds no records");
  }

  const int steps = cfg.steps_per_epoch.value_or(150);
  const int val_steps = cfg.validation_steps.value_or(50);
  const TripletConfig triplet_cfg{cfg.margin, cfg.distance, cfg.batch_size};

  auto params = trainable_params(model);
  AdamState adam = AdamState::for_params(params);
  const AdamConfig adam_cfg{.learning_rate = cfg.learning_rate};

  Model best = model;
  double best_val = std::numeric_limits<double>::infinity();
  TrainingHistory history;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    detail::EpochTimer timer(cfg.record_wall_time);
    std::mt19937_64 train_rng(mix64(cfg.seed, static_cast<std::uint64_t>(epoch), 0x7e1));
    std::mt19937_64 val_rng(mix64(cfg.seed, static_cast<std::uint64_t>(epoch), 0x7e2));

    double loss_sum = 0.0;
    for (int step = 1; step <= steps; ++step) {
      TripletBatch batch =
          sample_triplets(data, SplitKind::train, cfg.batch_size, train_rng, cfg.element_kind);

      ForwardCache cache_a, cache_p, cache_n;
      const Tensor emb_a = embedding_forward_cached(model, batch.anchors, cache_a);
      const Tensor emb_p = embedding_forward_cached(model, batch.positives, cache_p);
      const Tensor emb_n = embedding_forward_cached(model, batch.negatives, cache_n);

      TripletLossGrads grads = triplet_loss_with_grads(emb_a, emb_p, emb_n, triplet_cfg);
      if (!std::isfinite(grads.loss)) detail::diverged(grads.loss, epoch, step);

      zero_grads(model);
      embedding_backward(model, cache_a, grads.d_anchor);
      embedding_backward(model, cache_p, grads.d_positive);
      embedding_backward(model, cache_n, grads.d_negative);
      try {
        adam_update(params, adam, adam_cfg);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::numerical) {
          fail(ErrorCode::training, std::string(e.what()) + " at epoch " +
                                        std::to_string(epoch) + ", step " + std::to_string(step));
        }
        throw;
      }
      loss_sum += grads.loss;
    }

    double val_sum = 0.0;
    for (int step = 0; step < val_steps; ++step) {
      TripletBatch batch = sample_triplets(data, SplitKind::validation, cfg.batch_size, val_rng,
                                           cfg.element_kind);
      val_sum += triplet_loss(embedding_forward(model, batch.anchors),
                              embedding_forward(model, batch.positives),
                              embedding_forward(model, batch.negatives), triplet_cfg);
    }
    const double train_loss = loss_sum / steps;
    const double val_loss = val_sum / val_steps;
    if (!std::isfinite(val_loss)) detail::diverged(val_loss, epoch, 0);
    history.push_back({epoch, train_loss, val_loss, timer.seconds()});

    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
    }
  }

  best.history = std::move(history);
  return best;
}

/// `epoch,train_loss,val_loss,seconds` rows, one per epoch.
inline void save_history_csv(const TrainingHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::data, "cannot write history '" + path.string() + "'");
  out << "epoch,train_loss,val_loss,seconds\n";
  char line[160];
  for (const auto& rec : history) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.3f\n", rec.epoch, rec.train_loss,
                  rec.val_loss, rec.seconds);
    out << line;
  }
}

}  // namespace tripletclass
