#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tripletclass/model.hpp"
#include "tripletclass/trainer.hpp"

namespace tripletclass {

/// Everything one run needs; a RunConfig plus its seed fully determines
/// every emitted artifact.
struct RunConfig {
  std::string run_id;
  std::filesystem::path dataset_root;
  ImageSize image_size{64, 64, 3};
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  BackboneSpec backbone;
  HeadSpec head;
  TrainConfig train;
  int knn_k = 1;
  std::filesystem::path output_dir;

  void validate() const {
    if (run_id.empty()) fail(ErrorCode::config, "config field 'run_id': must not be empty");
    if (dataset_root.empty()) {
      fail(ErrorCode::config, "config field 'dataset_root': must not be empty");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
      fail(ErrorCode::config, "config field 'split_ratio': must lie in (0,1)");
    }
    if (knn_k < 1) fail(ErrorCode::config, "config field 'knn_k': must be >= 1");
    image_size.validate();
    if (!(backbone.input_size == image_size)) {
      fail(ErrorCode::config, "config field 'backbone.input_size': must equal image_size");
    }
    validate_specs(backbone, head);
    train.validate();
    const bool head_matches = (train.regime == Regime::classifier) ==
                              (head.kind == HeadKind::classifier);
    if (!head_matches) {
      fail(ErrorCode::config, "config field 'head.kind': does not match train.regime");
    }
  }
};

// --- presets -------------------------------------------------------------------

namespace presets {

inline RunConfig base(const std::string& run_id) {
  RunConfig cfg;
  cfg.run_id = run_id;
  cfg.split_ratio = 0.8;
  cfg.seed = 0;
  return cfg;
}

/// Classifier runs: 30 epochs of Adam over batches of 18, full passes.
inline RunConfig classifier(const std::string& name, const std::string& adapter_id,
                            int feature_dim, std::vector<int> hidden) {
  RunConfig cfg = base(name);
  cfg.image_size = {224, 224, 3};
  cfg.backbone = {BackboneKind::external_adapter, adapter_id, cfg.image_size, feature_dim, false};
  cfg.head = {HeadKind::classifier, std::move(hidden), 3, 0};
  cfg.train.regime = Regime::classifier;
  cfg.train.learning_rate = 1e-3;
  cfg.train.epochs = 30;
  cfg.train.batch_size = 18;
  cfg.train.element_kind = ElementKind::float32;
  return cfg;
}

/// Triplet runs: margin 0.4, batch 16, 10 epochs x 150 steps with 50
/// validation steps, 128x128x3 float16 inputs; learning rates per backbone.
inline RunConfig triplet(const std::string& name, const std::string& adapter_id,
                         int feature_dim, double learning_rate) {
  RunConfig cfg = base(name);
  cfg.image_size = {128, 128, 3};
  cfg.backbone = {BackboneKind::external_adapter, adapter_id, cfg.image_size, feature_dim, false};
  cfg.head = {HeadKind::embedding, {}, 0, 0};
  cfg.train.regime = Regime::triplet;
  cfg.train.learning_rate = learning_rate;
  cfg.train.epochs = 10;
  cfg.train.steps_per_epoch = 150;
  cfg.train.validation_steps = 50;
  cfg.train.batch_size = 16;
  cfg.train.margin = 0.4;
  cfg.train.distance = DistanceKind::euclidean;
  cfg.train.element_kind = ElementKind::float16;
  return cfg;
}

}  // namespace presets

inline std::vector<std::string> preset_names() {
  return {"vgg19-classifier",  "resnet50-classifier", "inception_resnet_v2-classifier",
          "densenet121-classifier", "vgg19-triplet",  "resnet50-triplet",
          "inception_resnet_v2-triplet", "densenet121-triplet", "tiny-classifier",
          "tiny-triplet"};
}

inline RunConfig preset_config(const std::string& name) {
  using namespace presets;
  if (name == "vgg19-classifier") return classifier(name, "vgg19", 512, {256, 128});
  if (name == "resnet50-classifier") return classifier(name, "resnet50", 2048, {256, 128});
  if (name == "inception_resnet_v2-classifier") {
    return classifier(name, "inception_resnet_v2", 1536, {1024});
  }
  if (name == "densenet121-classifier") {
    return classifier(name, "densenet121", 1024, {1024, 500});
  }
  if (name == "vgg19-triplet") return triplet(name, "vgg19", 512, 1e-5);
  if (name == "resnet50-triplet") return triplet(name, "resnet50", 2048, 1e-4);
  if (name == "inception_resnet_v2-triplet") {
    return triplet(name, "inception_resnet_v2", 1536, 1e-5);
  }
  if (name == "densenet121-triplet") return triplet(name, "densenet121", 1024, 1e-4);

  if (name == "tiny-classifier") {
    RunConfig cfg = presets::base(name);
    cfg.image_size = {64, 64, 3};
    cfg.backbone = {BackboneKind::tiny_cnn, "", cfg.image_size, 32, true};
    cfg.head = {HeadKind::classifier, {64}, 3, 0};
    cfg.train.regime = Regime::classifier;
    // desk-scale settings: smaller batches give the short 15-epoch budget
    // enough optimizer steps on a 240-image split
    cfg.train.learning_rate = 3e-3;
    cfg.train.epochs = 15;
    cfg.train.batch_size = 9;
    return cfg;
  }
  if (name == "tiny-triplet") {
    RunConfig cfg = presets::base(name);
    cfg.image_size = {64, 64, 3};
    cfg.backbone = {BackboneKind::tiny_cnn, "", cfg.image_size, 32, true};
    cfg.head = {HeadKind::embedding, {}, 0, 0};
    cfg.train.regime = Regime::triplet;
    cfg.train.learning_rate = 1e-3;
    cfg.train.epochs = 8;
    cfg.train.steps_per_epoch = 50;
    cfg.train.validation_steps = 25;
    cfg.train.batch_size = 16;
    cfg.train.margin = 0.4;
    return cfg;
  }
  fail(ErrorCode::config, "unknown preset '" + name + "'; known presets: " + [] {
    std::string all;
    for (const auto& p : preset_names()) all += (all.empty() ? "" : ", ") + p;
    return all;
  }());
}

// --- JSON ------------------------------------------------------------------------

namespace cfgdetail {

/// Field accessor that converts json errors into CONFIG diagnostics naming
/// the offending field.
template <typename T>
T field(const nlohmann::json& j, const std::string& pointer, const std::string& display) {
  try {
    return j.at(nlohmann::json::json_pointer(pointer)).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, "config field '" + display + "': " + e.what());
  }
}

template <typename T>
T field_or(const nlohmann::json& j, const std::string& pointer, const std::string& display,
           T fallback) {
  const nlohmann::json::json_pointer ptr(pointer);
  if (!j.contains(ptr) || j.at(ptr).is_null()) return fallback;
  return field<T>(j, pointer, display);
}

inline std::optional<int> opt_int(const nlohmann::json& j, const std::string& pointer,
                                  const std::string& display) {
  const nlohmann::json::json_pointer ptr(pointer);
  if (!j.contains(ptr) || j.at(ptr).is_null()) return std::nullopt;
  return field<int>(j, pointer, display);
}

}  // namespace cfgdetail

inline nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["run_id"] = cfg.run_id;
  j["dataset_root"] = cfg.dataset_root.string();
  j["image_size"] = {{"height", cfg.image_size.height},
                     {"width", cfg.image_size.width},
                     {"channels", cfg.image_size.channels}};
  j["split_ratio"] = cfg.split_ratio;
  j["seed"] = cfg.seed;
  j["knn_k"] = cfg.knn_k;
  j["output_dir"] = cfg.output_dir.string();
  j["backbone"] = backbone_to_json(cfg.backbone);
  j["head"] = head_to_json(cfg.head);

  nlohmann::ordered_json t;
  t["regime"] = regime_name(cfg.train.regime);
  t["learning_rate"] = cfg.train.learning_rate;
  t["epochs"] = cfg.train.epochs;
  t["steps_per_epoch"] =
      cfg.train.steps_per_epoch ? nlohmann::ordered_json(*cfg.train.steps_per_epoch)
                                : nlohmann::ordered_json(nullptr);
  t["validation_steps"] =
      cfg.train.validation_steps ? nlohmann::ordered_json(*cfg.train.validation_steps)
                                 : nlohmann::ordered_json(nullptr);
  t["batch_size"] = cfg.train.batch_size;
  t["element_kind"] = element_kind_name(cfg.train.element_kind);
  t["margin"] = cfg.train.margin;
  t["distance"] = distance_kind_name(cfg.train.distance);
  t["augment"] = cfg.train.augment;
  t["augment_config"] = {{"horizontal_flip", cfg.train.augment_config.horizontal_flip},
                         {"vertical_flip", cfg.train.augment_config.vertical_flip},
                         {"rotate_left", cfg.train.augment_config.rotate_left},
                         {"rotate_right", cfg.train.augment_config.rotate_right}};
  t["record_wall_time"] = cfg.train.record_wall_time;
  t["workers"] = cfg.train.workers;
  j["train"] = t;
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using cfgdetail::field;
  using cfgdetail::field_or;
  using cfgdetail::opt_int;

  RunConfig cfg;
  if (j.contains("preset")) {
    cfg = preset_config(field<std::string>(j, "/preset", "preset"));
  }
  cfg.run_id = field_or<std::string>(j, "/run_id", "run_id", cfg.run_id);
  cfg.dataset_root = field_or<std::string>(j, "/dataset_root", "dataset_root",
                                           cfg.dataset_root.string());
  if (j.contains("image_size")) {
    cfg.image_size.height = field<int>(j, "/image_size/height", "image_size.height");
    cfg.image_size.width = field<int>(j, "/image_size/width", "image_size.width");
    cfg.image_size.channels = field<int>(j, "/image_size/channels", "image_size.channels");
    cfg.backbone.input_size = cfg.image_size;
  }
  cfg.split_ratio = field_or<double>(j, "/split_ratio", "split_ratio", cfg.split_ratio);
  cfg.seed = field_or<std::uint64_t>(j, "/seed", "seed", cfg.seed);
  cfg.knn_k = field_or<int>(j, "/knn_k", "knn_k", cfg.knn_k);
  cfg.output_dir = field_or<std::string>(j, "/output_dir", "output_dir",
                                         cfg.output_dir.string());

  if (j.contains("backbone")) {
    cfg.backbone.kind = backbone_kind_from_name(
        field<std::string>(j, "/backbone/kind", "backbone.kind"));
    cfg.backbone.adapter_id =
        field_or<std::string>(j, "/backbone/adapter_id", "backbone.adapter_id", "");
    cfg.backbone.feature_dim = field<int>(j, "/backbone/feature_dim", "backbone.feature_dim");
    cfg.backbone.trainable =
        field_or<bool>(j, "/backbone/trainable", "backbone.trainable",
                       cfg.backbone.kind == BackboneKind::tiny_cnn);
    cfg.backbone.input_size = cfg.image_size;
  }
  if (j.contains("head")) {
    cfg.head.kind = head_kind_from_name(field<std::string>(j, "/head/kind", "head.kind"));
    cfg.head.hidden_widths = field_or<std::vector<int>>(j, "/head/hidden_widths",
                                                        "head.hidden_widths", {});
    cfg.head.num_classes = field_or<int>(j, "/head/num_classes", "head.num_classes", 0);
    cfg.head.embed_dim = field_or<int>(j, "/head/embed_dim", "head.embed_dim", 0);
  }
  if (j.contains("train")) {
    cfg.train.regime =
        regime_from_name(field<std::string>(j, "/train/regime", "train.regime"));
    cfg.train.learning_rate =
        field_or<double>(j, "/train/learning_rate", "train.learning_rate",
                         cfg.train.learning_rate);
    cfg.train.epochs = field_or<int>(j, "/train/epochs", "train.epochs", cfg.train.epochs);
    cfg.train.steps_per_epoch = opt_int(j, "/train/steps_per_epoch", "train.steps_per_epoch");
    cfg.train.validation_steps =
        opt_int(j, "/train/validation_steps", "train.validation_steps");
    cfg.train.batch_size =
        field_or<int>(j, "/train/batch_size", "train.batch_size", cfg.train.batch_size);
    cfg.train.element_kind = element_kind_from_name(field_or<std::string>(
        j, "/train/element_kind", "train.element_kind", element_kind_name(cfg.train.element_kind)));
    cfg.train.margin = field_or<double>(j, "/train/margin", "train.margin", cfg.train.margin);
    cfg.train.distance = distance_kind_from_name(field_or<std::string>(
        j, "/train/distance", "train.distance", distance_kind_name(cfg.train.distance)));
    cfg.train.augment = field_or<bool>(j, "/train/augment", "train.augment", cfg.train.augment);
    if (j.at("train").contains("augment_config")) {
      auto& a = cfg.train.augment_config;
      a.horizontal_flip = field_or<float>(j, "/train/augment_config/horizontal_flip",
                                          "train.augment_config.horizontal_flip", a.horizontal_flip);
      a.vertical_flip = field_or<float>(j, "/train/augment_config/vertical_flip",
                                        "train.augment_config.vertical_flip", a.vertical_flip);
      a.rotate_left = field_or<float>(j, "/train/augment_config/rotate_left",
                                      "train.augment_config.rotate_left", a.rotate_left);
      a.rotate_right = field_or<float>(j, "/train/augment_config/rotate_right",
                                       "train.augment_config.rotate_right", a.rotate_right);
    }
    cfg.train.record_wall_time = field_or<bool>(j, "/train/record_wall_time",
                                                "train.record_wall_time",
                                                cfg.train.record_wall_time);
    cfg.train.workers = field_or<int>(j, "/train/workers", "train.workers", cfg.train.workers);
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot read config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("malformed config JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace tripletclass
