#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tripletclass/image.hpp"
#include "tripletclass/tensor.hpp"

namespace tripletclass {

namespace fs = std::filesystem;

/// splitmix64 finalizer; used wherever a derived seed is needed so that
/// (seed, epoch, purpose) streams never collide.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b), c);
}

struct ClassLabel {
  int index = 0;
  std::string name;
};

enum class SplitKind { train, validation };

inline const char* split_name(SplitKind s) {
  return s == SplitKind::train ? "train" : "validation";
}

inline SplitKind split_from_name(const std::string& name) {
  if (name == "train") return SplitKind::train;
  if (name == "validation") return SplitKind::validation;
  fail(ErrorCode::config, "unknown split '" + name + "'");
}

struct ImageRecord {
  fs::path path;
  int label = 0;
  SplitKind split = SplitKind::train;
};

/// Full description of a scanned dataset: one record per image, the class
/// inventory, and the parameters that produced the split. Rebuilding with
/// the same seed yields a byte-identical JSON serialization.
struct DatasetManifest {
  std::vector<ImageRecord> records;
  std::vector<ClassLabel> classes;
  std::uint64_t seed = 0;
  double split_ratio = 1.0;  // 1.0 until split() runs: everything is train
  ImageSize image_size;

  int num_classes() const { return static_cast<int>(classes.size()); }

  std::vector<int> split_indices(SplitKind s) const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(records.size()); ++i) {
      if (records[i].split == s) idx.push_back(i);
    }
    return idx;
  }

  /// Record indices of one split grouped by class index.
  std::vector<std::vector<int>> indices_by_class(SplitKind s) const {
    std::vector<std::vector<int>> groups(classes.size());
    for (int i = 0; i < static_cast<int>(records.size()); ++i) {
      if (records[i].split == s) groups[records[i].label].push_back(i);
    }
    return groups;
  }
};

namespace detail {

inline bool accepted_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

}  // namespace detail

/// Walks <root>/<class_name>/<images>, validates that every accepted file
/// decodes, and returns a manifest with lexicographic class indices. No
/// split is assigned yet; all records are marked train.
inline DatasetManifest scan_dataset(const fs::path& root, const ImageSize& image_size) {
  image_size.validate();
  if (!fs::exists(root) || !fs::is_directory(root)) {
    fail(ErrorCode::config, "dataset root '" + root.string() + "' does not exist");
  }

  std::vector<std::string> class_names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_names.push_back(entry.path().filename().string());
  }
  std::sort(class_names.begin(), class_names.end());
  if (class_names.size() < 2) {
    fail(ErrorCode::validation,
         "dataset root '" + root.string() + "' must contain at least 2 class folders");
  }

  DatasetManifest manifest;
  manifest.image_size = image_size;
  for (int c = 0; c < static_cast<int>(class_names.size()); ++c) {
    manifest.classes.push_back({c, class_names[c]});
    const fs::path class_dir = root / class_names[c];

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dir)) {
      if (entry.is_regular_file() && detail::accepted_image_file(entry.path())) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      fail(ErrorCode::validation, "class folder '" + class_dir.string() + "' holds no images");
    }
    for (const auto& file : files) {
      cv::Mat probe = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
      if (probe.empty()) {
        fail(ErrorCode::validation, "file '" + file.string() + "' does not decode as an image");
      }
      manifest.records.push_back({file, c, SplitKind::train});
    }
  }
  return manifest;
}

/// Stratified train/validation assignment. Per class: the train count is
/// ceil(ratio * n) (fractional remainders go to train), clamped so a class
/// with >= 2 records keeps at least one validation record. Deterministic
/// for a fixed seed.
inline DatasetManifest split(DatasetManifest manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0) || !(ratio < 1.0)) {
    fail(ErrorCode::config, "split ratio must lie strictly between 0 and 1");
  }
  manifest.seed = seed;
  manifest.split_ratio = ratio;

  std::vector<std::vector<int>> by_class(manifest.classes.size());
  for (int i = 0; i < static_cast<int>(manifest.records.size()); ++i) {
    by_class[manifest.records[i].label].push_back(i);
  }

  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    const auto n = static_cast<std::int64_t>(idx.size());
    if (n == 0) continue;
    auto n_train = static_cast<std::int64_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
    n_train = std::clamp<std::int64_t>(n_train, 1, n);
    if (n >= 2 && n_train == n) n_train = n - 1;  // both splits must be populated

    std::mt19937_64 rng(mix64(seed, static_cast<std::uint64_t>(c), 0x51137u));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::int64_t i = 0; i < n; ++i) {
      manifest.records[idx[i]].split = i < n_train ? SplitKind::train : SplitKind::validation;
    }
  }
  return manifest;
}

// --- manifest JSON -------------------------------------------------------

inline nlohmann::ordered_json manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["image_size"] = {{"height", m.image_size.height},
                     {"width", m.image_size.width},
                     {"channels", m.image_size.channels}};
  j["seed"] = m.seed;
  j["split_ratio"] = m.split_ratio;
  auto classes = nlohmann::ordered_json::array();
  for (const auto& c : m.classes) {
    classes.push_back({{"index", c.index}, {"name", c.name}});
  }
  j["classes"] = classes;
  auto records = nlohmann::ordered_json::array();
  for (const auto& r : m.records) {
    records.push_back({{"path", r.path.string()},
                       {"label", r.label},
                       {"split", split_name(r.split)}});
  }
  j["records"] = records;
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    m.image_size.height = j.at("image_size").at("height").get<int>();
    m.image_size.width = j.at("image_size").at("width").get<int>();
    m.image_size.channels = j.at("image_size").at("channels").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.split_ratio = j.at("split_ratio").get<double>();
    for (const auto& c : j.at("classes")) {
      m.classes.push_back({c.at("index").get<int>(), c.at("name").get<std::string>()});
    }
    for (const auto& r : j.at("records")) {
      m.records.push_back({fs::path(r.at("path").get<std::string>()),
                           r.at("label").get<int>(),
                           split_from_name(r.at("split").get<std::string>())});
    }
    for (int c = 0; c < m.num_classes(); ++c) {
      if (m.classes[c].index != c) fail(ErrorCode::validation, "manifest class indices not contiguous");
    }
    for (const auto& r : m.records) {
      if (r.label < 0 || r.label >= m.num_classes()) {
        fail(ErrorCode::validation, "manifest record label out of range");
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("malformed manifest JSON: ") + e.what());
  }
}

inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::data, "cannot write manifest '" + path.string() + "'");
  out << manifest_to_json(m).dump(2) << "\n";
}

inline DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::data, "cannot read manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("malformed manifest JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

// --- batched iteration ----------------------------------------------------

struct Batch {
  Tensor images;            // [B, h, w, c]
  std::vector<int> labels;  // [B]
};

/// Deterministic batched stream over one split. Each epoch visits every
/// record exactly once (the final partial batch is emitted); the shuffle
/// order depends only on (seed, epoch). Image decoding may fan out over
/// several workers, but batch contents never depend on the worker count:
/// augmentation draws happen up front on the epoch's RNG stream.
class BatchIterator {
 public:
  struct Options {
    int batch_size = 1;
    std::uint64_t seed = 0;
    bool shuffle = true;
    ElementKind element_kind = ElementKind::float32;
    std::optional<AugmentConfig> augment;
    int workers = 1;
  };

  BatchIterator(const DatasetManifest& manifest, SplitKind split, Options options)
      : manifest_(&manifest), options_(options) {
    if (options_.batch_size < 1) fail(ErrorCode::config, "batch size must be >= 1");
    if (options_.workers < 1) options_.workers = 1;
    indices_ = manifest.split_indices(split);
    if (indices_.empty()) {
      fail(ErrorCode::validation,
           std::string("split '") + split_name(split) + "' holds no records");
    }
    if (options_.augment) options_.augment->validate();
    start_epoch(0);
  }

  void start_epoch(int epoch) {
    order_ = indices_;
    if (options_.shuffle) {
      std::mt19937_64 rng(mix64(options_.seed, static_cast<std::uint64_t>(epoch), 0xb47c));
      std::shuffle(order_.begin(), order_.end(), rng);
    }
    augment_rng_.seed(mix64(options_.seed, static_cast<std::uint64_t>(epoch), 0xa0b1));
    cursor_ = 0;
  }

  int records_per_epoch() const { return static_cast<int>(order_.size()); }

  int batches_per_epoch() const {
    return static_cast<int>((order_.size() + options_.batch_size - 1) / options_.batch_size);
  }

  std::optional<Batch> next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    const std::size_t take =
        std::min<std::size_t>(options_.batch_size, order_.size() - cursor_);

    std::vector<AugmentOp> ops(take, AugmentOp::identity);
    if (options_.augment) {
      for (auto& op : ops) op = sample_augment_op(*options_.augment, augment_rng_);
    }

    const ImageSize& sz = manifest_->image_size;
    Batch batch;
    batch.images = Tensor({static_cast<int>(take), sz.height, sz.width, sz.channels},
                          options_.element_kind);
    batch.labels.resize(take);

    const std::int64_t stride = static_cast<std::int64_t>(sz.height) * sz.width * sz.channels;
    auto load_slot = [&](std::size_t slot) {
      const ImageRecord& rec = manifest_->records[order_[cursor_ + slot]];
      Tensor img = load_image(rec.path, sz, options_.element_kind);
      if (ops[slot] != AugmentOp::identity) img = apply_augment(img, ops[slot]);
      std::copy(img.data.begin(), img.data.end(),
                batch.images.data.begin() + static_cast<std::int64_t>(slot) * stride);
      batch.labels[slot] = rec.label;
    };

    const int workers = std::min<int>(options_.workers, static_cast<int>(take));
    if (workers <= 1) {
      for (std::size_t slot = 0; slot < take; ++slot) load_slot(slot);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(workers);
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t slot = w; slot < take; slot += workers) load_slot(slot);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    cursor_ += take;
    return batch;
  }

 private:
  const DatasetManifest* manifest_;
  Options options_;
  std::vector<int> indices_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  std::mt19937_64 augment_rng_;
};

}  // namespace tripletclass
