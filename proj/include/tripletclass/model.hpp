#pragma once

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tripletclass/dataset.hpp"
#include "tripletclass/nn.hpp"
#include "tripletclass/tensor.hpp"

namespace tripletclass {

enum class BackboneKind { tiny_cnn, external_adapter };

inline const char* backbone_kind_name(BackboneKind k) {
  return k == BackboneKind::tiny_cnn ? "tiny_cnn" : "external_adapter";
}

inline BackboneKind backbone_kind_from_name(const std::string& name) {
  if (name == "tiny_cnn") return BackboneKind::tiny_cnn;
  if (name == "external_adapter") return BackboneKind::external_adapter;
  fail(ErrorCode::config, "unknown backbone kind '" + name + "'");
}

struct BackboneSpec {
  BackboneKind kind = BackboneKind::tiny_cnn;
  std::string adapter_id;  // which pretrained extractor, e.g. "vgg19"
  ImageSize input_size{64, 64, 3};
  int feature_dim = 64;  // channels of the final feature map
  bool trainable = true;
};

enum class HeadKind { classifier, embedding };

inline const char* head_kind_name(HeadKind k) {
  return k == HeadKind::classifier ? "classifier" : "embedding";
}

inline HeadKind head_kind_from_name(const std::string& name) {
  if (name == "classifier") return HeadKind::classifier;
  if (name == "embedding") return HeadKind::embedding;
  fail(ErrorCode::config, "unknown head kind '" + name + "'");
}

struct HeadSpec {
  HeadKind kind = HeadKind::classifier;
  std::vector<int> hidden_widths;  // classifier hidden dense widths
  int num_classes = 0;             // classifier only
  int embed_dim = 0;               // embedding only; 0 = raw pooled features
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

using TrainingHistory = std::vector<EpochRecord>;

// --- external backbones ----------------------------------------------------

/// Pretrained feature extractors (vgg19, resnet50, inception_resnet_v2,
/// densenet121, ...) plug in behind this interface. They are opaque and
/// frozen: features() maps an input batch to a [B, h', w', C] feature map.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual Tensor features(const Tensor& batch) const = 0;
};

using AdapterFactory =
    std::function<std::shared_ptr<FeatureExtractor>(const BackboneSpec&)>;

class AdapterRegistry {
 public:
  static AdapterRegistry& instance() {
    static AdapterRegistry registry;
    return registry;
  }

  void add(const std::string& id, AdapterFactory factory) {
    factories_[id] = std::move(factory);
  }

  bool contains(const std::string& id) const { return factories_.count(id) > 0; }

  std::shared_ptr<FeatureExtractor> make(const BackboneSpec& spec) const {
    auto it = factories_.find(spec.adapter_id);
    if (it == factories_.end()) {
      fail(ErrorCode::config,
           "no feature extractor registered for adapter '" + spec.adapter_id +
               "'; provide one via AdapterRegistry (weights may live under "
               "TRIPLETCLASS_CACHE)");
    }
    return it->second(spec);
  }

 private:
  std::map<std::string, AdapterFactory> factories_;
};

/// Location for externally supplied backbone weights, if any.
inline std::filesystem::path external_weight_cache_dir() {
  if (const char* env = std::getenv("TRIPLETCLASS_CACHE")) {
    return std::filesystem::path(env);
  }
  return {};
}

// --- tiny CNN backbone ------------------------------------------------------

/// Three stride-2 3x3 conv stages; ReLU between stages, linear final
/// feature map. Small enough to train on a CPU in seconds, which is what
/// every desk-scale test rides on.
struct TinyCnnBackbone {
  Conv2d conv1, conv2, conv3;

  struct Acts {
    Tensor x, c1, r1, c2, r2;
  };

  static TinyCnnBackbone build(const ImageSize& input, int feature_dim, std::mt19937_64& rng) {
    if (input.height < 8 || input.width < 8) {
      fail(ErrorCode::config, "tiny_cnn input dimensions must be at least 8");
    }
    if (feature_dim < 1) fail(ErrorCode::config, "feature_dim must be positive");
    TinyCnnBackbone bb;
    const int w1 = std::max(8, feature_dim / 4);
    const int w2 = std::max(8, feature_dim / 2);
    bb.conv1.init(input.channels, w1, 3, 2, 1, rng);
    bb.conv2.init(w1, w2, 3, 2, 1, rng);
    bb.conv3.init(w2, feature_dim, 3, 2, 1, rng);
    const std::int64_t param_count = bb.conv1.weight.size() + bb.conv1.bias.size() +
                                     bb.conv2.weight.size() + bb.conv2.bias.size() +
                                     bb.conv3.weight.size() + bb.conv3.bias.size();
    if (param_count >= 1000000) {
      fail(ErrorCode::config, "tiny_cnn parameter budget exceeded (< 1e6 required)");
    }
    return bb;
  }

  Tensor forward(const Tensor& x, Acts* acts = nullptr) const {
    Tensor c1 = conv1.forward(x);
    Tensor r1 = relu(c1);
    Tensor c2 = conv2.forward(r1);
    Tensor r2 = relu(c2);
    Tensor out = conv3.forward(r2);
    if (acts) {
      acts->x = x;
      acts->c1 = std::move(c1);
      acts->r1 = std::move(r1);
      acts->c2 = std::move(c2);
      acts->r2 = std::move(r2);
    }
    return out;
  }

  void backward(const Acts& acts, const Tensor& d_features) {
    Tensor dr2 = conv3.backward(acts.r2, d_features);
    Tensor dc2 = relu_backward(acts.c2, dr2);
    Tensor dr1 = conv2.backward(acts.r1, dc2);
    Tensor dc1 = relu_backward(acts.c1, dr1);
    conv1.backward(acts.x, dc1);
  }

  void zero_grads() {
    conv1.zero_grads();
    conv2.zero_grads();
    conv3.zero_grads();
  }

  void collect_params(std::vector<ParamRef>& out) {
    conv1.collect_params("backbone.conv1", out);
    conv2.collect_params("backbone.conv2", out);
    conv3.collect_params("backbone.conv3", out);
  }
};

// --- model ------------------------------------------------------------------

/// Backbone + head with learned parameters. Copying a Model snapshots its
/// parameters (the external adapter, when present, is shared).
struct Model {
  BackboneSpec backbone;
  HeadSpec head;
  TinyCnnBackbone tiny;
  std::shared_ptr<const FeatureExtractor> adapter;
  std::vector<Dense> hidden;          // classifier hidden stack
  Dense output;                       // classifier final dense
  std::optional<Dense> projection;    // embedding projection
  TrainingHistory history;

  int embedding_dim() const {
    return head.embed_dim > 0 ? head.embed_dim : backbone.feature_dim;
  }
};

inline void validate_specs(const BackboneSpec& backbone, const HeadSpec& head) {
  backbone.input_size.validate();
  if (backbone.feature_dim < 1) fail(ErrorCode::config, "feature_dim must be positive");
  if (backbone.kind == BackboneKind::external_adapter) {
    if (backbone.adapter_id.empty()) {
      fail(ErrorCode::config, "external_adapter backbone needs an adapter_id");
    }
    if (backbone.trainable) {
      fail(ErrorCode::config,
           "external adapters are opaque feature extractors and cannot be trainable");
    }
  }
  if (head.kind == HeadKind::classifier) {
    if (head.num_classes < 2) fail(ErrorCode::config, "classifier needs num_classes >= 2");
    for (int wdt : head.hidden_widths) {
      if (wdt < 1) fail(ErrorCode::config, "hidden widths must be positive");
    }
  } else {
    if (head.embed_dim < 0) fail(ErrorCode::config, "embed_dim must be >= 0");
  }
}

inline Model build_model(const BackboneSpec& backbone_spec, const HeadSpec& head_spec,
                         std::uint64_t seed) {
  validate_specs(backbone_spec, head_spec);
  Model m;
  m.backbone = backbone_spec;
  m.head = head_spec;

  std::mt19937_64 rng(mix64(seed, 0x30de1));
  if (backbone_spec.kind == BackboneKind::tiny_cnn) {
    m.tiny = TinyCnnBackbone::build(backbone_spec.input_size, backbone_spec.feature_dim, rng);
  } else {
    m.adapter = AdapterRegistry::instance().make(backbone_spec);
  }

  if (head_spec.kind == HeadKind::classifier) {
    int in = backbone_spec.feature_dim;
    for (int width : head_spec.hidden_widths) {
      Dense d;
      d.init(in, width, rng);
      m.hidden.push_back(std::move(d));
      in = width;
    }
    m.output.init(in, head_spec.num_classes, rng);
  } else if (head_spec.embed_dim > 0) {
    Dense proj;
    proj.init(backbone_spec.feature_dim, head_spec.embed_dim, rng);
    m.projection = std::move(proj);
  }
  return m;
}

inline std::vector<ParamRef> trainable_params(Model& m) {
  std::vector<ParamRef> out;
  if (m.backbone.kind == BackboneKind::tiny_cnn && m.backbone.trainable) {
    m.tiny.collect_params(out);
  }
  for (std::size_t i = 0; i < m.hidden.size(); ++i) {
    m.hidden[i].collect_params("head.hidden" + std::to_string(i), out);
  }
  if (m.head.kind == HeadKind::classifier) m.output.collect_params("head.output", out);
  if (m.projection) m.projection->collect_params("head.projection", out);
  return out;
}

inline std::vector<ParamRef> all_params(Model& m) {
  std::vector<ParamRef> out;
  if (m.backbone.kind == BackboneKind::tiny_cnn) m.tiny.collect_params(out);
  for (std::size_t i = 0; i < m.hidden.size(); ++i) {
    m.hidden[i].collect_params("head.hidden" + std::to_string(i), out);
  }
  if (m.head.kind == HeadKind::classifier) m.output.collect_params("head.output", out);
  if (m.projection) m.projection->collect_params("head.projection", out);
  return out;
}

inline void zero_grads(Model& m) {
  if (m.backbone.kind == BackboneKind::tiny_cnn) m.tiny.zero_grads();
  for (auto& d : m.hidden) d.zero_grads();
  if (m.head.kind == HeadKind::classifier) m.output.zero_grads();
  if (m.projection) m.projection->zero_grads();
}

// --- forward passes ---------------------------------------------------------

struct ForwardCache {
  TinyCnnBackbone::Acts bb;
  Tensor features;                 // backbone output [B, h', w', C]
  Tensor pooled;                   // [B, C]
  std::vector<Tensor> hidden_pre;  // classifier: pre-ReLU dense outputs
  std::vector<Tensor> hidden_act;  // classifier: post-ReLU activations
  Tensor prenorm;                  // embedding: input to l2 normalization
  Tensor embedded;                 // embedding: normalized output
  std::vector<float> norms;
};

namespace detail {

inline void check_batch_shape(const Model& m, const Tensor& batch) {
  const ImageSize& in = m.backbone.input_size;
  if (batch.rank() != 4 || batch.shape[1] != in.height || batch.shape[2] != in.width ||
      batch.shape[3] != in.channels) {
    fail(ErrorCode::contract, "batch shape " + shape_string(batch) +
                                  " does not match backbone input " +
                                  std::to_string(in.height) + "x" + std::to_string(in.width) +
                                  "x" + std::to_string(in.channels));
  }
}

inline Tensor backbone_features(const Model& m, const Tensor& batch,
                                TinyCnnBackbone::Acts* acts) {
  check_batch_shape(m, batch);
  if (m.backbone.kind == BackboneKind::tiny_cnn) {
    return m.tiny.forward(batch, acts);
  }
  if (!m.adapter) fail(ErrorCode::contract, "external adapter not attached to model");
  Tensor f = m.adapter->features(batch);
  if (f.rank() != 4 || f.shape[3] != m.backbone.feature_dim) {
    fail(ErrorCode::contract, "adapter returned feature map " + shape_string(f) +
                                  ", expected channel dim " +
                                  std::to_string(m.backbone.feature_dim));
  }
  return f;
}

}  // namespace detail

inline Tensor classifier_logits_cached(const Model& m, const Tensor& batch,
                                       ForwardCache& cache) {
  if (m.head.kind != HeadKind::classifier) {
    fail(ErrorCode::contract, "model head is not a classifier");
  }
  cache.features = detail::backbone_features(m, batch, &cache.bb);
  cache.pooled = global_average_pool(cache.features);
  Tensor h = cache.pooled;
  cache.hidden_pre.clear();
  cache.hidden_act.clear();
  for (const auto& dense : m.hidden) {
    Tensor pre = dense.forward(h);
    h = relu(pre);
    cache.hidden_pre.push_back(std::move(pre));
    cache.hidden_act.push_back(h);
  }
  return m.output.forward(h);
}

/// Softmax class probabilities, inference mode.
inline Tensor classifier_forward(const Model& m, const Tensor& batch) {
  ForwardCache cache;
  return softmax(classifier_logits_cached(m, batch, cache));
}

inline void classifier_backward(Model& m, const ForwardCache& cache, const Tensor& dlogits) {
  const Tensor& last_act = cache.hidden_act.empty() ? cache.pooled : cache.hidden_act.back();
  Tensor grad = m.output.backward(last_act, dlogits);
  for (int i = static_cast<int>(m.hidden.size()) - 1; i >= 0; --i) {
    grad = relu_backward(cache.hidden_pre[i], grad);
    const Tensor& input = i == 0 ? cache.pooled : cache.hidden_act[i - 1];
    grad = m.hidden[i].backward(input, grad);
  }
  if (m.backbone.kind == BackboneKind::tiny_cnn && m.backbone.trainable) {
    Tensor dfeat = global_average_pool_backward(cache.features.shape, grad);
    m.tiny.backward(cache.bb, dfeat);
  }
}

inline Tensor embedding_forward_cached(const Model& m, const Tensor& batch,
                                       ForwardCache& cache) {
  if (m.head.kind != HeadKind::embedding) {
    fail(ErrorCode::contract, "model head is not an embedding head");
  }
  cache.features = detail::backbone_features(m, batch, &cache.bb);
  cache.pooled = global_average_pool(cache.features);
  cache.prenorm = m.projection ? m.projection->forward(cache.pooled) : cache.pooled;
  cache.embedded = l2_normalize(cache.prenorm, &cache.norms);
  return cache.embedded;
}

/// Unit-norm embedding vectors, inference mode.
inline Tensor embedding_forward(const Model& m, const Tensor& batch) {
  ForwardCache cache;
  return embedding_forward_cached(m, batch, cache);
}

inline void embedding_backward(Model& m, const ForwardCache& cache, const Tensor& dembedding) {
  Tensor grad = l2_normalize_backward(cache.embedded, cache.norms, dembedding);
  if (m.projection) grad = m.projection->backward(cache.pooled, grad);
  if (m.backbone.kind == BackboneKind::tiny_cnn && m.backbone.trainable) {
    Tensor dfeat = global_average_pool_backward(cache.features.shape, grad);
    m.tiny.backward(cache.bb, dfeat);
  }
}

// --- cross entropy -----------------------------------------------------------

inline constexpr double kProbFloor = 1e-12;

/// Mean negative log-likelihood over the batch; probabilities are clamped
/// at 1e-12 before the log.
inline double cross_entropy(const Tensor& probabilities, const std::vector<int>& labels) {
  if (probabilities.rank() != 2) fail(ErrorCode::contract, "cross_entropy expects [B,K]");
  const int B = probabilities.shape[0], K = probabilities.shape[1];
  if (static_cast<int>(labels.size()) != B) {
    fail(ErrorCode::contract, "cross_entropy: labels length does not match batch");
  }
  double sum = 0.0;
  for (int b = 0; b < B; ++b) {
    const int label = labels[b];
    if (label < 0 || label >= K) {
      fail(ErrorCode::contract, "cross_entropy: label " + std::to_string(label) +
                                    " out of range for K=" + std::to_string(K));
    }
    const double p = std::max(static_cast<double>(probabilities.at(b, label)), kProbFloor);
    sum -= std::log(p);
  }
  return sum / B;
}

struct SoftmaxCrossEntropy {
  double loss = 0.0;
  Tensor probs;
  Tensor dlogits;  // (probs - onehot) / B
};

// Softmax and log run in double here so gradient checks against central
// finite differences stay below 1e-4 relative error.
inline SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& logits,
                                                 const std::vector<int>& labels) {
  if (logits.rank() != 2) fail(ErrorCode::contract, "softmax_cross_entropy expects [B,K]");
  const int B = logits.shape[0], K = logits.shape[1];
  if (static_cast<int>(labels.size()) != B) {
    fail(ErrorCode::contract, "softmax_cross_entropy: labels length does not match batch");
  }

  SoftmaxCrossEntropy out;
  out.probs = Tensor({B, K});
  out.dlogits = Tensor({B, K});
  const double inv_b = 1.0 / B;
  double loss_sum = 0.0;
  std::vector<double> row(K);
  for (int b = 0; b < B; ++b) {
    const int label = labels[b];
    if (label < 0 || label >= K) {
      fail(ErrorCode::contract, "softmax_cross_entropy: label out of range");
    }
    const float* in = logits.ptr() + static_cast<std::int64_t>(b) * K;
    double mx = in[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(in[k]));
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      row[k] = std::exp(static_cast<double>(in[k]) - mx);
      sum += row[k];
    }
    float* probs = out.probs.ptr() + static_cast<std::int64_t>(b) * K;
    float* dlogits = out.dlogits.ptr() + static_cast<std::int64_t>(b) * K;
    for (int k = 0; k < K; ++k) {
      const double p = row[k] / sum;
      probs[k] = static_cast<float>(p);
      dlogits[k] = static_cast<float>((p - (k == label ? 1.0 : 0.0)) * inv_b);
    }
    loss_sum -= std::log(std::max(row[label] / sum, kProbFloor));
  }
  out.loss = loss_sum * inv_b;
  return out;
}

// --- checkpoints --------------------------------------------------------------

namespace detail {

constexpr char kBlobMagic[4] = {'T', 'L', 'C', 'P'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace detail

inline nlohmann::ordered_json backbone_to_json(const BackboneSpec& b) {
  return {{"kind", backbone_kind_name(b.kind)},
          {"adapter_id", b.adapter_id},
          {"input_size",
           {{"height", b.input_size.height},
            {"width", b.input_size.width},
            {"channels", b.input_size.channels}}},
          {"feature_dim", b.feature_dim},
          {"trainable", b.trainable}};
}

inline BackboneSpec backbone_from_json(const nlohmann::json& j) {
  BackboneSpec b;
  b.kind = backbone_kind_from_name(j.at("kind").get<std::string>());
  b.adapter_id = j.at("adapter_id").get<std::string>();
  b.input_size.height = j.at("input_size").at("height").get<int>();
  b.input_size.width = j.at("input_size").at("width").get<int>();
  b.input_size.channels = j.at("input_size").at("channels").get<int>();
  b.feature_dim = j.at("feature_dim").get<int>();
  b.trainable = j.at("trainable").get<bool>();
  return b;
}

inline nlohmann::ordered_json head_to_json(const HeadSpec& h) {
  return {{"kind", head_kind_name(h.kind)},
          {"hidden_widths", h.hidden_widths},
          {"num_classes", h.num_classes},
          {"embed_dim", h.embed_dim}};
}

inline HeadSpec head_from_json(const nlohmann::json& j) {
  HeadSpec h;
  h.kind = head_kind_from_name(j.at("kind").get<std::string>());
  h.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
  h.num_classes = j.at("num_classes").get<int>();
  h.embed_dim = j.at("embed_dim").get<int>();
  return h;
}

inline nlohmann::ordered_json history_to_json(const TrainingHistory& history) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& rec : history) {
    arr.push_back({{"epoch", rec.epoch},
                   {"train_loss", rec.train_loss},
                   {"val_loss", rec.val_loss},
                   {"seconds", rec.seconds}});
  }
  return arr;
}

inline TrainingHistory history_from_json(const nlohmann::json& j) {
  TrainingHistory history;
  for (const auto& rec : j) {
    history.push_back({rec.at("epoch").get<int>(), rec.at("train_loss").get<double>(),
                       rec.at("val_loss").get<double>(), rec.at("seconds").get<double>()});
  }
  return history;
}

/// Writes the JSON sidecar (specs + history) and the parameter blob next
/// to each other. The sidecar references the blob by file name.
inline void save_checkpoint(Model& model, const std::filesystem::path& json_path,
                            const std::filesystem::path& blob_path) {
  nlohmann::ordered_json sidecar;
  sidecar["format_version"] = 1;
  sidecar["backbone"] = backbone_to_json(model.backbone);
  sidecar["head"] = head_to_json(model.head);
  sidecar["training_history"] = history_to_json(model.history);
  sidecar["parameters"] = blob_path.filename().string();

  std::ofstream jout(json_path);
  if (!jout) fail(ErrorCode::data, "cannot write checkpoint '" + json_path.string() + "'");
  jout << sidecar.dump(2) << "\n";

  std::ofstream bout(blob_path, std::ios::binary);
  if (!bout) fail(ErrorCode::data, "cannot write parameter blob '" + blob_path.string() + "'");
  bout.write(detail::kBlobMagic, 4);
  detail::write_raw<std::uint32_t>(bout, 1);  // blob version

  auto params = all_params(model);
  detail::write_raw<std::uint32_t>(bout, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    detail::write_raw<std::uint16_t>(bout, static_cast<std::uint16_t>(p.name.size()));
    bout.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    detail::write_raw<std::uint8_t>(bout, static_cast<std::uint8_t>(p.value->rank()));
    for (int d : p.value->shape) detail::write_raw<std::int32_t>(bout, d);
    bout.write(reinterpret_cast<const char*>(p.value->ptr()),
               static_cast<std::streamsize>(p.value->size() * sizeof(float)));
  }
}

inline Model load_checkpoint(const std::filesystem::path& json_path) {
  std::ifstream jin(json_path);
  if (!jin) fail(ErrorCode::data, "cannot read checkpoint '" + json_path.string() + "'");
  nlohmann::json sidecar;
  try {
    jin >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("malformed checkpoint JSON: ") + e.what());
  }

  Model model;
  try {
    model = build_model(backbone_from_json(sidecar.at("backbone")),
                        head_from_json(sidecar.at("head")), 0);
    model.history = history_from_json(sidecar.at("training_history"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("malformed checkpoint JSON: ") + e.what());
  }

  const auto blob_path =
      json_path.parent_path() / sidecar.at("parameters").get<std::string>();
  std::ifstream bin(blob_path, std::ios::binary);
  if (!bin) fail(ErrorCode::integrity, "parameter blob missing: '" + blob_path.string() + "'");

  char magic[4];
  bin.read(magic, 4);
  if (!bin || std::memcmp(magic, detail::kBlobMagic, 4) != 0) {
    fail(ErrorCode::data, "parameter blob has wrong magic: '" + blob_path.string() + "'");
  }
  if (detail::read_raw<std::uint32_t>(bin) != 1) {
    fail(ErrorCode::data, "unsupported parameter blob version");
  }

  auto params = all_params(model);
  std::map<std::string, ParamRef*> by_name;
  for (auto& p : params) by_name[p.name] = &p;

  const auto count = detail::read_raw<std::uint32_t>(bin);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_raw<std::uint16_t>(bin);
    std::string name(name_len, '\0');
    bin.read(name.data(), name_len);
    const int rank = detail::read_raw<std::uint8_t>(bin);
    std::vector<int> shape(rank);
    for (int d = 0; d < rank; ++d) shape[d] = detail::read_raw<std::int32_t>(bin);

    auto it = by_name.find(name);
    if (it == by_name.end()) {
      fail(ErrorCode::validation, "parameter blob holds unknown tensor '" + name + "'");
    }
    Tensor* dst = it->second->value;
    if (dst->shape != shape) {
      fail(ErrorCode::validation, "parameter '" + name + "' shape mismatch in blob");
    }
    bin.read(reinterpret_cast<char*>(dst->ptr()),
             static_cast<std::streamsize>(dst->size() * sizeof(float)));
    if (!bin) fail(ErrorCode::data, "parameter blob truncated at '" + name + "'");
  }
  return model;
}

}  // namespace tripletclass
