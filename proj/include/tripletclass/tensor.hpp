#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "tripletclass/errors.hpp"
#include "tripletclass/half.hpp"

namespace tripletclass {

enum class ElementKind { float32, float16 };

inline const char* element_kind_name(ElementKind k) {
  return k == ElementKind::float32 ? "float32" : "float16";
}

inline ElementKind element_kind_from_name(const std::string& name) {
  if (name == "float32") return ElementKind::float32;
  if (name == "float16") return ElementKind::float16;
  fail(ErrorCode::config, "unknown element kind '" + name + "'");
}

/// Dense row-major N-dimensional array. Storage is always float32; a
/// float16 tensor holds values already rounded through binary16 so the
/// element kind is a statement about representable values, not layout.
struct Tensor {
  std::vector<int> shape;
  ElementKind kind = ElementKind::float32;
  std::vector<float> data;

  Tensor() = default;

  explicit Tensor(std::vector<int> s, ElementKind k = ElementKind::float32)
      : shape(std::move(s)), kind(k), data(checked_count(shape), 0.0f) {}

  static Tensor from_data(std::vector<int> s, std::vector<float> values,
                          ElementKind k = ElementKind::float32) {
    Tensor t;
    t.shape = std::move(s);
    t.kind = k;
    if (static_cast<std::int64_t>(values.size()) != checked_count(t.shape)) {
      fail(ErrorCode::contract, "tensor data size does not match shape");
    }
    t.data = std::move(values);
    if (k == ElementKind::float16) t.quantize_to_half();
    return t;
  }

  int rank() const { return static_cast<int>(shape.size()); }

  int dim(int i) const {
    if (i < 0 || i >= rank()) fail(ErrorCode::contract, "tensor axis out of range");
    return shape[i];
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  bool empty() const { return data.empty(); }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  float& at(int i) { return data[static_cast<std::size_t>(i)]; }
  float at(int i) const { return data[static_cast<std::size_t>(i)]; }

  float& at(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
  float at(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }

  float& at(int i, int j, int k) {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  float at(int i, int j, int k) const {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }

  float& at(int i, int j, int k, int l) {
    return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }
  float at(int i, int j, int k, int l) const {
    return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }

  /// Rounds every element through binary16 in place.
  void quantize_to_half() {
    for (float& v : data) v = quantize_half(v);
  }

  void convert_to(ElementKind k) {
    if (k == ElementKind::float16 && kind != ElementKind::float16) quantize_to_half();
    kind = k;
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  static std::int64_t checked_count(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
      if (d <= 0) fail(ErrorCode::contract, "tensor dimensions must be positive");
      n *= d;
    }
    return shape.empty() ? 0 : n;
  }
};

inline std::string shape_string(const Tensor& t) {
  std::string s = "[";
  for (int i = 0; i < t.rank(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

}  // namespace tripletclass
