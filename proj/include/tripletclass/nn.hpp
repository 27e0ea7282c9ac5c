#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripletclass/tensor.hpp"

namespace tripletclass {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

/// Named handle onto one parameter tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

namespace detail {

inline Tensor he_normal(std::vector<int> shape, int fan_in, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
  for (float& v : t.data) v = dist(rng);
  return t;
}

// Unrolls [B,h,w,c] into the patch matrix [B*oh*ow, k*k*c]; out-of-image
// taps stay zero.
inline RowMat im2col(const Tensor& x, int ksize, int stride, int pad, int oh, int ow) {
  const int B = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3];
  RowMat m = RowMat::Zero(static_cast<Eigen::Index>(B) * oh * ow, ksize * ksize * c);
  Eigen::Index row = 0;
  for (int b = 0; b < B; ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++row) {
        float* dst = m.data() + row * m.cols();
        int col = 0;
        for (int ky = 0; ky < ksize; ++ky) {
          const int sy = oy * stride + ky - pad;
          if (sy < 0 || sy >= h) {
            col += ksize * c;
            continue;
          }
          for (int kx = 0; kx < ksize; ++kx, col += c) {
            const int sx = ox * stride + kx - pad;
            if (sx < 0 || sx >= w) continue;
            const float* src = x.ptr() + ((static_cast<std::int64_t>(b) * h + sy) * w + sx) * c;
            std::copy(src, src + c, dst + col);
          }
        }
      }
    }
  }
  return m;
}

inline void col2im_add(const RowMat& m, Tensor& dx, int ksize, int stride, int pad, int oh,
                       int ow) {
  const int B = dx.shape[0], h = dx.shape[1], w = dx.shape[2], c = dx.shape[3];
  Eigen::Index row = 0;
  for (int b = 0; b < B; ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++row) {
        const float* src = m.data() + row * m.cols();
        int col = 0;
        for (int ky = 0; ky < ksize; ++ky) {
          const int sy = oy * stride + ky - pad;
          if (sy < 0 || sy >= h) {
            col += ksize * c;
            continue;
          }
          for (int kx = 0; kx < ksize; ++kx, col += c) {
            const int sx = ox * stride + kx - pad;
            if (sx < 0 || sx >= w) continue;
            float* dst = dx.ptr() + ((static_cast<std::int64_t>(b) * h + sy) * w + sx) * c;
            for (int ch = 0; ch < c; ++ch) dst[ch] += src[col + ch];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2-D convolution over NHWC tensors. Weights live as a [k*k*in_c, out_c]
/// matrix so forward is one GEMM against the im2col patch matrix.
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int ksize = 3;
  int stride = 1;
  int pad = 1;
  Tensor weight, bias;
  Tensor weight_grad, bias_grad;

  void init(int in_c, int out_c, int k, int s, int p, std::mt19937_64& rng) {
    in_channels = in_c;
    out_channels = out_c;
    ksize = k;
    stride = s;
    pad = p;
    const int fan_in = k * k * in_c;
    weight = detail::he_normal({fan_in, out_c}, fan_in, rng);
    bias = Tensor({out_c});
    weight_grad = Tensor({fan_in, out_c});
    bias_grad = Tensor({out_c});
  }

  std::array<int, 2> output_hw(int h, int w) const {
    return {(h + 2 * pad - ksize) / stride + 1, (w + 2 * pad - ksize) / stride + 1};
  }

  Tensor forward(const Tensor& x) const {
    if (x.rank() != 4 || x.shape[3] != in_channels) {
      fail(ErrorCode::contract, "conv input shape mismatch: got " + shape_string(x));
    }
    const auto [oh, ow] = output_hw(x.shape[1], x.shape[2]);
    if (oh < 1 || ow < 1) fail(ErrorCode::contract, "conv input smaller than kernel");
    const RowMat m = detail::im2col(x, ksize, stride, pad, oh, ow);

    Tensor y({x.shape[0], oh, ow, out_channels});
    MatMap ym(y.ptr(), m.rows(), out_channels);
    ConstMatMap wm(weight.ptr(), m.cols(), out_channels);
    ym.noalias() = m * wm;
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.ptr(), out_channels);
    return y;
  }

  /// Accumulates weight/bias gradients and returns dL/dx.
  Tensor backward(const Tensor& x, const Tensor& dy) {
    const auto [oh, ow] = output_hw(x.shape[1], x.shape[2]);
    const RowMat m = detail::im2col(x, ksize, stride, pad, oh, ow);
    ConstMatMap dym(dy.ptr(), m.rows(), out_channels);

    MatMap wg(weight_grad.ptr(), m.cols(), out_channels);
    wg.noalias() += m.transpose() * dym;
    Eigen::Map<Eigen::RowVectorXf> bg(bias_grad.ptr(), out_channels);
    bg += dym.colwise().sum();

    ConstMatMap wm(weight.ptr(), m.cols(), out_channels);
    RowMat dm(m.rows(), m.cols());
    dm.noalias() = dym * wm.transpose();

    Tensor dx(x.shape);
    detail::col2im_add(dm, dx, ksize, stride, pad, oh, ow);
    return dx;
  }

  void zero_grads() {
    std::fill(weight_grad.data.begin(), weight_grad.data.end(), 0.0f);
    std::fill(bias_grad.data.begin(), bias_grad.data.end(), 0.0f);
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", &weight, &weight_grad});
    out.push_back({prefix + ".bias", &bias, &bias_grad});
  }
};

/// Fully connected layer over [B, in] tensors.
struct Dense {
  int in_features = 0;
  int out_features = 0;
  Tensor weight, bias;  // weight [in, out]
  Tensor weight_grad, bias_grad;

  void init(int in_f, int out_f, std::mt19937_64& rng) {
    in_features = in_f;
    out_features = out_f;
    weight = detail::he_normal({in_f, out_f}, in_f, rng);
    bias = Tensor({out_f});
    weight_grad = Tensor({in_f, out_f});
    bias_grad = Tensor({out_f});
  }

  Tensor forward(const Tensor& x) const {
    if (x.rank() != 2 || x.shape[1] != in_features) {
      fail(ErrorCode::contract, "dense input shape mismatch: got " + shape_string(x));
    }
    Tensor y({x.shape[0], out_features});
    ConstMatMap xm(x.ptr(), x.shape[0], in_features);
    ConstMatMap wm(weight.ptr(), in_features, out_features);
    MatMap ym(y.ptr(), x.shape[0], out_features);
    ym.noalias() = xm * wm;
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.ptr(), out_features);
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor& dy) {
    ConstMatMap xm(x.ptr(), x.shape[0], in_features);
    ConstMatMap dym(dy.ptr(), x.shape[0], out_features);
    MatMap wg(weight_grad.ptr(), in_features, out_features);
    wg.noalias() += xm.transpose() * dym;
    Eigen::Map<Eigen::RowVectorXf> bg(bias_grad.ptr(), out_features);
    bg += dym.colwise().sum();

    Tensor dx(x.shape);
    ConstMatMap wm(weight.ptr(), in_features, out_features);
    MatMap dxm(dx.ptr(), x.shape[0], in_features);
    dxm.noalias() = dym * wm.transpose();
    return dx;
  }

  void zero_grads() {
    std::fill(weight_grad.data.begin(), weight_grad.data.end(), 0.0f);
    std::fill(bias_grad.data.begin(), bias_grad.data.end(), 0.0f);
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", &weight, &weight_grad});
    out.push_back({prefix + ".bias", &bias, &bias_grad});
  }
};

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (float& v : y.data) v = v > 0.0f ? v : 0.0f;
  return y;
}

inline Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    if (x.data[i] <= 0.0f) dx.data[i] = 0.0f;
  }
  return dx;
}

/// Spatial mean per channel: [B, h, w, C] -> [B, C].
inline Tensor global_average_pool(const Tensor& x) {
  if (x.rank() != 4) fail(ErrorCode::contract, "global_average_pool expects [B,h,w,C]");
  const int B = x.shape[0], h = x.shape[1], w = x.shape[2], C = x.shape[3];
  Tensor y({B, C});
  const float inv = 1.0f / static_cast<float>(h * w);
  for (int b = 0; b < B; ++b) {
    const float* src = x.ptr() + static_cast<std::int64_t>(b) * h * w * C;
    float* dst = y.ptr() + static_cast<std::int64_t>(b) * C;
    for (int p = 0; p < h * w; ++p) {
      for (int c = 0; c < C; ++c) dst[c] += src[static_cast<std::int64_t>(p) * C + c];
    }
    for (int c = 0; c < C; ++c) dst[c] *= inv;
  }
  return y;
}

inline Tensor global_average_pool_backward(const std::vector<int>& input_shape,
                                           const Tensor& dy) {
  const int B = input_shape[0], h = input_shape[1], w = input_shape[2], C = input_shape[3];
  Tensor dx(input_shape);
  const float inv = 1.0f / static_cast<float>(h * w);
  for (int b = 0; b < B; ++b) {
    const float* src = dy.ptr() + static_cast<std::int64_t>(b) * C;
    float* dst = dx.ptr() + static_cast<std::int64_t>(b) * h * w * C;
    for (int p = 0; p < h * w; ++p) {
      for (int c = 0; c < C; ++c) dst[static_cast<std::int64_t>(p) * C + c] = src[c] * inv;
    }
  }
  return dx;
}

inline constexpr double kNormEpsilon = 1e-12;

/// Scales each row of [B, D] to unit Euclidean length. Rows with norm
/// <= 1e-12 raise a numerical-degeneracy error instead of emitting NaN.
inline Tensor l2_normalize(const Tensor& x, std::vector<float>* norms_out = nullptr) {
  if (x.rank() != 2) fail(ErrorCode::contract, "l2_normalize expects [B,D]");
  const int B = x.shape[0], D = x.shape[1];
  Tensor y({B, D});
  if (norms_out) norms_out->assign(B, 0.0f);
  for (int b = 0; b < B; ++b) {
    const float* src = x.ptr() + static_cast<std::int64_t>(b) * D;
    double sum = 0.0;
    for (int d = 0; d < D; ++d) sum += static_cast<double>(src[d]) * src[d];
    const double norm = std::sqrt(sum);
    if (!(norm > kNormEpsilon)) {
      fail(ErrorCode::numerical,
           "l2_normalize: row " + std::to_string(b) + " has near-zero norm");
    }
    if (norms_out) (*norms_out)[b] = static_cast<float>(norm);
    float* dst = y.ptr() + static_cast<std::int64_t>(b) * D;
    const float inv = static_cast<float>(1.0 / norm);
    for (int d = 0; d < D; ++d) dst[d] = src[d] * inv;
  }
  return y;
}

/// dL/dx for y = x / |x| given y, the cached norms, and dL/dy.
inline Tensor l2_normalize_backward(const Tensor& y, const std::vector<float>& norms,
                                    const Tensor& dy) {
  const int B = y.shape[0], D = y.shape[1];
  Tensor dx({B, D});
  for (int b = 0; b < B; ++b) {
    const float* yr = y.ptr() + static_cast<std::int64_t>(b) * D;
    const float* dyr = dy.ptr() + static_cast<std::int64_t>(b) * D;
    float* dxr = dx.ptr() + static_cast<std::int64_t>(b) * D;
    double dot = 0.0;
    for (int d = 0; d < D; ++d) dot += static_cast<double>(yr[d]) * dyr[d];
    const float inv = 1.0f / norms[b];
    for (int d = 0; d < D; ++d) {
      dxr[d] = (dyr[d] - yr[d] * static_cast<float>(dot)) * inv;
    }
  }
  return dx;
}

/// Row-wise softmax with max subtraction.
inline Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) fail(ErrorCode::contract, "softmax expects [B,K]");
  const int B = logits.shape[0], K = logits.shape[1];
  Tensor probs({B, K});
  for (int b = 0; b < B; ++b) {
    const float* in = logits.ptr() + static_cast<std::int64_t>(b) * K;
    float* out = probs.ptr() + static_cast<std::int64_t>(b) * K;
    float mx = in[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, in[k]);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      out[k] = std::exp(in[k] - mx);
      sum += out[k];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int k = 0; k < K; ++k) out[k] *= inv;
  }
  return probs;
}

}  // namespace tripletclass
