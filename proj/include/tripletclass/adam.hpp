#pragma once

#include <cmath>
#include <vector>

#include "tripletclass/nn.hpp"
#include "tripletclass/tensor.hpp"

namespace tripletclass {

/// Adam with the conventional default moments; the paper's runs use the
/// optimizer "in default setting" apart from the learning rate.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m, v;  // first/second moment accumulators, aligned with params
  long step = 0;

  static AdamState for_params(const std::vector<ParamRef>& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.emplace_back(p.value->shape);
      s.v.emplace_back(p.value->shape);
    }
    return s;
  }
};

/// One bias-corrected Adam step. Gradients are checked first; a NaN or Inf
/// anywhere aborts the step before any parameter is touched.
inline void adam_update(std::vector<ParamRef>& params, AdamState& state,
                        const AdamConfig& cfg) {
  if (params.size() != state.m.size()) {
    fail(ErrorCode::contract, "adam state does not match parameter list");
  }
  for (const auto& p : params) {
    for (float g : p.grad->data) {
      if (!std::isfinite(g)) {
        fail(ErrorCode::numerical, "non-finite gradient in '" + p.name + "'");
      }
    }
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    float* value = params[i].value->ptr();
    const float* grad = params[i].grad->ptr();
    float* m = state.m[i].ptr();
    float* v = state.v[i].ptr();
    const std::int64_t n = params[i].value->size();
    for (std::int64_t j = 0; j < n; ++j) {
      const double g = grad[j];
      const double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      const double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      value[j] = static_cast<float>(value[j] -
                                    cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

}  // namespace tripletclass
