#pragma once

#include <cstdint>
#include <vector>

#include "misa/autodiff/mlp.hpp"

namespace misa::ad {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moments for every tensor of one network.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t t = 0;

  static AdamState for_params(const MlpParams& params);
};

// Descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(MlpParams& params, const MlpParams& grad, AdamState& state, const AdamConfig& cfg);

// Same rule for a single scalar parameter.
struct ScalarAdam {
  double m = 0.0;
  double v = 0.0;
  std::int64_t t = 0;

  void step(double& param, double grad, const AdamConfig& cfg);
};

}  // namespace misa::ad
