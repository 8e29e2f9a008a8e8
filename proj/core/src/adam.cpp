#include "misa/autodiff/adam.hpp"

#include <cmath>

#include "misa/common/error.hpp"

namespace misa::ad {

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  for (const Tensor* t : params.tensors()) {
    s.m.emplace_back(t->shape(), 0.0);
    s.v.emplace_back(t->shape(), 0.0);
  }
  return s;
}

void adam_step(MlpParams& params, const MlpParams& grad, AdamState& state, const AdamConfig& cfg) {
  auto p = params.tensors();
  auto g = grad.tensors();
  if (p.size() != g.size() || p.size() != state.m.size()) {
    throw Error("adam_step: parameter, gradient and moment blocks disagree");
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto w = p[k]->data();
    auto dw = g[k]->data();
    auto m = state.m[k].data();
    auto v = state.v[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * dw[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * dw[i] * dw[i];
      w[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  }
}

void ScalarAdam::step(double& param, double grad, const AdamConfig& cfg) {
  t += 1;
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  param -= cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
}

}  // namespace misa::ad
