#include "misa/mi/critic.hpp"

#include <algorithm>

#include "misa/autodiff/ops.hpp"
#include "misa/common/error.hpp"

namespace misa::mi {
namespace {

std::string head_prefix(const std::string& prefix, std::size_t i) {
  return prefix + ".h" + std::to_string(i);
}

}  // namespace

Critic Critic::init(std::size_t state_dim, std::size_t action_dim,
                    const std::vector<std::size_t>& hidden, ad::Activation activation,
                    std::size_t n_heads, std::uint64_t seed) {
  if (n_heads == 0) throw ConfigError("critic needs at least one head");
  Critic c;
  c.state_dim = state_dim;
  c.action_dim = action_dim;
  for (std::size_t i = 0; i < n_heads; ++i) {
    c.heads.push_back(
        ad::MlpParams::init(state_dim + action_dim, hidden, 1, activation, seed + 7919 * i));
  }
  return c;
}

Tensor Critic::evaluate_head(std::size_t head, const Tensor& states, const Tensor& actions) const {
  Tensor out = ad::mlp_apply(heads.at(head), concat_cols(states, actions));
  if (offset != 0.0) {
    for (double& x : out.data()) x += offset;
  }
  return out;
}

Tensor Critic::evaluate(const Tensor& states, const Tensor& actions) const {
  const Tensor sa = concat_cols(states, actions);
  Tensor out = ad::mlp_apply(heads.front(), sa);
  for (std::size_t h = 1; h < heads.size(); ++h) {
    const Tensor other = ad::mlp_apply(heads[h], sa);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], other[i]);
  }
  if (offset != 0.0) {
    for (double& x : out.data()) x += offset;
  }
  return out;
}

bool Critic::all_finite() const {
  return std::all_of(heads.begin(), heads.end(), [](const auto& h) { return h.all_finite(); });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError(-1, "cannot concatenate " + a.shape_string() + " and " + b.shape_string());
  }
  Tensor out = Tensor::matrix(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row_span(r);
    std::copy(a.row_span(r).begin(), a.row_span(r).end(), dst.begin());
    std::copy(b.row_span(r).begin(), b.row_span(r).end(), dst.begin() + a.cols());
  }
  return out;
}

Tensor repeat_rows(const Tensor& x, std::size_t times) {
  Tensor out = Tensor::matrix(x.rows() * times, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t t = 0; t < times; ++t) {
      std::copy(x.row_span(r).begin(), x.row_span(r).end(), out.row_span(r * times + t).begin());
    }
  }
  return out;
}

CriticNodes critic_leaves(ad::Graph& g, const std::string& prefix, const Critic& shape) {
  CriticNodes nodes;
  nodes.offset = shape.offset;
  for (std::size_t i = 0; i < shape.heads.size(); ++i) {
    nodes.heads.push_back(ad::mlp_leaves(g, head_prefix(prefix, i), shape.heads[i]));
  }
  return nodes;
}

std::vector<ad::Node> critic_heads(ad::Graph& g, const CriticNodes& critic, ad::Node sa) {
  std::vector<ad::Node> out;
  for (const auto& head : critic.heads) {
    ad::Node q = ad::mlp_forward(g, head, sa);
    if (critic.offset != 0.0) q = ad::add_scalar(g, q, critic.offset);
    out.push_back(q);
  }
  return out;
}

ad::Node critic_min(ad::Graph& g, const CriticNodes& critic, ad::Node sa) {
  const auto heads = critic_heads(g, critic, sa);
  ad::Node out = heads.front();
  for (std::size_t i = 1; i < heads.size(); ++i) out = ad::min_columns(g, out, heads[i]);
  return out;
}

void bind_critic(ad::TensorMap& inputs, const std::string& prefix, const Critic& critic) {
  for (std::size_t i = 0; i < critic.heads.size(); ++i) {
    ad::bind(inputs, head_prefix(prefix, i), critic.heads[i]);
  }
}

std::vector<ad::MlpParams> critic_gradients(const ad::TensorMap& grads, const std::string& prefix,
                                         const Critic& shape) {
  std::vector<ad::MlpParams> out;
  for (std::size_t i = 0; i < shape.heads.size(); ++i) {
    out.push_back(ad::gradients_for(grads, head_prefix(prefix, i), shape.heads[i]));
  }
  return out;
}

}  // namespace misa::mi
