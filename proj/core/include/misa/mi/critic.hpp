#pragma once

#include <string>
#include <vector>

#include "misa/autodiff/graph.hpp"
#include "misa/autodiff/mlp.hpp"

namespace misa::mi {

using ad::Tensor;

// Scalar function of (s, a): the minimum over one or more MLP heads applied to
// the concatenation [s | a]. Two heads form a twin Q network, one head an
// independent T network.
struct Critic {
  std::vector<ad::MlpParams> heads;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  // Constant added to every output.
  double offset = 0.0;

  static Critic init(std::size_t state_dim, std::size_t action_dim,
                     const std::vector<std::size_t>& hidden, ad::Activation activation,
                     std::size_t n_heads, std::uint64_t seed);

  // n x 1 minimum over heads (plus offset).
  Tensor evaluate(const Tensor& states, const Tensor& actions) const;
  // n x 1 output of a single head (plus offset).
  Tensor evaluate_head(std::size_t head, const Tensor& states, const Tensor& actions) const;
  bool all_finite() const;
};

Tensor concat_cols(const Tensor& a, const Tensor& b);
// Each row of `x` repeated `times` times consecutively.
Tensor repeat_rows(const Tensor& x, std::size_t times);

struct CriticNodes {
  std::vector<ad::MlpNodes> heads;
  double offset = 0.0;
};

// Leaves `<prefix>.h<i>.W<j>` / `.b<j>`.
CriticNodes critic_leaves(ad::Graph& g, const std::string& prefix, const Critic& shape);
// One rows x 1 node per head; `sa` is [s | a].
std::vector<ad::Node> critic_heads(ad::Graph& g, const CriticNodes& critic, ad::Node sa);
ad::Node critic_min(ad::Graph& g, const CriticNodes& critic, ad::Node sa);
void bind_critic(ad::TensorMap& inputs, const std::string& prefix, const Critic& critic);
std::vector<ad::MlpParams> critic_gradients(const ad::TensorMap& grads, const std::string& prefix,
                                         const Critic& shape);

}  // namespace misa::mi
