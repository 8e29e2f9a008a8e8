#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "misa/autodiff/graph.hpp"
#include "misa/autodiff/tensor.hpp"

namespace misa::ad {

enum class Activation { Elu, Tanh, Relu };

const char* activation_name(Activation a) noexcept;
Activation parse_activation(const std::string& name);

struct Layer {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

// Fully connected network. The activation follows every layer but the last.
struct MlpParams {
  std::vector<Layer> layers;
  Activation activation = Activation::Elu;
  std::uint64_t seed = 0;

  // Glorot-uniform weights, zero biases.
  static MlpParams init(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                        Activation activation, std::uint64_t seed);
  // Same architecture, every parameter zero.
  MlpParams zeros_like() const;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t parameter_count() const;
  // Weights and biases in layer order: W0, b0, W1, b1, ...
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  bool all_finite() const;
};

// Plain batched forward pass (no graph): x is n x in_dim.
Tensor mlp_apply(const MlpParams& params, const Tensor& x);

// Leaves `<prefix>.W<i>` / `<prefix>.b<i>` for each layer of `shape`.
struct MlpNodes {
  std::string prefix;
  std::vector<std::pair<Node, Node>> layers;
  Activation activation = Activation::Elu;
};

MlpNodes mlp_leaves(Graph& g, const std::string& prefix, const MlpParams& shape);
Node mlp_forward(Graph& g, const MlpNodes& net, Node x);
void bind(TensorMap& inputs, const std::string& prefix, const MlpParams& params);
// Collects the gradient blocks for `prefix` into a params-shaped struct.
MlpParams gradients_for(const TensorMap& grads, const std::string& prefix, const MlpParams& shape);

// Parameter checkpoint: one JSON line {"layers":[[in,out],...],"activation":..,"seed":..}
// followed by W0 b0 W1 b1 ... as little-endian float64.
void write_mlp(std::ostream& out, const MlpParams& params);
MlpParams read_mlp(std::istream& in);

}  // namespace misa::ad
