#include "misa/autodiff/mlp.hpp"

#include <Eigen/Core>
#include <cmath>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>

#include "misa/common/binary_io.hpp"
#include "misa/common/error.hpp"

namespace misa::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double activate(Activation a, double x) {
  switch (a) {
    case Activation::Elu: return x >= 0.0 ? x : std::expm1(x);
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

}  // namespace

const char* activation_name(Activation a) noexcept {
  switch (a) {
    case Activation::Elu: return "elu";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "elu") return Activation::Elu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + name + "'");
}

MlpParams MlpParams::init(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                          Activation activation, std::uint64_t seed) {
  MlpParams p;
  p.activation = activation;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  std::size_t fan_in = in;
  std::vector<std::size_t> sizes = hidden;
  sizes.push_back(out);
  for (std::size_t fan_out : sizes) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    Layer layer{Tensor::matrix(fan_in, fan_out), Tensor::matrix(1, fan_out)};
    for (double& w : layer.weight.data()) w = uniform(rng);
    p.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return p;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z = *this;
  for (Tensor* t : z.tensors()) t->fill(0.0);
  return z;
}

std::size_t MlpParams::in_dim() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
std::size_t MlpParams::out_dim() const { return layers.empty() ? 0 : layers.back().weight.cols(); }

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

std::vector<Tensor*> MlpParams::tensors() {
  std::vector<Tensor*> out;
  for (Layer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> MlpParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const Layer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

bool MlpParams::all_finite() const {
  for (const Tensor* t : tensors()) {
    if (!t->all_finite()) return false;
  }
  return true;
}

Tensor mlp_apply(const MlpParams& params, const Tensor& x) {
  if (params.layers.empty()) return x;
  if (x.cols() != params.in_dim()) {
    throw ShapeError(-1, "mlp input has " + std::to_string(x.cols()) + " columns, network expects " +
                             std::to_string(params.in_dim()));
  }
  RowMat h = Eigen::Map<const RowMat>(x.data().data(), static_cast<Eigen::Index>(x.rows()),
                                      static_cast<Eigen::Index>(x.cols()));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Layer& l = params.layers[i];
    Eigen::Map<const RowMat> w(l.weight.data().data(), static_cast<Eigen::Index>(l.weight.rows()),
                               static_cast<Eigen::Index>(l.weight.cols()));
    Eigen::Map<const Eigen::RowVectorXd> b(l.bias.data().data(),
                                           static_cast<Eigen::Index>(l.bias.size()));
    RowMat next = h * w;
    next.rowwise() += b;
    if (i + 1 < params.layers.size()) {
      next = next.unaryExpr([a = params.activation](double v) { return activate(a, v); });
    }
    h = std::move(next);
  }
  Tensor out = Tensor::matrix(static_cast<std::size_t>(h.rows()), static_cast<std::size_t>(h.cols()));
  Eigen::Map<RowMat>(out.data().data(), h.rows(), h.cols()) = h;
  return out;
}

MlpNodes mlp_leaves(Graph& g, const std::string& prefix, const MlpParams& shape) {
  MlpNodes net{prefix, {}, shape.activation};
  for (std::size_t i = 0; i < shape.layers.size(); ++i) {
    const std::string idx = std::to_string(i);
    net.layers.emplace_back(g.leaf(prefix + ".W" + idx), g.leaf(prefix + ".b" + idx));
  }
  return net;
}

Node mlp_forward(Graph& g, const MlpNodes& net, Node x) {
  Node h = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto [w, b] = net.layers[i];
    const Node z = g.matmul(h, w);
    h = g.add(z, g.broadcast_like(b, z));
    if (i + 1 < net.layers.size()) {
      switch (net.activation) {
        case Activation::Elu: h = g.elu(h); break;
        case Activation::Tanh: h = g.tanh(h); break;
        case Activation::Relu: h = g.relu(h); break;
      }
    }
  }
  return h;
}

void bind(TensorMap& inputs, const std::string& prefix, const MlpParams& params) {
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const std::string idx = std::to_string(i);
    inputs.insert_or_assign(prefix + ".W" + idx, params.layers[i].weight);
    inputs.insert_or_assign(prefix + ".b" + idx, params.layers[i].bias);
  }
}

MlpParams gradients_for(const TensorMap& grads, const std::string& prefix, const MlpParams& shape) {
  MlpParams out = shape;
  for (std::size_t i = 0; i < shape.layers.size(); ++i) {
    const std::string idx = std::to_string(i);
    auto w = grads.find(prefix + ".W" + idx);
    auto b = grads.find(prefix + ".b" + idx);
    if (w == grads.end() || b == grads.end()) {
      throw Error("no gradient for network '" + prefix + "' layer " + idx);
    }
    out.layers[i].weight = w->second;
    out.layers[i].bias = b->second;
  }
  return out;
}

void write_mlp(std::ostream& out, const MlpParams& params) {
  nlohmann::json meta;
  meta["layers"] = nlohmann::json::array();
  for (const Layer& l : params.layers) {
    meta["layers"].push_back({l.weight.rows(), l.weight.cols()});
  }
  meta["activation"] = activation_name(params.activation);
  meta["seed"] = params.seed;
  out << meta.dump() << '\n';
  for (const Tensor* t : params.tensors()) {
    for (double v : t->data()) io::write_f64(out, v);
  }
}

MlpParams read_mlp(std::istream& in) {
  const std::streamoff start = in.tellg();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(static_cast<std::uint64_t>(std::max<std::streamoff>(start, 0)), "missing parameter header line");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(static_cast<std::uint64_t>(std::max<std::streamoff>(start, 0)),
                     std::string("parameter header is not JSON: ") + e.what());
  }
  MlpParams p;
  p.activation = parse_activation(meta.at("activation").get<std::string>());
  p.seed = meta.value("seed", std::uint64_t{0});
  for (const auto& dims : meta.at("layers")) {
    const auto rows = dims.at(0).get<std::size_t>();
    const auto cols = dims.at(1).get<std::size_t>();
    if (!p.layers.empty() && p.layers.back().weight.cols() != rows) {
      throw ParseError(static_cast<std::uint64_t>(std::max<std::streamoff>(start, 0)),
                       "layer dimensions do not compose");
    }
    p.layers.push_back({Tensor::matrix(rows, cols), Tensor::matrix(1, cols)});
  }
  for (Tensor* t : p.tensors()) {
    for (double& v : t->data()) {
      if (!io::read_f64(in, v)) {
        const std::streamoff at = in.tellg();
        throw ParseError(static_cast<std::uint64_t>(std::max<std::streamoff>(at, 0)),
                         "truncated parameter block");
      }
    }
  }
  return p;
}

}  // namespace misa::ad
