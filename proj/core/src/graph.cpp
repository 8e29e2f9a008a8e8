#include "misa/autodiff/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "misa/common/error.hpp"

namespace misa::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const Tensor& t) {
  return MapC(t.data().data(), static_cast<Eigen::Index>(t.rows()),
              static_cast<Eigen::Index>(t.cols()));
}

Map view(Tensor& t) {
  return Map(t.data().data(), static_cast<Eigen::Index>(t.rows()),
             static_cast<Eigen::Index>(t.cols()));
}

double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Constant: return "constant";
    case OpKind::Add: return "add";
    case OpKind::Mul: return "mul";
    case OpKind::MatMul: return "matmul";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Tanh: return "tanh";
    case OpKind::Elu: return "elu";
    case OpKind::Relu: return "relu";
    case OpKind::Softplus: return "softplus";
    case OpKind::Square: return "square";
    case OpKind::Clamp: return "clamp";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Max: return "max";
    case OpKind::Broadcast: return "broadcast";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::Reshape: return "reshape";
  }
  return "?";
}

Node Graph::push(Record record) {
  nodes_.push_back(std::move(record));
  return Node{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Graph::check(Node n) const {
  if (n.index >= nodes_.size()) {
    throw ShapeError(static_cast<std::int64_t>(n.index), "node does not belong to this graph");
  }
}

Node Graph::leaf(std::string name) {
  if (leaves_.count(name)) throw Error("duplicate leaf name '" + name + "'");
  Record r{OpKind::Leaf};
  r.name = name;
  Node n = push(std::move(r));
  leaves_.emplace(std::move(name), n.index);
  return n;
}

Node Graph::constant(Tensor value) {
  Record r{OpKind::Constant};
  r.value = std::move(value);
  return push(std::move(r));
}

#define MISA_UNARY(method, kind)        \
  Node Graph::method(Node x) {          \
    check(x);                           \
    Record r{OpKind::kind};             \
    r.a = x.index;                      \
    return push(std::move(r));          \
  }

MISA_UNARY(exp, Exp)
MISA_UNARY(log, Log)
MISA_UNARY(tanh, Tanh)
MISA_UNARY(elu, Elu)
MISA_UNARY(relu, Relu)
MISA_UNARY(softplus, Softplus)
MISA_UNARY(square, Square)
#undef MISA_UNARY

#define MISA_BINARY(method, kind)       \
  Node Graph::method(Node a, Node b) {  \
    check(a);                           \
    check(b);                           \
    Record r{OpKind::kind};             \
    r.a = a.index;                      \
    r.b = b.index;                      \
    return push(std::move(r));          \
  }

MISA_BINARY(add, Add)
MISA_BINARY(mul, Mul)
MISA_BINARY(matmul, MatMul)
MISA_BINARY(concat_cols, ConcatCols)
#undef MISA_BINARY

Node Graph::clamp(Node x, double lo, double hi) {
  check(x);
  Record r{OpKind::Clamp};
  r.a = x.index;
  r.p0 = lo;
  r.p1 = hi;
  return push(std::move(r));
}

Node Graph::sum(Node x, Axis axis) {
  check(x);
  Record r{OpKind::Sum};
  r.a = x.index;
  r.i0 = static_cast<std::size_t>(axis);
  return push(std::move(r));
}

Node Graph::mean(Node x, Axis axis) {
  check(x);
  Record r{OpKind::Mean};
  r.a = x.index;
  r.i0 = static_cast<std::size_t>(axis);
  return push(std::move(r));
}

Node Graph::max(Node x, Axis axis) {
  check(x);
  Record r{OpKind::Max};
  r.a = x.index;
  r.i0 = static_cast<std::size_t>(axis);
  return push(std::move(r));
}

Node Graph::broadcast_like(Node x, Node like) {
  check(x);
  check(like);
  Record r{OpKind::Broadcast};
  r.a = x.index;
  r.b = like.index;
  return push(std::move(r));
}

Node Graph::slice_cols(Node x, std::size_t begin, std::size_t count) {
  check(x);
  Record r{OpKind::SliceCols};
  r.a = x.index;
  r.i0 = begin;
  r.i1 = count;
  return push(std::move(r));
}

Node Graph::reshape(Node x, std::size_t cols) {
  check(x);
  if (cols == 0) throw ShapeError(static_cast<std::int64_t>(nodes_.size()), "reshape to 0 columns");
  Record r{OpKind::Reshape};
  r.a = x.index;
  r.i0 = cols;
  return push(std::move(r));
}

void Graph::mark_output(std::string name, Node node) {
  check(node);
  outputs_[std::move(name)] = node.index;
}

bool Graph::has_leaf(std::string_view name) const { return leaves_.find(name) != leaves_.end(); }

const Tensor& Graph::value(Node node) const {
  check(node);
  return nodes_[node.index].value;
}

TensorMap Graph::forward(const TensorMap& inputs) {
  for (const auto& [name, id] : leaves_) {
    auto it = inputs.find(name);
    if (it == inputs.end()) {
      throw ShapeError(static_cast<std::int64_t>(id), "leaf '" + name + "' is not bound");
    }
    nodes_[id].value = it->second;
  }
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) eval(id);
  pending_backward_ = true;
  TensorMap out;
  for (const auto& [name, id] : outputs_) out.emplace(name, nodes_[id].value);
  return out;
}

void Graph::eval(std::uint32_t id) {
  Record& n = nodes_[id];
  const auto fail = [&](const std::string& what) {
    throw ShapeError(static_cast<std::int64_t>(id), std::string(op_name(n.kind)) + ": " + what);
  };
  switch (n.kind) {
    case OpKind::Leaf:
    case OpKind::Constant:
      return;
    case OpKind::Add:
    case OpKind::Mul: {
      const Tensor& a = nodes_[n.a].value;
      const Tensor& b = nodes_[n.b].value;
      if (!a.same_shape(b)) {
        fail("operand extents " + shape_string(a.rows(), a.cols()) + " and " +
             shape_string(b.rows(), b.cols()) + " differ");
      }
      n.value.reshape_matrix(a.rows(), a.cols());
      auto out = n.value.data();
      auto x = a.data();
      auto y = b.data();
      if (n.kind == OpKind::Add) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
      } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
      }
      return;
    }
    case OpKind::MatMul: {
      const Tensor& a = nodes_[n.a].value;
      const Tensor& b = nodes_[n.b].value;
      if (a.cols() != b.rows()) {
        fail("cannot multiply " + shape_string(a.rows(), a.cols()) + " by " +
             shape_string(b.rows(), b.cols()));
      }
      n.value.reshape_matrix(a.rows(), b.cols());
      view(n.value).noalias() = view(a) * view(b);
      return;
    }
    case OpKind::Exp:
    case OpKind::Log:
    case OpKind::Tanh:
    case OpKind::Elu:
    case OpKind::Relu:
    case OpKind::Softplus:
    case OpKind::Square:
    case OpKind::Clamp: {
      const Tensor& a = nodes_[n.a].value;
      n.value.reshape_matrix(a.rows(), a.cols());
      auto out = n.value.data();
      auto x = a.data();
      switch (n.kind) {
        case OpKind::Exp:
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(x[i]);
          break;
        case OpKind::Log:
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(x[i]);
          break;
        case OpKind::Tanh:
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
          break;
        case OpKind::Elu:
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] >= 0.0 ? x[i] : std::expm1(x[i]);
          break;
        case OpKind::Relu:
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
          break;
        case OpKind::Softplus:
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus_value(x[i]);
          break;
        case OpKind::Square:
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * x[i];
          break;
        default:
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(x[i], n.p0, n.p1);
          break;
      }
      return;
    }
    case OpKind::Sum:
    case OpKind::Mean:
    case OpKind::Max: {
      const Tensor& a = nodes_[n.a].value;
      const auto axis = static_cast<Axis>(n.i0);
      const std::size_t rows = a.rows();
      const std::size_t cols = a.cols();
      if (a.size() == 0) fail("reduction of an empty tensor");
      if (n.kind == OpKind::Max) {
        const std::size_t groups = axis == Axis::All ? 1 : axis == Axis::Rows ? cols : rows;
        if (axis == Axis::All) n.value.reshape_matrix(1, 1);
        else if (axis == Axis::Rows) n.value.reshape_matrix(1, cols);
        else n.value.reshape_matrix(rows, 1);
        n.argmax.assign(groups, 0);
        std::vector<bool> seen(groups, false);
        auto out = n.value.data();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t flat = r * cols + c;
            const std::size_t g = axis == Axis::All ? 0 : axis == Axis::Rows ? c : r;
            const double v = a[flat];
            if (!seen[g] || v > out[g]) {
              seen[g] = true;
              out[g] = v;
              n.argmax[g] = flat;
            }
          }
        }
        return;
      }
      auto m = view(a);
      if (axis == Axis::All) {
        n.value.reshape_matrix(1, 1);
        n.value[0] = m.sum();
        if (n.kind == OpKind::Mean) n.value[0] /= static_cast<double>(a.size());
      } else if (axis == Axis::Rows) {
        n.value.reshape_matrix(1, cols);
        view(n.value) = m.colwise().sum();
        if (n.kind == OpKind::Mean) view(n.value) /= static_cast<double>(rows);
      } else {
        n.value.reshape_matrix(rows, 1);
        view(n.value) = m.rowwise().sum();
        if (n.kind == OpKind::Mean) view(n.value) /= static_cast<double>(cols);
      }
      return;
    }
    case OpKind::Broadcast: {
      const Tensor& a = nodes_[n.a].value;
      const Tensor& like = nodes_[n.b].value;
      const std::size_t rows = like.rows();
      const std::size_t cols = like.cols();
      const bool ok = (a.rows() == 1 || a.rows() == rows) && (a.cols() == 1 || a.cols() == cols);
      if (!ok) {
        fail("cannot broadcast " + shape_string(a.rows(), a.cols()) + " to " +
             shape_string(rows, cols));
      }
      n.value.reshape_matrix(rows, cols);
      const std::size_t ar = a.rows();
      const std::size_t ac = a.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t sr = ar == 1 ? 0 : r;
        for (std::size_t c = 0; c < cols; ++c) n.value(r, c) = a(sr, ac == 1 ? 0 : c);
      }
      return;
    }
    case OpKind::SliceCols: {
      const Tensor& a = nodes_[n.a].value;
      if (n.i0 + n.i1 > a.cols()) {
        fail("columns [" + std::to_string(n.i0) + ", " + std::to_string(n.i0 + n.i1) +
             ") out of range for " + shape_string(a.rows(), a.cols()));
      }
      n.value.reshape_matrix(a.rows(), n.i1);
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < n.i1; ++c) n.value(r, c) = a(r, n.i0 + c);
      }
      return;
    }
    case OpKind::ConcatCols: {
      const Tensor& a = nodes_[n.a].value;
      const Tensor& b = nodes_[n.b].value;
      if (a.rows() != b.rows()) {
        fail("row counts " + std::to_string(a.rows()) + " and " + std::to_string(b.rows()) +
             " differ");
      }
      const std::size_t cols = a.cols() + b.cols();
      n.value.reshape_matrix(a.rows(), cols);
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) n.value(r, c) = a(r, c);
        for (std::size_t c = 0; c < b.cols(); ++c) n.value(r, a.cols() + c) = b(r, c);
      }
      return;
    }
    case OpKind::Reshape: {
      const Tensor& a = nodes_[n.a].value;
      if (a.size() % n.i0 != 0) {
        fail("size " + std::to_string(a.size()) + " is not a multiple of " + std::to_string(n.i0));
      }
      n.value.reshape_matrix(a.size() / n.i0, n.i0);
      std::copy(a.data().begin(), a.data().end(), n.value.data().begin());
      return;
    }
  }
}

TensorMap Graph::backward(Node output) {
  check(output);
  if (!pending_backward_) {
    throw Error("backward() requires a preceding forward()");
  }
  const Tensor& out = nodes_[output.index].value;
  if (out.size() != 1) {
    throw ShapeError(static_cast<std::int64_t>(output.index),
                     "backward() needs a scalar output, got " + out.shape_string());
  }
  pending_backward_ = false;

  grads_.resize(nodes_.size());
  live_.assign(nodes_.size(), false);
  grads_[output.index].reshape_matrix(1, 1);
  grads_[output.index][0] = 1.0;
  live_[output.index] = true;
  for (std::uint32_t id = output.index + 1; id-- > 0;) {
    if (live_[id]) propagate(id);
  }

  TensorMap result;
  for (const auto& [name, id] : leaves_) {
    const Tensor& v = nodes_[id].value;
    Tensor gradient(v.shape(), 0.0);
    if (live_[id]) {
      std::copy(grads_[id].data().begin(), grads_[id].data().end(), gradient.data().begin());
    }
    result.emplace(name, std::move(gradient));
  }
  return result;
}

Tensor* Graph::grad_target(std::uint32_t to) {
  if (nodes_[to].kind == OpKind::Constant) return nullptr;
  Tensor& g = grads_[to];
  if (!live_[to]) {
    const Tensor& v = nodes_[to].value;
    g.reshape_matrix(v.rows(), v.cols());
    g.fill(0.0);
    live_[to] = true;
  }
  return &g;
}

void Graph::propagate(std::uint32_t id) {
  const Record& n = nodes_[id];
  const Tensor& g = grads_[id];
  const auto elementwise = [&](auto&& dfdx) {
    Tensor* d = grad_target(n.a);
    if (!d) return;
    auto dx = d->data();
    auto x = nodes_[n.a].value.data();
    auto y = n.value.data();
    auto gy = g.data();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += gy[i] * dfdx(x[i], y[i]);
  };

  switch (n.kind) {
    case OpKind::Leaf:
    case OpKind::Constant:
      return;
    case OpKind::Add:
    case OpKind::Mul: {
      const Tensor& a = nodes_[n.a].value;
      const Tensor& b = nodes_[n.b].value;
      const bool mul = n.kind == OpKind::Mul;
      if (Tensor* da = grad_target(n.a)) {
        auto d = da->data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += mul ? g[i] * b[i] : g[i];
      }
      if (Tensor* db = grad_target(n.b)) {
        auto d = db->data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += mul ? g[i] * a[i] : g[i];
      }
      return;
    }
    case OpKind::MatMul: {
      const Tensor& a = nodes_[n.a].value;
      const Tensor& b = nodes_[n.b].value;
      if (Tensor* da = grad_target(n.a)) view(*da).noalias() += view(g) * view(b).transpose();
      if (Tensor* db = grad_target(n.b)) view(*db).noalias() += view(a).transpose() * view(g);
      return;
    }
    case OpKind::Exp:
      elementwise([](double, double y) { return y; });
      return;
    case OpKind::Log:
      elementwise([](double x, double) { return 1.0 / x; });
      return;
    case OpKind::Tanh:
      elementwise([](double, double y) { return 1.0 - y * y; });
      return;
    case OpKind::Elu:
      elementwise([](double x, double y) { return x >= 0.0 ? 1.0 : y + 1.0; });
      return;
    case OpKind::Relu:
      elementwise([](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
      return;
    case OpKind::Softplus:
      elementwise([](double x, double) { return sigmoid(x); });
      return;
    case OpKind::Square:
      elementwise([](double x, double) { return 2.0 * x; });
      return;
    case OpKind::Clamp: {
      const double lo = n.p0;
      const double hi = n.p1;
      elementwise([lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
      return;
    }
    case OpKind::Sum:
    case OpKind::Mean: {
      Tensor* d = grad_target(n.a);
      if (!d) return;
      const Tensor& a = nodes_[n.a].value;
      const auto axis = static_cast<Axis>(n.i0);
      double scale = 1.0;
      if (n.kind == OpKind::Mean) {
        scale = axis == Axis::All    ? 1.0 / static_cast<double>(a.size())
                : axis == Axis::Rows ? 1.0 / static_cast<double>(a.rows())
                                     : 1.0 / static_cast<double>(a.cols());
      }
      const std::size_t cols = a.cols();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double gv = axis == Axis::All ? g[0] : axis == Axis::Rows ? g[c] : g[r];
          (*d)[r * cols + c] += gv * scale;
        }
      }
      return;
    }
    case OpKind::Max: {
      Tensor* d = grad_target(n.a);
      if (!d) return;
      for (std::size_t k = 0; k < n.argmax.size(); ++k) (*d)[n.argmax[k]] += g[k];
      return;
    }
    case OpKind::Broadcast: {
      Tensor* d = grad_target(n.a);
      if (!d) return;
      const std::size_t ar = d->rows();
      const std::size_t ac = d->cols();
      const std::size_t rows = g.rows();
      const std::size_t cols = g.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          (*d)[(ar == 1 ? 0 : r) * ac + (ac == 1 ? 0 : c)] += g[r * cols + c];
        }
      }
      return;
    }
    case OpKind::SliceCols: {
      Tensor* d = grad_target(n.a);
      if (!d) return;
      const std::size_t cols = d->cols();
      for (std::size_t r = 0; r < d->rows(); ++r) {
        for (std::size_t c = 0; c < n.i1; ++c) (*d)[r * cols + n.i0 + c] += g[r * n.i1 + c];
      }
      return;
    }
    case OpKind::ConcatCols: {
      const std::size_t ac = nodes_[n.a].value.cols();
      const std::size_t bc = nodes_[n.b].value.cols();
      const std::size_t rows = g.rows();
      const std::size_t cols = ac + bc;
      if (Tensor* da = grad_target(n.a)) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < ac; ++c) (*da)[r * ac + c] += g[r * cols + c];
        }
      }
      if (Tensor* db = grad_target(n.b)) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < bc; ++c) (*db)[r * bc + c] += g[r * cols + ac + c];
        }
      }
      return;
    }
    case OpKind::Reshape: {
      Tensor* d = grad_target(n.a);
      if (!d) return;
      auto dst = d->data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
      return;
    }
  }
}

}  // namespace misa::ad
