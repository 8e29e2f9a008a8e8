#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "misa/autodiff/tensor.hpp"

namespace misa::ad {

using TensorMap = std::map<std::string, Tensor, std::less<>>;

// Handle to a node of one Graph.
struct Node {
  std::uint32_t index = 0;
  friend bool operator==(Node, Node) = default;
};

enum class Axis {
  All,   // reduce to 1x1
  Rows,  // reduce across rows, result 1 x cols
  Cols,  // reduce across columns, result rows x 1
};

enum class OpKind {
  Leaf,
  Constant,
  Add,
  Mul,
  MatMul,
  Exp,
  Log,
  Tanh,
  Elu,
  Relu,
  Softplus,
  Square,
  Clamp,
  Sum,
  Mean,
  Max,
  Broadcast,
  SliceCols,
  ConcatCols,
  Reshape,
};

const char* op_name(OpKind kind) noexcept;

// Define-then-run reverse-mode graph. Nodes are appended in topological order;
// leaf extents are taken from the tensors bound at forward() time, so one graph
// serves every batch size. Elementwise binary ops require equal extents;
// broadcasting is explicit through broadcast_like().
class Graph {
 public:
  Node leaf(std::string name);
  Node constant(Tensor value);

  Node add(Node a, Node b);
  Node mul(Node a, Node b);
  Node matmul(Node a, Node b);
  Node exp(Node x);
  Node log(Node x);
  Node tanh(Node x);
  Node elu(Node x);
  Node relu(Node x);
  Node softplus(Node x);
  Node square(Node x);
  Node clamp(Node x, double lo, double hi);
  Node sum(Node x, Axis axis = Axis::All);
  Node mean(Node x, Axis axis = Axis::All);
  Node max(Node x, Axis axis = Axis::All);
  // Repeat a 1x1, 1xc or rx1 tensor to the extents of `like`.
  Node broadcast_like(Node x, Node like);
  Node slice_cols(Node x, std::size_t begin, std::size_t count);
  Node concat_cols(Node a, Node b);
  // Row-major reinterpretation with `cols` columns; rows follow from the size.
  Node reshape(Node x, std::size_t cols);

  void mark_output(std::string name, Node node);
  bool has_leaf(std::string_view name) const;

  // Evaluates every node. All leaves must be bound. Returns marked outputs.
  TensorMap forward(const TensorMap& inputs);
  // Gradient of the scalar `output` w.r.t. every leaf, keyed by leaf name.
  // Requires a preceding forward(); consumes it.
  TensorMap backward(Node output);

  const Tensor& value(Node node) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Record {
    OpKind kind;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double p0 = 0.0;
    double p1 = 0.0;
    std::size_t i0 = 0;
    std::size_t i1 = 0;
    std::string name{};
    Tensor value{};
    std::vector<std::size_t> argmax{};  // flat index of each group's maximum
  };

  Node push(Record record);
  void check(Node n) const;
  void eval(std::uint32_t id);
  void propagate(std::uint32_t id);
  // Gradient buffer of `to`, zeroed on first touch; null for constants.
  Tensor* grad_target(std::uint32_t to);

  std::vector<Record> nodes_;
  std::map<std::string, std::uint32_t, std::less<>> leaves_;
  std::map<std::string, std::uint32_t, std::less<>> outputs_;
  bool pending_backward_ = false;
  // Backward buffers, kept between calls so their storage is reused.
  std::vector<Tensor> grads_;
  std::vector<bool> live_;
};

}  // namespace misa::ad
