#include "misa/autodiff/ops.hpp"

namespace misa::ad {

Node scale(Graph& g, Node x, double factor) {
  return g.mul(x, g.broadcast_like(g.constant(Tensor::scalar(factor)), x));
}

Node add_scalar(Graph& g, Node x, double value) {
  return g.add(x, g.broadcast_like(g.constant(Tensor::scalar(value)), x));
}

Node neg(Graph& g, Node x) { return scale(g, x, -1.0); }

Node sub(Graph& g, Node a, Node b) { return g.add(a, neg(g, b)); }

Node log_sum_exp(Graph& g, Node x, Axis axis) {
  const Node peak = g.max(x, axis);
  const Node shifted = sub(g, x, g.broadcast_like(peak, x));
  return g.add(g.log(g.sum(g.exp(shifted), axis)), peak);
}

Node log_mean_exp(Graph& g, Node x, Axis axis) {
  const Node peak = g.max(x, axis);
  const Node shifted = sub(g, x, g.broadcast_like(peak, x));
  return g.add(g.log(g.mean(g.exp(shifted), axis)), peak);
}

Node min_columns(Graph& g, Node a, Node b) {
  return neg(g, g.max(g.concat_cols(neg(g, a), neg(g, b)), Axis::Cols));
}

}  // namespace misa::ad
