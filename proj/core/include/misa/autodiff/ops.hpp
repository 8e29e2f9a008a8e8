#pragma once

#include "misa/autodiff/graph.hpp"

// Operations composed from Graph primitives.
namespace misa::ad {

Node scale(Graph& g, Node x, double factor);
Node add_scalar(Graph& g, Node x, double value);
Node neg(Graph& g, Node x);
Node sub(Graph& g, Node a, Node b);

// log(sum(exp(x))) along `axis`, max-shifted so 1e4-sized inputs stay finite.
Node log_sum_exp(Graph& g, Node x, Axis axis);
// log(mean(exp(x))) along `axis`.
Node log_mean_exp(Graph& g, Node x, Axis axis);

// Elementwise minimum of two rx1 columns.
Node min_columns(Graph& g, Node a, Node b);

}  // namespace misa::ad
