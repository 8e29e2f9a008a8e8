#include <benchmark/benchmark.h>

#include "misa/autodiff/graph.hpp"
#include "misa/autodiff/mlp.hpp"
#include "misa/common/rng.hpp"

using namespace misa;
using namespace misa::ad;

namespace {

// Forward and backward of mean(MLP(x)) for a batch of 256 rows.
void BM_MlpForwardBackward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  MlpParams p = MlpParams::init(4, {hidden, hidden}, 1, Activation::Elu, 0);
  Tensor x = Tensor::matrix(256, 4);
  Rng rng = make_stream(0, 0, 0);
  fill_normal(rng, x.data());

  Graph g;
  MlpNodes nodes = mlp_leaves(g, "f", p);
  Node out = g.mean(mlp_forward(g, nodes, g.leaf("x")));
  TensorMap in{{"x", x}};
  ad::bind(in, "f", p);
  for (auto _ : state) {
    g.forward(in);
    benchmark::DoNotOptimize(g.backward(out));
  }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(32)->Arg(64)->Arg(256);

void BM_MlpApply(benchmark::State& state) {
  MlpParams p = MlpParams::init(4, {64, 64}, 2, Activation::Elu, 0);
  Tensor x = Tensor::matrix(static_cast<std::size_t>(state.range(0)), 4, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_apply(p, x));
}
BENCHMARK(BM_MlpApply)->Arg(256)->Arg(12800);

}  // namespace
