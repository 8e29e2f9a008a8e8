#include <benchmark/benchmark.h>

#include "misa/agent/agent.hpp"
#include "misa/agent/variants.hpp"
#include "misa/data/envs.hpp"
#include "misa/data/generate.hpp"

using namespace misa;

namespace {

// One training step on PointMass2D; args are batch size and k.
void BM_TrainStep(benchmark::State& state, const char* variant) {
  data::PointMass2D env;
  const auto ds = data::generate_dataset(env, data::Tier::MediumReplay, 20000, 0);
  agent::TrainConfig c = agent::variant_matrix(variant);
  c.batch_size = static_cast<std::size_t>(state.range(0));
  c.mc_samples = static_cast<std::size_t>(state.range(1));
  agent::MisaAgent a(c, env.state_dim(), env.action_dim());
  for (auto _ : state) benchmark::DoNotOptimize(a.train_step(ds));
}
BENCHMARK_CAPTURE(BM_TrainStep, misa, "MISA")
    ->Args({64, 10})
    ->Args({256, 50})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainStep, sac, "SAC")->Args({256, 50})->Unit(benchmark::kMillisecond);

}  // namespace
