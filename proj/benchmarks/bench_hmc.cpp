#include <benchmark/benchmark.h>

#include "misa/distributions/gaussian_policy.hpp"
#include "misa/mcmc/hmc.hpp"
#include "misa/mcmc/improved_policy.hpp"
#include "misa/mi/critic.hpp"

using namespace misa;

namespace {

void BM_HmcStandardNormal(benchmark::State& state) {
  const auto target = mcmc::EnergyTarget::from_point(
      [](std::span<const double> x) { return -0.5 * x[0] * x[0]; },
      [](std::span<const double> x, std::span<double> g) { g[0] = -x[0]; });
  Rng rng = make_stream(0, 0, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mcmc::hmc_chain(target, std::vector<double>{0.0}, mcmc::HmcConfig{}, 1000, rng));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_HmcStandardNormal);

// Improved-policy sampling for a batch of states against a twin critic.
void BM_ImprovedPolicy(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  auto pi = dist::GaussianPolicy::init(3, 2, {64, 64}, ad::Activation::Elu, {}, 0);
  const mi::Critic q = mi::Critic::init(3, 2, {64, 64}, ad::Activation::Elu, 2, 1);
  ad::Tensor states = ad::Tensor::matrix(batch, 3, 0.2);
  mcmc::HmcConfig cfg;
  cfg.chains = 10;
  Rng rng = make_stream(0, 0, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mcmc::sample_improved_policy(pi, mcmc::critic_action_value(q), states, cfg, 5, rng));
  }
}
BENCHMARK(BM_ImprovedPolicy)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
