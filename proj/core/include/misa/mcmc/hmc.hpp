#pragma once

#include <functional>
#include <span>
#include <vector>

#include "misa/autodiff/tensor.hpp"
#include "misa/common/rng.hpp"

namespace misa::mcmc {

using ad::Tensor;

struct HmcConfig {
  std::size_t burn_in = 5;
  std::size_t leapfrog_steps = 2;
  double step_size = 1.0;
  std::size_t chains = 1;

  // Throws ConfigError unless leapfrog_steps >= 1 and step_size > 0.
  void validate() const;
};

// Unnormalized log-density over the rows of x (n x d) and its gradient.
struct EnergyTarget {
  std::function<void(const Tensor& x, std::vector<double>& log_density, Tensor& gradient)>
      evaluate;

  // Adapts a single-point density and gradient.
  static EnergyTarget from_point(std::function<double(std::span<const double>)> log_density,
                                 std::function<void(std::span<const double>, std::span<double>)>
                                     gradient);
};

struct HmcResult {
  // Kept states, ordered by draw then chain: row t * chains + c.
  Tensor samples;
  std::size_t chains = 0;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t nonfinite = 0;  // proposals rejected for a non-finite energy

  double acceptance_rate() const;
};

// Runs init.rows() independent chains with unit-mass momentum. Each chain
// performs burn_in + n_samples Metropolis-corrected leapfrog transitions and
// keeps the last n_samples states. Throws NumericalError if any initial state
// has a non-finite energy.
HmcResult hmc_run(const EnergyTarget& target, const Tensor& init, const HmcConfig& config,
                  std::size_t n_samples, Rng& rng);

// Single chain; returns n_samples x d.
Tensor hmc_chain(const EnergyTarget& target, std::span<const double> init, const HmcConfig& config,
                 std::size_t n_samples, Rng& rng);

}  // namespace misa::mcmc
