#pragma once

#include <functional>
#include <span>
#include <vector>

#include "misa/distributions/gaussian_policy.hpp"
#include "misa/mcmc/hmc.hpp"
#include "misa/mi/critic.hpp"

namespace misa::mcmc {

// Q(s, a) for every row pair and dQ/da.
struct ActionValueFn {
  std::function<void(const Tensor& states, const Tensor& actions, std::vector<double>& q,
                     Tensor& dq_da)>
      evaluate;
};

// Minimum-head critic value with its action gradient.
ActionValueFn critic_action_value(const mi::Critic& critic);

struct ImprovedSamples {
  // Rows ordered by draw, then state, then chain: t * (B * chains) + i * chains + c.
  Tensor pre_squash;
  Tensor action;
  std::size_t chains = 1;
  std::size_t proposals = 0;
  std::size_t accepted = 0;

  std::size_t state_of(std::size_t row, std::size_t batch) const {
    return (row % (batch * chains)) / chains;
  }
  double acceptance_rate() const;
};

// Draws from p(a|s) proportional to pi(a|s) * exp(Q(s, a)). Every chain starts
// at a fresh policy sample and runs in whitened pre-squash coordinates
// x = (u - mean) / std, where the target is -|x|^2/2 + Q(s, squash(mean + std*x)).
// Each of the config.chains chains per state keeps `draws` states.
ImprovedSamples sample_improved_policy(const dist::GaussianPolicy& policy, const ActionValueFn& q,
                                       const Tensor& states, const HmcConfig& config,
                                       std::size_t draws, Rng& rng);

// sum_j softmax(Q(s, a_j)) f(a_j) over k policy samples at state s.
std::vector<double> snis_expectation(
    const dist::GaussianPolicy& policy, const ActionValueFn& q, std::span<const double> s,
    const std::function<std::vector<double>(std::span<const double>)>& f, std::size_t k, Rng& rng);

// Softmax of each row of a B x k matrix.
Tensor softmax_rows(const Tensor& logits);

}  // namespace misa::mcmc
