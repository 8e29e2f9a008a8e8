#pragma once

#include <optional>
#include <span>
#include <vector>

#include "misa/autodiff/graph.hpp"
#include "misa/autodiff/mlp.hpp"
#include "misa/common/rng.hpp"

namespace misa::dist {

using ad::Tensor;

struct PolicyConfig {
  bool squash = true;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  // When set the network emits only the mean and every coordinate uses this log-std.
  std::optional<double> fixed_log_std;
  // Dataset actions are pulled this far inside (-1, 1) before atanh.
  double atanh_margin = 1e-6;
};

// Diagonal Gaussian over pre-squash values u, optionally squashed to a = tanh(u).
// The network maps a state to [mean | raw log-std]; log-std is clamped to
// [log_std_min, log_std_max].
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(ad::MlpParams net, std::size_t action_dim, PolicyConfig config);

  static GaussianPolicy init(std::size_t state_dim, std::size_t action_dim,
                             const std::vector<std::size_t>& hidden, ad::Activation activation,
                             PolicyConfig config, std::uint64_t seed);

  struct Head {
    Tensor mean;     // n x A
    Tensor log_std;  // n x A, clamped
  };
  Head head(const Tensor& states) const;

  const ad::MlpParams& net() const noexcept { return net_; }
  ad::MlpParams& net() noexcept { return net_; }
  const PolicyConfig& config() const noexcept { return config_; }
  std::size_t state_dim() const { return net_.in_dim(); }
  std::size_t action_dim() const noexcept { return action_dim_; }

 private:
  ad::MlpParams net_;
  std::size_t action_dim_ = 0;
  PolicyConfig config_;
};

struct ActionSample {
  std::vector<double> action;
  std::vector<double> pre_squash;
  double log_prob = 0.0;
  std::vector<double> noise;
};

struct BatchSample {
  Tensor action;      // n x A
  Tensor pre_squash;  // n x A
  Tensor noise;       // n x A
  std::vector<double> log_prob;
};

// Sum over coordinates of log N(u; mean, exp(log_std)).
double gaussian_log_density(std::span<const double> mean, std::span<const double> log_std,
                            std::span<const double> u);
// Sum over coordinates of log(1 - tanh(u)^2), evaluated without cancellation.
double tanh_log_det(std::span<const double> u);

// Exact log-density of `a` at state `s`. Throws when squashing and some |a_i| >= 1.
double log_prob(const GaussianPolicy& policy, std::span<const double> s, std::span<const double> a);
std::vector<double> log_prob_batch(const GaussianPolicy& policy, const Tensor& states,
                                   const Tensor& actions);
// Log-density written in pre-squash coordinates (no atanh round trip).
std::vector<double> log_prob_pre_squash(const GaussianPolicy& policy, const Tensor& states,
                                        const Tensor& pre_squash);

ActionSample rsample(const GaussianPolicy& policy, std::span<const double> s, Rng& rng);
BatchSample rsample_batch(const GaussianPolicy& policy, const Tensor& states, Rng& rng);
BatchSample sample_with_noise(const GaussianPolicy& policy, const Tensor& states,
                              const Tensor& noise);
// squash(mean) for each state.
Tensor mean_action(const GaussianPolicy& policy, const Tensor& states);

// -E[log pi(.|s)]: closed form without squashing, n-sample Monte Carlo with it.
double entropy_estimate(const GaussianPolicy& policy, std::span<const double> s, std::size_t n,
                        Rng& rng);

// Moves actions into [-1 + margin, 1 - margin].
Tensor clip_to_support(const Tensor& actions, double margin);
Tensor atanh_clipped(const Tensor& actions, double margin);

// Graph builders; they mirror the numeric functions above.
struct HeadNodes {
  ad::Node mean;
  ad::Node log_std;
};
HeadNodes policy_head(ad::Graph& g, const ad::MlpNodes& net, ad::Node states,
                      const GaussianPolicy& shape);
ad::Node gaussian_log_density(ad::Graph& g, const HeadNodes& head, ad::Node u,
                              std::size_t action_dim);
ad::Node tanh_log_det(ad::Graph& g, ad::Node u);

struct SampleNodes {
  ad::Node pre_squash;
  ad::Node action;
  ad::Node log_prob;  // rows x 1
};
SampleNodes rsample(ad::Graph& g, const HeadNodes& head, ad::Node noise,
                    const GaussianPolicy& shape);

}  // namespace misa::dist
