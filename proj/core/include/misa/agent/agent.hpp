#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "misa/agent/train_config.hpp"
#include "misa/autodiff/adam.hpp"
#include "misa/data/dataset.hpp"
#include "misa/distributions/gaussian_policy.hpp"
#include "misa/mi/critic.hpp"

namespace misa::agent {

using ad::Tensor;

// Purposes of the per-step random streams, see make_stream.
enum Stream : std::uint64_t {
  kBatchStream = 1,
  kNextActionStream = 2,
  kPenaltyStream = 3,
  kPolicyNoiseStream = 4,
  kHmcStream = 5,
  kOodStream = 6,
};

struct TrainState {
  dist::GaussianPolicy policy;
  mi::Critic critic;  // twin Q
  mi::Critic target;
  std::optional<mi::Critic> tnet;
  // gamma1 = softplus(dual_raw) under Lagrange mode.
  double dual_raw = 0.0;
  double log_temperature = 0.0;
  ad::AdamState policy_adam;
  std::vector<ad::AdamState> critic_adam;
  std::optional<ad::AdamState> tnet_adam;
  ad::ScalarAdam dual_adam;
  ad::ScalarAdam temperature_adam;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;

  static TrainState init(const TrainConfig& config, std::size_t state_dim, std::size_t action_dim);

  double gamma1(const TrainConfig& config) const;
  double temperature() const;
  // Critic used as the energy of the MI terms: the T-network when present.
  const mi::Critic& energy() const { return tnet ? *tnet : critic; }
};

struct StepMetrics {
  std::uint64_t step = 0;
  double td_loss = 0.0;
  double penalty = 0.0;
  double gamma1 = 0.0;
  double mi_estimate = 0.0;
  double policy_entropy = 0.0;
  double q_data_mean = 0.0;
  double q_ood_mean = 0.0;
  double temperature = 0.0;
  double hmc_acceptance = 0.0;
  std::uint64_t snis_fallbacks = 0;
};

inline constexpr std::array<const char*, 11> kMetricColumns = {
    "step",           "td_loss",     "penalty",     "gamma1",         "mi_estimate",
    "policy_entropy", "q_data_mean", "q_ood_mean",  "temperature",    "hmc_acceptance",
    "snis_fallbacks"};

void write_metrics_header(std::ostream& out);
// Values are written with 17 significant digits.
void write_metrics_row(std::ostream& out, const StepMetrics& m);

struct CriticGrad {
  double value = 0.0;
  std::vector<ad::MlpParams> heads;
};

struct PenaltyResult {
  double value = 0.0;                // mean over heads
  std::vector<double> head_values;   // normalizer - mean Q(data) per head
  std::vector<ad::MlpParams> grads;  // d(sum of head penalties)/d head params
  double q_data_mean = 0.0;          // min-head
  double q_pi_mean = 0.0;            // min-head, over the proposals
  Tensor t_data;                     // B x 1 min-head values
  Tensor t_samples;                  // B x k min-head values
};

struct PolicyGrad {
  double value = 0.0;
  ad::MlpParams grad;
  double mean_log_prob = 0.0;
};

struct MiGradient {
  ad::MlpParams grad;
  bool snis_fallback = false;
  double hmc_acceptance = 0.0;
};

// Penalty from precomputed critic values: `q_samples` holds k proposal values
// per state (B x k), `q_data` the dataset values (B x 1).
double q_penalty(mi::BoundKind kind, const Tensor& q_samples, const Tensor& q_data,
                 double exp_clamp);

class MisaAgent {
 public:
  MisaAgent(TrainConfig config, std::size_t state_dim, std::size_t action_dim);
  MisaAgent(TrainConfig config, TrainState state);
  ~MisaAgent();
  MisaAgent(MisaAgent&&) noexcept;
  MisaAgent& operator=(MisaAgent&&) noexcept;

  const TrainConfig& config() const noexcept { return config_; }
  const TrainState& state() const noexcept { return state_; }
  TrainState& state() noexcept { return state_; }

  // Sum over heads of 1/2 mean (Q_i(s, a) - y)^2 with a' ~ pi(s'); `value` is
  // the mean over heads. Throws NumericalError on a non-finite target.
  CriticGrad td_loss(const data::Batch& batch, Rng& rng);
  // k policy samples per state serve as proposals; they carry no policy gradient.
  PenaltyResult q_regularizer(const data::Batch& batch, Rng& rng);
  // Same penalty for an explicit B*k x A proposal set (rows state-major).
  PenaltyResult q_regularizer(const data::Batch& batch, const Tensor& proposals);
  // Penalty of the T-network; its gradient trains the T-network.
  PenaltyResult tnet_penalty(const data::Batch& batch, const Tensor& proposals);
  // Dual step toward penalty = tau. No-op in fixed mode.
  void lagrange_update(double penalty);
  // mean(temperature * log pi(a~|s) - min Q(s, a~)), reparameterized.
  PolicyGrad policy_loss_q_term(const data::Batch& batch, Rng& rng);
  // Gradient of -gamma2 * MI bound w.r.t. the policy (descent direction).
  MiGradient mi_policy_gradient(const data::Batch& batch, Rng& rng);

  StepMetrics train_step(const data::OfflineDataset& dataset);

 private:
  struct Graphs;

  TrainConfig config_;
  TrainState state_;
  std::unique_ptr<Graphs> graphs_;
};

// Q(data) against Q at actions outside the dataset's per-cell action range,
// and the share of greedy actions inside it.
struct OodReport {
  double q_data_mean = 0.0;
  double q_ood_mean = 0.0;
  double support_coverage = 0.0;
  std::size_t ood_queries = 0;
};

OodReport ood_report(const TrainState& state, const data::OfflineDataset& dataset,
                     std::size_t bins, std::size_t n_states, std::uint64_t seed);

}  // namespace misa::agent
