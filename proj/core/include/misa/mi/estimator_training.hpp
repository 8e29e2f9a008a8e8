#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "misa/mi/bounds.hpp"

namespace misa::mi {

using JointSampler = std::function<PairBatch(std::size_t n, Rng& rng)>;

// s ~ N(0,1), a = rho*s + sqrt(1-rho^2)*e. I(S;A) = -0.5*ln(1-rho^2).
struct GaussianJoint {
  double rho = 0.0;

  PairBatch sample(std::size_t n, Rng& rng) const;
  double analytic_mi() const;
  // p(a) = N(0, 1).
  dist::DiagonalGaussian marginal() const;
  JointSampler sampler() const;
};

struct EstimatorConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 256;
  std::size_t k = 50;
  std::vector<std::size_t> hidden = {32, 32};
  ad::Activation activation = ad::Activation::Elu;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Marginal marginal;
  BoundOptions options;
  // Training aborts when an estimate exceeds 10 * max(hint, 0.1).
  std::optional<double> mi_hint;
};

struct EstimatorResult {
  BoundKind kind = BoundKind::BA;
  dist::GaussianPolicy policy;
  Critic critic;
  std::vector<MIBoundEstimate> curve;  // one entry per step, before the update
  // Mean of the estimates over the last 10% of steps.
  MIBoundEstimate final_estimate;
};

// Gradient ascent on `kind` w.r.t. an unsquashed Gaussian policy and a
// single-head critic. The policy gradient of the normalizer is the
// self-normalized score-function estimate over the k policy samples.
EstimatorResult train_estimator(const JointSampler& joint, BoundKind kind,
                                const EstimatorConfig& config);

// Columns: step,kind,value,ba_term,energy_term,normalizer_term.
void write_curve_header(std::ostream& out);
void write_curve_rows(std::ostream& out, const EstimatorResult& result);

}  // namespace misa::mi
