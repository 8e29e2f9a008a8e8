#pragma once

#include <array>
#include <span>
#include <string>

#include "misa/autodiff/graph.hpp"
#include "misa/common/rng.hpp"
#include "misa/distributions/gaussian_policy.hpp"
#include "misa/distributions/marginal.hpp"
#include "misa/mi/critic.hpp"

namespace misa::mi {

enum class BoundKind { BA, MisaF, MisaDV, Misa };

const char* bound_name(BoundKind kind) noexcept;
// Accepts "BA", "MISA-f", "MISA-DV", "MISA" (case-insensitive, '_' for '-').
BoundKind parse_bound(const std::string& name);

// Tightest first: I >= MISA >= MISA-DV >= MISA-f.
inline constexpr std::array<BoundKind, 3> kBoundChain = {BoundKind::Misa, BoundKind::MisaDV,
                                                         BoundKind::MisaF};

enum class MarginalMode { Fitted, Analytic, Omitted };
const char* marginal_mode_name(MarginalMode mode) noexcept;

// Source of log p(a) for the BA term. Omitted reports E[log pi(a|s)] alone.
struct Marginal {
  MarginalMode mode = MarginalMode::Omitted;
  dist::DiagonalGaussian density;

  static Marginal omitted() { return {}; }
  static Marginal fitted(const Tensor& actions);
  static Marginal analytic(dist::DiagonalGaussian density);
};

struct BoundTerms {
  double ba_term = 0.0;
  double energy_term = 0.0;
  double normalizer_term = 0.0;
};

struct MIBoundEstimate {
  BoundKind kind = BoundKind::BA;
  double value = 0.0;  // ba_term + energy_term - normalizer_term
  BoundTerms terms;
  std::size_t k = 0;
  MarginalMode marginal_mode = MarginalMode::Omitted;
  // Some critic value exceeded the exponential clamp.
  bool clipped = false;
};

struct BoundOptions {
  // |T| is clamped to this inside e^{T-1} (MISA-f only).
  double exp_clamp = 50.0;
};

// log(mean(exp(v))), max-shifted. Infinite inputs propagate.
double log_mean_exp(std::span<const double> values);

// Normalizer of `kind` over a B x k grid of critic values on policy samples:
//   MISA     mean_s log mean_j e^{T_sj}
//   MISA-DV  log mean_{s,j} e^{T_sj}
//   MISA-f   mean_{s,j} e^{T_sj - 1}
// BA has no normalizer (0).
double normalizer_value(BoundKind kind, const Tensor& t_samples, const BoundOptions& options,
                        bool* clipped = nullptr);

// Derivative of normalizer_value w.r.t. each entry of `t_samples` (B x k).
// These are the self-normalized weights of the normalizer's score-function
// gradient.
Tensor normalizer_weights(BoundKind kind, const Tensor& t_samples, const BoundOptions& options);

// Assembles an estimate from precomputed pieces.
MIBoundEstimate combine(BoundKind kind, double ba_term, std::span<const double> t_data,
                        const Tensor& t_samples, const BoundOptions& options,
                        MarginalMode marginal_mode);

struct PairBatch {
  Tensor states;   // B x S
  Tensor actions;  // B x A
};

// mean log pi(a|s) - log p(a).
double ba_term(const PairBatch& batch, const dist::GaussianPolicy& policy, const Marginal& marginal);

// k policy samples for every state, rows ordered state-major (row = i*k + j).
Tensor policy_samples(const dist::GaussianPolicy& policy, const Tensor& states, std::size_t k,
                      Rng& rng);

MIBoundEstimate estimate_ba(const PairBatch& batch, const dist::GaussianPolicy& policy,
                            const Marginal& marginal);
MIBoundEstimate estimate_misa_f(const PairBatch& batch, const dist::GaussianPolicy& policy,
                                const Critic& critic, std::size_t k, Rng& rng,
                                const Marginal& marginal, const BoundOptions& options = {});
MIBoundEstimate estimate_misa_dv(const PairBatch& batch, const dist::GaussianPolicy& policy,
                                 const Critic& critic, std::size_t k, Rng& rng,
                                 const Marginal& marginal, const BoundOptions& options = {});
MIBoundEstimate estimate_misa(const PairBatch& batch, const dist::GaussianPolicy& policy,
                              const Critic& critic, std::size_t k, Rng& rng,
                              const Marginal& marginal, const BoundOptions& options = {});
MIBoundEstimate estimate(BoundKind kind, const PairBatch& batch, const dist::GaussianPolicy& policy,
                         const Critic& critic, std::size_t k, Rng& rng, const Marginal& marginal,
                         const BoundOptions& options = {});

// Graph forms. `t_samples` is B x k, `t_data` is B x 1.
ad::Node normalizer(ad::Graph& g, BoundKind kind, ad::Node t_samples, double exp_clamp);
// normalizer - mean(t_data): the conservative critic penalty.
ad::Node penalty(ad::Graph& g, BoundKind kind, ad::Node t_samples, ad::Node t_data,
                 double exp_clamp);

}  // namespace misa::mi
