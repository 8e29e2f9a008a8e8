#include "misa/mi/bounds.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "misa/autodiff/ops.hpp"
#include "misa/common/error.hpp"

namespace misa::mi {
namespace {

std::string canonical(const std::string& name) {
  std::string out;
  for (char c : name) {
    out.push_back(c == '_' ? '-' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

void check_batch(const PairBatch& batch) {
  if (batch.states.rows() == 0) throw ConfigError("bound estimate needs a non-empty batch");
  if (batch.states.rows() != batch.actions.rows()) {
    throw ShapeError(-1, "batch states " + batch.states.shape_string() + " vs actions " +
                             batch.actions.shape_string());
  }
}

MIBoundEstimate energy_bound(BoundKind kind, const PairBatch& batch,
                             const dist::GaussianPolicy& policy, const Critic& critic,
                             std::size_t k, Rng& rng, const Marginal& marginal,
                             const BoundOptions& options) {
  check_batch(batch);
  if (k == 0) throw ConfigError("bound estimate needs k >= 1");
  const double ba = ba_term(batch, policy, marginal);
  const Tensor t_data = critic.evaluate(batch.states, batch.actions);
  const Tensor reps = repeat_rows(batch.states, k);
  const Tensor actions = policy_samples(policy, batch.states, k, rng);
  Tensor t_samples = critic.evaluate(reps, actions);
  t_samples.reshape_matrix(batch.states.rows(), k);
  return combine(kind, ba, t_data.data(), t_samples, options, marginal.mode);
}

}  // namespace

const char* bound_name(BoundKind kind) noexcept {
  switch (kind) {
    case BoundKind::BA: return "BA";
    case BoundKind::MisaF: return "MISA-f";
    case BoundKind::MisaDV: return "MISA-DV";
    case BoundKind::Misa: return "MISA";
  }
  return "?";
}

BoundKind parse_bound(const std::string& name) {
  const std::string c = canonical(name);
  if (c == "BA") return BoundKind::BA;
  if (c == "MISA-F") return BoundKind::MisaF;
  if (c == "MISA-DV") return BoundKind::MisaDV;
  if (c == "MISA") return BoundKind::Misa;
  throw ConfigError("unknown bound '" + name + "'");
}

const char* marginal_mode_name(MarginalMode mode) noexcept {
  switch (mode) {
    case MarginalMode::Fitted: return "fitted";
    case MarginalMode::Analytic: return "analytic";
    case MarginalMode::Omitted: return "omitted";
  }
  return "?";
}

Marginal Marginal::fitted(const Tensor& actions) {
  return {MarginalMode::Fitted, dist::fit_marginal(actions)};
}

Marginal Marginal::analytic(dist::DiagonalGaussian density) {
  return {MarginalMode::Analytic, std::move(density)};
}

double log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw ConfigError("log_mean_exp of an empty set");
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double total = 0.0;
  for (double v : values) total += std::exp(v - peak);
  return peak + std::log(total / static_cast<double>(values.size()));
}

double normalizer_value(BoundKind kind, const Tensor& t_samples, const BoundOptions& options,
                        bool* clipped) {
  const std::size_t rows = t_samples.rows();
  switch (kind) {
    case BoundKind::BA: return 0.0;
    case BoundKind::Misa: {
      double total = 0.0;
      for (std::size_t r = 0; r < rows; ++r) total += log_mean_exp(t_samples.row_span(r));
      return total / static_cast<double>(rows);
    }
    case BoundKind::MisaDV: return log_mean_exp(t_samples.data());
    case BoundKind::MisaF: {
      double total = 0.0;
      for (double t : t_samples.data()) {
        if (std::abs(t) > options.exp_clamp) {
          if (clipped) *clipped = true;
          t = std::clamp(t, -options.exp_clamp, options.exp_clamp);
        }
        total += std::exp(t - 1.0);
      }
      return total / static_cast<double>(t_samples.size());
    }
  }
  return 0.0;
}

Tensor normalizer_weights(BoundKind kind, const Tensor& t_samples, const BoundOptions& options) {
  const std::size_t rows = t_samples.rows();
  const std::size_t k = t_samples.cols();
  Tensor w = Tensor::matrix(rows, k);
  switch (kind) {
    case BoundKind::BA: break;
    case BoundKind::Misa:
      for (std::size_t r = 0; r < rows; ++r) {
        const auto t = t_samples.row_span(r);
        const double peak = *std::max_element(t.begin(), t.end());
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) total += std::exp(t[j] - peak);
        for (std::size_t j = 0; j < k; ++j) {
          w(r, j) = std::exp(t[j] - peak) / total / static_cast<double>(rows);
        }
      }
      break;
    case BoundKind::MisaDV: {
      const auto t = t_samples.data();
      const double peak = *std::max_element(t.begin(), t.end());
      double total = 0.0;
      for (double v : t) total += std::exp(v - peak);
      for (std::size_t i = 0; i < t.size(); ++i) w[i] = std::exp(t[i] - peak) / total;
      break;
    }
    case BoundKind::MisaF:
      for (std::size_t i = 0; i < t_samples.size(); ++i) {
        const double t = t_samples[i];
        w[i] = std::abs(t) > options.exp_clamp
                   ? 0.0
                   : std::exp(t - 1.0) / static_cast<double>(t_samples.size());
      }
      break;
  }
  return w;
}

MIBoundEstimate combine(BoundKind kind, double ba_term, std::span<const double> t_data,
                        const Tensor& t_samples, const BoundOptions& options,
                        MarginalMode marginal_mode) {
  MIBoundEstimate est;
  est.kind = kind;
  est.k = t_samples.cols();
  est.marginal_mode = marginal_mode;
  est.terms.ba_term = ba_term;
  if (kind != BoundKind::BA) {
    double mean_t = 0.0;
    for (double t : t_data) mean_t += t;
    est.terms.energy_term = mean_t / static_cast<double>(t_data.size());
    est.terms.normalizer_term = normalizer_value(kind, t_samples, options, &est.clipped);
  }
  est.value = est.terms.ba_term + est.terms.energy_term - est.terms.normalizer_term;
  return est;
}

double ba_term(const PairBatch& batch, const dist::GaussianPolicy& policy, const Marginal& marginal) {
  check_batch(batch);
  const auto lp = dist::log_prob_batch(policy, batch.states, batch.actions);
  double total = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    total += lp[i];
    if (marginal.mode != MarginalMode::Omitted) {
      total -= marginal.density.log_density(batch.actions.row_span(i));
    }
  }
  return total / static_cast<double>(lp.size());
}

Tensor policy_samples(const dist::GaussianPolicy& policy, const Tensor& states, std::size_t k,
                      Rng& rng) {
  return dist::rsample_batch(policy, repeat_rows(states, k), rng).action;
}

MIBoundEstimate estimate_ba(const PairBatch& batch, const dist::GaussianPolicy& policy,
                            const Marginal& marginal) {
  MIBoundEstimate est;
  est.kind = BoundKind::BA;
  est.marginal_mode = marginal.mode;
  est.terms.ba_term = ba_term(batch, policy, marginal);
  est.value = est.terms.ba_term;
  return est;
}

MIBoundEstimate estimate_misa_f(const PairBatch& batch, const dist::GaussianPolicy& policy,
                                const Critic& critic, std::size_t k, Rng& rng,
                                const Marginal& marginal, const BoundOptions& options) {
  return energy_bound(BoundKind::MisaF, batch, policy, critic, k, rng, marginal, options);
}

MIBoundEstimate estimate_misa_dv(const PairBatch& batch, const dist::GaussianPolicy& policy,
                                 const Critic& critic, std::size_t k, Rng& rng,
                                 const Marginal& marginal, const BoundOptions& options) {
  return energy_bound(BoundKind::MisaDV, batch, policy, critic, k, rng, marginal, options);
}

MIBoundEstimate estimate_misa(const PairBatch& batch, const dist::GaussianPolicy& policy,
                              const Critic& critic, std::size_t k, Rng& rng,
                              const Marginal& marginal, const BoundOptions& options) {
  return energy_bound(BoundKind::Misa, batch, policy, critic, k, rng, marginal, options);
}

MIBoundEstimate estimate(BoundKind kind, const PairBatch& batch, const dist::GaussianPolicy& policy,
                         const Critic& critic, std::size_t k, Rng& rng, const Marginal& marginal,
                         const BoundOptions& options) {
  if (kind == BoundKind::BA) return estimate_ba(batch, policy, marginal);
  return energy_bound(kind, batch, policy, critic, k, rng, marginal, options);
}

ad::Node normalizer(ad::Graph& g, BoundKind kind, ad::Node t_samples, double exp_clamp) {
  switch (kind) {
    case BoundKind::Misa: return g.mean(ad::log_mean_exp(g, t_samples, ad::Axis::Cols));
    case BoundKind::MisaDV: return ad::log_mean_exp(g, t_samples, ad::Axis::All);
    case BoundKind::MisaF: {
      ad::Node t = t_samples;
      if (std::isfinite(exp_clamp)) t = g.clamp(t, -exp_clamp, exp_clamp);
      return g.mean(g.exp(ad::add_scalar(g, t, -1.0)));
    }
    case BoundKind::BA: break;
  }
  throw ConfigError("the BA bound has no normalizer");
}

ad::Node penalty(ad::Graph& g, BoundKind kind, ad::Node t_samples, ad::Node t_data,
                 double exp_clamp) {
  return ad::sub(g, normalizer(g, kind, t_samples, exp_clamp), g.mean(t_data));
}

}  // namespace misa::mi
