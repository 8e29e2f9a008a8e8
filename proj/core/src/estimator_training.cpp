#include "misa/mi/estimator_training.hpp"

#include <cmath>
#include <ostream>

#include "misa/autodiff/adam.hpp"
#include "misa/autodiff/ops.hpp"
#include "misa/common/error.hpp"

namespace misa::mi {
namespace {

enum Stream : std::uint64_t { kJointStream = 1, kSampleStream = 2 };

}  // namespace

PairBatch GaussianJoint::sample(std::size_t n, Rng& rng) const {
  if (!(std::abs(rho) < 1.0)) throw ConfigError("gaussian joint needs |rho| < 1");
  PairBatch batch{Tensor::matrix(n, 1), Tensor::matrix(n, 1)};
  std::vector<double> z(2 * n);
  fill_normal(rng, z);
  const double c = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    batch.states[i] = z[2 * i];
    batch.actions[i] = rho * z[2 * i] + c * z[2 * i + 1];
  }
  return batch;
}

double GaussianJoint::analytic_mi() const { return -0.5 * std::log1p(-rho * rho) + 0.0; }

dist::DiagonalGaussian GaussianJoint::marginal() const { return {{0.0}, {1.0}}; }

JointSampler GaussianJoint::sampler() const {
  return [joint = *this](std::size_t n, Rng& rng) { return joint.sample(n, rng); };
}

EstimatorResult train_estimator(const JointSampler& joint, BoundKind kind,
                                const EstimatorConfig& config) {
  if (config.steps == 0 || config.batch_size == 0 || config.k == 0) {
    throw ConfigError("estimator training needs steps, batch_size and k >= 1");
  }
  Rng probe_rng = make_stream(config.seed, 0, kJointStream);
  const PairBatch probe = joint(1, probe_rng);
  const std::size_t sdim = probe.states.cols();
  const std::size_t adim = probe.actions.cols();

  dist::PolicyConfig pcfg;
  pcfg.squash = false;
  EstimatorResult result;
  result.kind = kind;
  result.policy = dist::GaussianPolicy::init(sdim, adim, config.hidden, config.activation, pcfg,
                                             config.seed * 2 + 1);
  result.critic =
      Critic::init(sdim, adim, config.hidden, config.activation, 1, config.seed * 2 + 2);

  const bool energy = kind != BoundKind::BA;
  ad::Graph g;
  const ad::MlpNodes pi = ad::mlp_leaves(g, "pi", result.policy.net());
  const CriticNodes critic = critic_leaves(g, "T", result.critic);
  const ad::Node s = g.leaf("s");
  const ad::Node a = g.leaf("a");
  const auto head = dist::policy_head(g, pi, s, result.policy);
  const ad::Node ba = g.mean(dist::gaussian_log_density(g, head, a, adim));
  ad::Node bound = ba;
  ad::Node energy_term = ba;
  ad::Node normalizer_term = ba;
  ad::Node t_samples = ba;
  ad::Node loss = ad::neg(g, bound);
  if (energy) {
    // Policy samples enter as constants. The policy sees the normalizer through
    // the score-function surrogate sum(w * log pi(u_rep | s_rep)), with w the
    // normalizer's derivative w.r.t. each sample's critic value.
    const ad::Node s_rep = g.leaf("s_rep");
    const ad::Node u_rep = g.leaf("u_rep");
    const ad::Node w = g.leaf("w");
    t_samples = g.reshape(critic_min(g, critic, g.concat_cols(s_rep, u_rep)), config.k);
    const ad::Node t_data = critic_min(g, critic, g.concat_cols(s, a));
    energy_term = g.mean(t_data);
    normalizer_term = normalizer(g, kind, t_samples, config.options.exp_clamp);
    bound = ad::sub(g, g.add(ba, energy_term), normalizer_term);
    const ad::Node rep_lp = dist::gaussian_log_density(
        g, dist::policy_head(g, pi, s_rep, result.policy), u_rep, adim);
    loss = g.add(ad::neg(g, bound), g.sum(g.mul(w, rep_lp)));
  }

  ad::AdamConfig adam{config.learning_rate};
  ad::AdamState pi_state = ad::AdamState::for_params(result.policy.net());
  ad::AdamState t_state = ad::AdamState::for_params(result.critic.heads.front());
  const double limit = 10.0 * std::max(config.mi_hint.value_or(0.1), 0.1);

  for (std::size_t step = 0; step < config.steps; ++step) {
    Rng joint_rng = make_stream(config.seed, step, kJointStream);
    const PairBatch batch = joint(config.batch_size, joint_rng);
    ad::TensorMap in;
    ad::bind(in, "pi", result.policy.net());
    bind_critic(in, "T", result.critic);
    in.insert_or_assign("s", batch.states);
    in.insert_or_assign("a", batch.actions);
    MIBoundEstimate est;
    if (energy) {
      Rng sample_rng = make_stream(config.seed, step, kSampleStream);
      Tensor s_rep = repeat_rows(batch.states, config.k);
      Tensor u_rep = dist::rsample_batch(result.policy, s_rep, sample_rng).pre_squash;
      Tensor t = result.critic.evaluate(s_rep, u_rep);
      t.reshape_matrix(config.batch_size, config.k);
      Tensor w = normalizer_weights(kind, t, config.options);
      w.reshape_matrix(config.batch_size * config.k, 1);
      in.insert_or_assign("s_rep", std::move(s_rep));
      in.insert_or_assign("u_rep", std::move(u_rep));
      in.insert_or_assign("w", std::move(w));
    }
    g.forward(in);
    const auto grads = g.backward(loss);

    double log_p = 0.0;
    if (config.marginal.mode != MarginalMode::Omitted) {
      for (std::size_t i = 0; i < batch.actions.rows(); ++i) {
        log_p += config.marginal.density.log_density(batch.actions.row_span(i));
      }
      log_p /= static_cast<double>(batch.actions.rows());
    }
    est.kind = kind;
    est.k = energy ? config.k : 0;
    est.marginal_mode = config.marginal.mode;
    est.terms.ba_term = g.value(ba).item() - log_p;
    if (energy) {
      est.terms.energy_term = g.value(energy_term).item();
      est.terms.normalizer_term = g.value(normalizer_term).item();
      if (kind == BoundKind::MisaF) {
        for (double t : g.value(t_samples).data()) {
          est.clipped = est.clipped || std::abs(t) > config.options.exp_clamp;
        }
      }
    }
    est.value = g.value(bound).item() - log_p;
    if (!std::isfinite(est.value)) {
      throw NumericalError(std::string(bound_name(kind)) + " estimate is not finite at step " +
                           std::to_string(step));
    }
    if (est.value > limit) {
      throw NumericalError(std::string(bound_name(kind)) + " estimate " +
                           std::to_string(est.value) + " exceeds divergence limit " +
                           std::to_string(limit) + " at step " + std::to_string(step));
    }
    result.curve.push_back(est);

    ad::adam_step(result.policy.net(), ad::gradients_for(grads, "pi", result.policy.net()),
                  pi_state, adam);
    if (energy) {
      ad::adam_step(result.critic.heads.front(),
                    ad::gradients_for(grads, "T.h0", result.critic.heads.front()), t_state, adam);
    }
  }

  const std::size_t tail = std::max<std::size_t>(1, config.steps / 10);
  MIBoundEstimate& fin = result.final_estimate;
  fin = result.curve.back();
  fin.value = 0.0;
  fin.terms = {};
  fin.clipped = false;
  for (std::size_t i = config.steps - tail; i < config.steps; ++i) {
    const auto& e = result.curve[i];
    fin.value += e.value / static_cast<double>(tail);
    fin.terms.ba_term += e.terms.ba_term / static_cast<double>(tail);
    fin.terms.energy_term += e.terms.energy_term / static_cast<double>(tail);
    fin.terms.normalizer_term += e.terms.normalizer_term / static_cast<double>(tail);
    fin.clipped = fin.clipped || e.clipped;
  }
  return result;
}

void write_curve_header(std::ostream& out) {
  out << "step,kind,value,ba_term,energy_term,normalizer_term\n";
}

void write_curve_rows(std::ostream& out, const EstimatorResult& result) {
  for (std::size_t i = 0; i < result.curve.size(); ++i) {
    const auto& e = result.curve[i];
    out << i << ',' << bound_name(result.kind) << ',' << e.value << ',' << e.terms.ba_term << ','
        << e.terms.energy_term << ',' << e.terms.normalizer_term << '\n';
  }
}

}  // namespace misa::mi
