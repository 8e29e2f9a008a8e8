#include "misa/agent/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "misa/autodiff/ops.hpp"
#include "misa/common/error.hpp"
#include "misa/data/evaluate.hpp"
#include "misa/mcmc/improved_policy.hpp"
#include "misa/mi/bounds.hpp"

namespace misa::agent {
namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void add_scaled(ad::MlpParams& acc, const ad::MlpParams& g, double factor) {
  auto dst = acc.tensors();
  const auto src = g.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto d = dst[i]->data();
    const auto s = src[i]->data();
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += factor * s[j];
  }
}

void polyak_update(ad::MlpParams& target, const ad::MlpParams& source, double rate) {
  auto dst = target.tensors();
  const auto src = source.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto d = dst[i]->data();
    const auto s = src[i]->data();
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = (1.0 - rate) * d[j] + rate * s[j];
  }
}

double mean_of(const Tensor& t) {
  double total = 0.0;
  for (double v : t.data()) total += v;
  return total / static_cast<double>(t.size());
}

void require_finite(double v, const char* what, std::uint64_t step) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " is not finite at step " + std::to_string(step));
  }
}

Tensor pre_squash_of(const dist::GaussianPolicy& policy, const Tensor& actions) {
  return policy.config().squash ? dist::atanh_clipped(actions, policy.config().atanh_margin)
                                : actions;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  Tensor out = Tensor::matrix(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = x.row_span(rows[i]);
    std::copy(src.begin(), src.end(), out.row_span(i).begin());
  }
  return out;
}

// Per-row log-mean-exp of a B x k grid.
std::vector<double> row_log_mean_exp(const Tensor& t) {
  std::vector<double> out(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) out[r] = mi::log_mean_exp(t.row_span(r));
  return out;
}

struct PenaltyNodes {
  std::vector<ad::Node> data;     // B x 1 per head
  std::vector<ad::Node> samples;  // B x k per head
  std::vector<ad::Node> penalty;  // 1 x 1 per head
  ad::Node total;
};

PenaltyNodes build_penalty(ad::Graph& g, const std::string& prefix, const mi::Critic& shape,
                           mi::BoundKind kind, std::size_t k, double exp_clamp) {
  const mi::CriticNodes nodes = mi::critic_leaves(g, prefix, shape);
  const ad::Node s = g.leaf("s");
  const ad::Node a = g.leaf("a");
  const ad::Node s_rep = g.leaf("s_rep");
  const ad::Node a_pi = g.leaf("a_pi");
  const auto data = mi::critic_heads(g, nodes, g.concat_cols(s, a));
  const auto samples = mi::critic_heads(g, nodes, g.concat_cols(s_rep, a_pi));
  PenaltyNodes out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.data.push_back(data[i]);
    out.samples.push_back(g.reshape(samples[i], k));
    out.penalty.push_back(mi::penalty(g, kind, out.samples.back(), data[i], exp_clamp));
    out.total = i == 0 ? out.penalty.back() : g.add(out.total, out.penalty.back());
  }
  return out;
}

Tensor elementwise_min(const std::vector<Tensor>& parts) {
  Tensor out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::min(out[j], parts[i][j]);
  }
  return out;
}

}  // namespace

TrainState TrainState::init(const TrainConfig& config, std::size_t state_dim,
                            std::size_t action_dim) {
  config.validate();
  TrainState st;
  dist::PolicyConfig pcfg;
  pcfg.squash = config.squash;
  st.seed = config.seed;
  st.policy = dist::GaussianPolicy::init(state_dim, action_dim, config.hidden, config.activation,
                                         pcfg, config.seed * 16 + 1);
  st.critic = mi::Critic::init(state_dim, action_dim, config.hidden, config.activation, 2,
                               config.seed * 16 + 2);
  st.target = st.critic;
  if (config.misa_t) {
    st.tnet = mi::Critic::init(state_dim, action_dim, config.hidden, config.activation, 1,
                               config.seed * 16 + 3);
    st.tnet_adam = ad::AdamState::for_params(st.tnet->heads.front());
  }
  st.dual_raw = config.q_reg == QRegMode::Lagrange ? inverse_softplus(config.gamma1) : 0.0;
  st.log_temperature = std::log(config.init_temperature);
  st.policy_adam = ad::AdamState::for_params(st.policy.net());
  for (const auto& head : st.critic.heads) st.critic_adam.push_back(ad::AdamState::for_params(head));
  return st;
}

double TrainState::gamma1(const TrainConfig& config) const {
  return config.q_reg == QRegMode::Lagrange ? softplus(dual_raw) : config.gamma1;
}

double TrainState::temperature() const { return std::exp(log_temperature); }

void write_metrics_header(std::ostream& out) {
  for (std::size_t i = 0; i < kMetricColumns.size(); ++i) {
    out << (i ? "," : "") << kMetricColumns[i];
  }
  out << '\n';
}

void write_metrics_row(std::ostream& out, const StepMetrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu\n",
                static_cast<unsigned long long>(m.step), m.td_loss, m.penalty, m.gamma1,
                m.mi_estimate, m.policy_entropy, m.q_data_mean, m.q_ood_mean, m.temperature,
                m.hmc_acceptance, static_cast<unsigned long long>(m.snis_fallbacks));
  out << buf;
}

double q_penalty(mi::BoundKind kind, const Tensor& q_samples, const Tensor& q_data,
                 double exp_clamp) {
  if (q_samples.rows() != q_data.rows()) {
    throw ShapeError(-1, "penalty: samples " + q_samples.shape_string() + " vs data " +
                             q_data.shape_string());
  }
  return mi::normalizer_value(kind, q_samples, {exp_clamp}) - mean_of(q_data);
}

struct MisaAgent::Graphs {
  ad::Graph td;
  ad::Node td_total;

  ad::Graph pen;
  PenaltyNodes pen_nodes;

  ad::Graph tpen;
  PenaltyNodes tpen_nodes;

  ad::Graph pq;
  ad::Node pq_loss;
  ad::Node pq_log_prob;

  ad::Graph mi;
  ad::Node mi_loss;
};

MisaAgent::MisaAgent(TrainConfig config, std::size_t state_dim, std::size_t action_dim)
    : MisaAgent(config, TrainState::init(config, state_dim, action_dim)) {}

MisaAgent::MisaAgent(TrainConfig config, TrainState state)
    : config_(std::move(config)), state_(std::move(state)), graphs_(std::make_unique<Graphs>()) {
  config_.validate();
  Graphs& G = *graphs_;
  const std::size_t k = config_.mc_samples;
  const std::size_t adim = state_.policy.action_dim();

  {
    ad::Graph& g = G.td;
    const mi::CriticNodes q = mi::critic_leaves(g, "Q", state_.critic);
    const ad::Node s = g.leaf("s");
    const ad::Node a = g.leaf("a");
    const ad::Node y = g.leaf("y");
    const auto heads = mi::critic_heads(g, q, g.concat_cols(s, a));
    for (std::size_t i = 0; i < heads.size(); ++i) {
      const ad::Node l = ad::scale(g, g.mean(g.square(ad::sub(g, heads[i], y))), 0.5);
      G.td_total = i == 0 ? l : g.add(G.td_total, l);
    }
  }

  G.pen_nodes = build_penalty(G.pen, "Q", state_.critic, config_.bound, k, config_.exp_clamp);
  if (state_.tnet) {
    G.tpen_nodes = build_penalty(G.tpen, "T", *state_.tnet, config_.bound, k, config_.exp_clamp);
  }

  {
    ad::Graph& g = G.pq;
    const ad::MlpNodes pi = ad::mlp_leaves(g, "pi", state_.policy.net());
    const mi::CriticNodes q = mi::critic_leaves(g, "Q", state_.critic);
    const ad::Node s = g.leaf("s");
    const ad::Node eps = g.leaf("eps");
    const ad::Node alpha = g.leaf("alpha");
    const auto sample =
        dist::rsample(g, dist::policy_head(g, pi, s, state_.policy), eps, state_.policy);
    const ad::Node qv = mi::critic_min(g, q, g.concat_cols(s, sample.action));
    const ad::Node weighted = g.mul(g.broadcast_like(alpha, sample.log_prob), sample.log_prob);
    G.pq_loss = g.mean(ad::sub(g, weighted, qv));
    G.pq_log_prob = g.mean(sample.log_prob);
  }

  {
    ad::Graph& g = G.mi;
    const ad::MlpNodes pi = ad::mlp_leaves(g, "pi", state_.policy.net());
    const ad::Node s_d = g.leaf("s_data");
    const ad::Node u_d = g.leaf("u_data");
    const auto data_lp =
        dist::gaussian_log_density(g, dist::policy_head(g, pi, s_d, state_.policy), u_d, adim);
    if (config_.mi_grad == MiGradMode::Reparam) {
      const mi::CriticNodes e = mi::critic_leaves(g, "E", state_.energy());
      const ad::Node s_rep = g.leaf("s_rep");
      const ad::Node eps = g.leaf("eps");
      const auto sample =
          dist::rsample(g, dist::policy_head(g, pi, s_rep, state_.policy), eps, state_.policy);
      const ad::Node t = g.reshape(mi::critic_min(g, e, g.concat_cols(s_rep, sample.action)), k);
      ad::Node loss = mi::normalizer(g, config_.bound, t, config_.exp_clamp);
      if (!config_.no_ba) loss = ad::sub(g, loss, g.mean(data_lp));
      G.mi_loss = ad::scale(g, loss, config_.gamma2);
    } else {
      const ad::Node w_d = g.leaf("w_data");
      G.mi_loss = ad::neg(g, g.sum(g.mul(w_d, data_lp)));
      if (config_.mi_grad == MiGradMode::UnbiasedMcmc) {
        const ad::Node s_c = g.leaf("s_corr");
        const ad::Node u_c = g.leaf("u_corr");
        const ad::Node w_c = g.leaf("w_corr");
        const auto corr_lp =
            dist::gaussian_log_density(g, dist::policy_head(g, pi, s_c, state_.policy), u_c, adim);
        G.mi_loss = g.add(G.mi_loss, g.sum(g.mul(w_c, corr_lp)));
      }
    }
  }
}

MisaAgent::~MisaAgent() = default;
MisaAgent::MisaAgent(MisaAgent&&) noexcept = default;
MisaAgent& MisaAgent::operator=(MisaAgent&&) noexcept = default;

CriticGrad MisaAgent::td_loss(const data::Batch& batch, Rng& rng) {
  const auto next = dist::rsample_batch(state_.policy, batch.next_states, rng);
  const Tensor q_next = state_.target.evaluate(batch.next_states, next.action);
  const double alpha = state_.temperature();
  Tensor y = Tensor::matrix(batch.size(), 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch.rewards[i] + config_.discount * (1.0 - batch.terminals[i]) *
                                  (q_next[i] - alpha * next.log_prob[i]);
    if (!std::isfinite(y[i])) {
      throw NumericalError("TD target is not finite at step " + std::to_string(state_.step) +
                           " (row " + std::to_string(i) + ")");
    }
  }
  ad::TensorMap in;
  mi::bind_critic(in, "Q", state_.critic);
  in.insert_or_assign("s", batch.states);
  in.insert_or_assign("a", batch.actions);
  in.insert_or_assign("y", std::move(y));
  ad::Graph& g = graphs_->td;
  g.forward(in);
  CriticGrad out;
  out.value = g.value(graphs_->td_total).item() / static_cast<double>(state_.critic.heads.size());
  out.heads = mi::critic_gradients(g.backward(graphs_->td_total), "Q", state_.critic);
  return out;
}

PenaltyResult MisaAgent::q_regularizer(const data::Batch& batch, Rng& rng) {
  return q_regularizer(batch,
                       mi::policy_samples(state_.policy, batch.states, config_.mc_samples, rng));
}

namespace {

PenaltyResult run_penalty(ad::Graph& g, const PenaltyNodes& nodes, const std::string& prefix,
                          const mi::Critic& critic, const data::Batch& batch,
                          const Tensor& proposals, std::size_t k) {
  if (proposals.rows() != batch.size() * k) {
    throw ShapeError(-1, "penalty proposals: expected " + std::to_string(batch.size() * k) +
                             " rows, got " + proposals.shape_string());
  }
  ad::TensorMap in;
  mi::bind_critic(in, prefix, critic);
  in.insert_or_assign("s", batch.states);
  in.insert_or_assign("a", batch.actions);
  in.insert_or_assign("s_rep", mi::repeat_rows(batch.states, k));
  in.insert_or_assign("a_pi", proposals);
  g.forward(in);
  PenaltyResult out;
  std::vector<Tensor> data;
  std::vector<Tensor> samples;
  for (std::size_t i = 0; i < nodes.penalty.size(); ++i) {
    out.head_values.push_back(g.value(nodes.penalty[i]).item());
    out.value += out.head_values.back() / static_cast<double>(nodes.penalty.size());
    data.push_back(g.value(nodes.data[i]));
    samples.push_back(g.value(nodes.samples[i]));
  }
  out.t_data = elementwise_min(data);
  out.t_samples = elementwise_min(samples);
  out.q_data_mean = mean_of(out.t_data);
  out.q_pi_mean = mean_of(out.t_samples);
  out.grads = mi::critic_gradients(g.backward(nodes.total), prefix, critic);
  return out;
}

}  // namespace

PenaltyResult MisaAgent::q_regularizer(const data::Batch& batch, const Tensor& proposals) {
  return run_penalty(graphs_->pen, graphs_->pen_nodes, "Q", state_.critic, batch, proposals,
                     config_.mc_samples);
}

PenaltyResult MisaAgent::tnet_penalty(const data::Batch& batch, const Tensor& proposals) {
  if (!state_.tnet) throw ConfigError("tnet_penalty needs misa_t");
  return run_penalty(graphs_->tpen, graphs_->tpen_nodes, "T", *state_.tnet, batch, proposals,
                     config_.mc_samples);
}

void MisaAgent::lagrange_update(double penalty) {
  if (config_.q_reg != QRegMode::Lagrange) return;
  // Ascent on gamma1 * (penalty - tau) through gamma1 = softplus(dual_raw).
  const double grad = -(penalty - config_.tau) * sigmoid(state_.dual_raw);
  state_.dual_adam.step(state_.dual_raw, grad, {config_.resolved_dual_lr()});
}

PolicyGrad MisaAgent::policy_loss_q_term(const data::Batch& batch, Rng& rng) {
  Tensor eps = Tensor::matrix(batch.size(), state_.policy.action_dim());
  fill_normal(rng, eps.data());
  ad::TensorMap in;
  ad::bind(in, "pi", state_.policy.net());
  mi::bind_critic(in, "Q", state_.critic);
  in.insert_or_assign("s", batch.states);
  in.insert_or_assign("eps", std::move(eps));
  in.insert_or_assign("alpha", Tensor::scalar(state_.temperature()));
  ad::Graph& g = graphs_->pq;
  g.forward(in);
  PolicyGrad out;
  out.value = g.value(graphs_->pq_loss).item();
  out.mean_log_prob = g.value(graphs_->pq_log_prob).item();
  out.grad = ad::gradients_for(g.backward(graphs_->pq_loss), "pi", state_.policy.net());
  return out;
}

MiGradient MisaAgent::mi_policy_gradient(const data::Batch& batch, Rng& rng) {
  const std::size_t n = batch.size();
  const std::size_t k = config_.mc_samples;
  const std::size_t adim = state_.policy.action_dim();
  const mi::Critic& energy = state_.energy();
  ad::TensorMap in;
  ad::bind(in, "pi", state_.policy.net());
  in.insert_or_assign("s_data", batch.states);
  in.insert_or_assign("u_data", pre_squash_of(state_.policy, batch.actions));
  MiGradient out;

  if (config_.mi_grad == MiGradMode::Reparam) {
    Tensor eps = Tensor::matrix(n * k, adim);
    fill_normal(rng, eps.data());
    mi::bind_critic(in, "E", energy);
    in.insert_or_assign("s_rep", mi::repeat_rows(batch.states, k));
    in.insert_or_assign("eps", std::move(eps));
  } else {
    const double w_data = config_.no_ba ? 0.0 : config_.gamma2 / static_cast<double>(n);
    in.insert_or_assign("w_data", Tensor::matrix(n, 1, w_data));
  }

  if (config_.mi_grad == MiGradMode::UnbiasedMcmc) {
    // Weight of each state's correction expectation in the normalizer gradient.
    std::vector<double> state_weight(n, 1.0 / static_cast<double>(n));
    Tensor proposals;
    Tensor proposal_u;
    Tensor t_samples;
    const auto draw_proposals = [&] {
      const auto sample = dist::rsample_batch(state_.policy, mi::repeat_rows(batch.states, k), rng);
      proposals = sample.action;
      proposal_u = sample.pre_squash;
      t_samples = energy.evaluate(mi::repeat_rows(batch.states, k), proposals);
      t_samples.reshape_matrix(n, k);
      if (config_.bound == mi::BoundKind::MisaF && std::isfinite(config_.exp_clamp)) {
        for (double& t : t_samples.data()) t = std::clamp(t, -config_.exp_clamp, config_.exp_clamp);
      }
    };
    if (config_.bound != mi::BoundKind::Misa) {
      draw_proposals();
      const auto lme = row_log_mean_exp(t_samples);
      if (config_.bound == mi::BoundKind::MisaDV) {
        const double peak = *std::max_element(lme.begin(), lme.end());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += std::exp(lme[i] - peak);
        for (std::size_t i = 0; i < n; ++i) state_weight[i] = std::exp(lme[i] - peak) / total;
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          state_weight[i] = std::exp(lme[i] - 1.0) / static_cast<double>(n);
        }
      }
    }

    Tensor s_corr;
    Tensor u_corr;
    Tensor w_corr;
    try {
      const std::size_t chains = config_.hmc.chains;
      const std::size_t per_chain = std::max<std::size_t>(1, k / chains);
      const auto draws = mcmc::sample_improved_policy(
          state_.policy, mcmc::critic_action_value(energy), batch.states, config_.hmc, per_chain,
          rng);
      const std::size_t rows = draws.pre_squash.rows();
      std::vector<std::size_t> owner(rows);
      w_corr = Tensor::matrix(rows, 1);
      for (std::size_t r = 0; r < rows; ++r) {
        owner[r] = draws.state_of(r, n);
        w_corr[r] =
            config_.gamma2 * state_weight[owner[r]] / static_cast<double>(per_chain * chains);
      }
      s_corr = gather_rows(batch.states, owner);
      u_corr = draws.pre_squash;
      out.hmc_acceptance = draws.acceptance_rate();
    } catch (const NumericalError&) {
      // Self-normalized importance sampling over policy proposals instead.
      out.snis_fallback = true;
      if (proposals.empty()) draw_proposals();
      const Tensor w = mcmc::softmax_rows(t_samples);
      w_corr = Tensor::matrix(n * k, 1);
      for (std::size_t r = 0; r < n * k; ++r) {
        w_corr[r] = config_.gamma2 * state_weight[r / k] * w[r];
      }
      s_corr = mi::repeat_rows(batch.states, k);
      u_corr = proposal_u;
    }
    in.insert_or_assign("s_corr", std::move(s_corr));
    in.insert_or_assign("u_corr", std::move(u_corr));
    in.insert_or_assign("w_corr", std::move(w_corr));
  }

  ad::Graph& g = graphs_->mi;
  g.forward(in);
  require_finite(g.value(graphs_->mi_loss).item(), "MI surrogate", state_.step);
  out.grad = ad::gradients_for(g.backward(graphs_->mi_loss), "pi", state_.policy.net());
  return out;
}

StepMetrics MisaAgent::train_step(const data::OfflineDataset& dataset) {
  const std::uint64_t step = state_.step;
  const std::uint64_t seed = state_.seed;
  const std::size_t k = config_.mc_samples;
  Rng batch_rng = make_stream(seed, step, kBatchStream);
  const data::Batch batch = dataset.sample_batch(config_.batch_size, batch_rng);

  StepMetrics m;
  m.step = step;
  const auto data_lp = dist::log_prob_pre_squash(
      state_.policy, batch.states, pre_squash_of(state_.policy, batch.actions));
  double ba = 0.0;
  for (double v : data_lp) ba += v / static_cast<double>(data_lp.size());

  // Critic.
  Rng next_rng = make_stream(seed, step, kNextActionStream);
  CriticGrad td = td_loss(batch, next_rng);
  Rng penalty_rng = make_stream(seed, step, kPenaltyStream);
  const Tensor proposals = mi::policy_samples(state_.policy, batch.states, k, penalty_rng);
  const double gamma1 = state_.gamma1(config_);
  const PenaltyResult pen = q_regularizer(batch, proposals);
  require_finite(td.value, "TD loss", step);
  require_finite(pen.value, "critic penalty", step);
  const bool regularize =
      !config_.misa_t && !(config_.q_reg == QRegMode::Fixed && config_.gamma1 == 0.0);
  if (regularize) {
    for (std::size_t i = 0; i < td.heads.size(); ++i) add_scaled(td.heads[i], pen.grads[i], gamma1);
  }
  lagrange_update(pen.value);
  const ad::AdamConfig critic_adam{config_.critic_lr};
  for (std::size_t i = 0; i < state_.critic.heads.size(); ++i) {
    ad::adam_step(state_.critic.heads[i], td.heads[i], state_.critic_adam[i], critic_adam);
  }

  Tensor t_data = pen.t_data;
  Tensor t_samples = pen.t_samples;
  if (state_.tnet) {
    const PenaltyResult tp = tnet_penalty(batch, proposals);
    require_finite(tp.value, "T-network penalty", step);
    ad::adam_step(state_.tnet->heads.front(), tp.grads.front(), *state_.tnet_adam,
                  {config_.tnet_lr});
    t_data = tp.t_data;
    t_samples = tp.t_samples;
  }

  // Policy.
  Rng noise_rng = make_stream(seed, step, kPolicyNoiseStream);
  PolicyGrad pq = policy_loss_q_term(batch, noise_rng);
  require_finite(pq.value, "policy loss", step);
  if (config_.gamma2 > 0.0) {
    Rng hmc_rng = make_stream(seed, step, kHmcStream);
    const MiGradient mg = mi_policy_gradient(batch, hmc_rng);
    add_scaled(pq.grad, mg.grad, 1.0);
    m.hmc_acceptance = mg.hmc_acceptance;
    m.snis_fallbacks = mg.snis_fallback ? 1 : 0;
  }
  ad::adam_step(state_.policy.net(), pq.grad, state_.policy_adam, {config_.actor_lr});

  if (config_.temperature == TemperatureMode::Auto) {
    const double target = config_.resolved_target_entropy(state_.policy.action_dim());
    state_.temperature_adam.step(state_.log_temperature, -(pq.mean_log_prob + target),
                                 {config_.temperature_lr});
  }
  for (std::size_t i = 0; i < state_.critic.heads.size(); ++i) {
    polyak_update(state_.target.heads[i], state_.critic.heads[i], config_.polyak);
  }

  Rng ood_rng = make_stream(seed, step, kOodStream);
  Tensor uniform = Tensor::matrix(batch.size(), state_.policy.action_dim());
  fill_uniform(ood_rng, uniform.data(), -1.0, 1.0);

  m.td_loss = td.value;
  m.penalty = pen.value;
  m.gamma1 = gamma1;
  m.mi_estimate = mi::combine(config_.bound, ba, t_data.data(), t_samples, {config_.exp_clamp},
                              mi::MarginalMode::Omitted)
                      .value;
  m.policy_entropy = -pq.mean_log_prob;
  m.q_data_mean = pen.q_data_mean;
  m.q_ood_mean = mean_of(state_.critic.evaluate(batch.states, uniform));
  m.temperature = state_.temperature();
  if (!state_.policy.net().all_finite() || !state_.critic.all_finite()) {
    throw NumericalError("parameters are not finite after step " + std::to_string(step));
  }
  ++state_.step;
  return m;
}

OodReport ood_report(const TrainState& state, const data::OfflineDataset& dataset,
                     std::size_t bins, std::size_t n_states, std::uint64_t seed) {
  const data::ActionEnvelope envelope(dataset, bins);
  OodReport out;
  out.q_data_mean = mean_of(state.critic.evaluate(dataset.states(), dataset.actions()));

  Rng rng = make_stream(seed, 0, kOodStream);
  const auto idx = dataset.sample_indices(n_states, rng);
  const Tensor states = gather_rows(dataset.states(), idx);
  const std::size_t adim = dataset.action_dim();
  std::vector<std::size_t> rows;
  std::vector<double> ood;
  for (std::size_t i = 0; i < states.rows(); ++i) {
    const auto box = envelope.bounds(states.row_span(i));
    if (!box) continue;
    const auto& [lo, hi] = *box;
    std::vector<std::size_t> open;
    for (std::size_t j = 0; j < adim; ++j) {
      if (lo[j] > -1.0 || hi[j] < 1.0) open.push_back(j);
    }
    if (open.empty()) continue;
    std::vector<double> a(adim);
    fill_uniform(rng, a, -1.0, 1.0);
    const std::size_t j = open[std::min(open.size() - 1,
                                        static_cast<std::size_t>(uniform01(rng) * open.size()))];
    const double below = lo[j] + 1.0;
    const double above = 1.0 - hi[j];
    const double x = uniform01(rng) * (below + above);
    a[j] = x < below ? -1.0 + x : hi[j] + (x - below);
    rows.push_back(i);
    ood.insert(ood.end(), a.begin(), a.end());
  }
  out.ood_queries = rows.size();
  if (rows.empty()) {
    out.q_ood_mean = std::numeric_limits<double>::quiet_NaN();
  } else {
    const Tensor ood_actions({rows.size(), adim}, std::move(ood));
    out.q_ood_mean = mean_of(state.critic.evaluate(gather_rows(states, rows), ood_actions));
  }
  out.support_coverage =
      data::support_coverage(dataset, states, dist::mean_action(state.policy, states), bins);
  return out;
}

}  // namespace misa::agent
