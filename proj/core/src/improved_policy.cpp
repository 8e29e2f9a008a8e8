#include "misa/mcmc/improved_policy.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "misa/common/error.hpp"

namespace misa::mcmc {

ActionValueFn critic_action_value(const mi::Critic& critic) {
  // The graph holds the weights as constants and is reused by every call.
  struct Cached {
    ad::Graph g;
    ad::Node values;
    ad::Node total;
  };
  auto cache = std::make_shared<Cached>();
  mi::CriticNodes nodes;
  nodes.offset = critic.offset;
  for (const auto& head : critic.heads) {
    ad::MlpNodes net{"", {}, head.activation};
    for (const auto& layer : head.layers) {
      net.layers.emplace_back(cache->g.constant(layer.weight), cache->g.constant(layer.bias));
    }
    nodes.heads.push_back(std::move(net));
  }
  const ad::Node s = cache->g.leaf("s");
  const ad::Node a = cache->g.leaf("a");
  cache->values = mi::critic_min(cache->g, nodes, cache->g.concat_cols(s, a));
  cache->total = cache->g.sum(cache->values);
  return {[cache](const Tensor& states, const Tensor& actions, std::vector<double>& q,
                  Tensor& dq_da) {
    cache->g.forward({{"s", states}, {"a", actions}});
    const Tensor& v = cache->g.value(cache->values);
    q.assign(v.data().begin(), v.data().end());
    dq_da = cache->g.backward(cache->total).at("a");
  }};
}

double ImprovedSamples::acceptance_rate() const {
  return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
}

ImprovedSamples sample_improved_policy(const dist::GaussianPolicy& policy, const ActionValueFn& q,
                                       const Tensor& states, const HmcConfig& config,
                                       std::size_t draws, Rng& rng) {
  config.validate();
  for (double v : states.data()) {
    if (!std::isfinite(v)) throw NumericalError("improved policy: non-finite state");
  }
  const std::size_t chains = config.chains;
  const Tensor reps = mi::repeat_rows(states, chains);
  const auto head = policy.head(reps);
  const std::size_t n = reps.rows();
  const std::size_t adim = policy.action_dim();
  const bool squash = policy.config().squash;
  Tensor sigma = head.log_std;
  for (double& v : sigma.data()) v = std::exp(v);

  const auto to_pre_squash = [&](const Tensor& x) {
    Tensor u = Tensor::matrix(x.rows(), adim);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const std::size_t j = i % (n * adim);
      u[i] = head.mean[j] + sigma[j] * x[i];
    }
    return u;
  };
  const auto squash_all = [&](Tensor u) {
    if (squash) {
      for (double& v : u.data()) v = std::tanh(v);
    }
    return u;
  };

  std::vector<double> qv;
  Tensor dq;
  EnergyTarget target{[&](const Tensor& x, std::vector<double>& lp, Tensor& grad) {
    const Tensor a = squash_all(to_pre_squash(x));
    q.evaluate(reps, a, qv, dq);
    lp.resize(n);
    grad.reshape_matrix(n, adim);
    for (std::size_t r = 0; r < n; ++r) {
      double sq = 0.0;
      for (std::size_t j = 0; j < adim; ++j) {
        const double xv = x(r, j);
        const double jac = squash ? 1.0 - a(r, j) * a(r, j) : 1.0;
        sq += xv * xv;
        grad(r, j) = -xv + sigma(r, j) * jac * dq(r, j);
      }
      lp[r] = -0.5 * sq + qv[r];
    }
  }};

  Tensor init = Tensor::matrix(n, adim);
  fill_normal(rng, init.data());
  const HmcResult run = hmc_run(target, init, config, draws, rng);

  ImprovedSamples out;
  out.chains = chains;
  out.proposals = run.proposals;
  out.accepted = run.accepted;
  out.pre_squash = to_pre_squash(run.samples);
  out.action = squash_all(out.pre_squash);
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row_span(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

std::vector<double> snis_expectation(
    const dist::GaussianPolicy& policy, const ActionValueFn& q, std::span<const double> s,
    const std::function<std::vector<double>(std::span<const double>)>& f, std::size_t k, Rng& rng) {
  if (k < 2) throw ConfigError("snis_expectation needs k >= 2");
  const Tensor states = mi::repeat_rows(Tensor::row({s.begin(), s.end()}), k);
  const auto sample = dist::rsample_batch(policy, states, rng);
  std::vector<double> qv;
  Tensor dq;
  q.evaluate(states, sample.action, qv, dq);
  const Tensor w = softmax_rows(Tensor::row(qv));
  std::vector<double> total;
  for (std::size_t j = 0; j < k; ++j) {
    const auto fj = f(sample.action.row_span(j));
    if (total.empty()) total.assign(fj.size(), 0.0);
    for (std::size_t i = 0; i < fj.size(); ++i) total[i] += w[j] * fj[i];
  }
  return total;
}

}  // namespace misa::mcmc
