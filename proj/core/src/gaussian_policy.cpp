#include "misa/distributions/gaussian_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "misa/autodiff/ops.hpp"
#include "misa/common/error.hpp"

namespace misa::dist {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_states(const GaussianPolicy& policy, const Tensor& states) {
  if (states.cols() != policy.state_dim()) {
    throw ShapeError(-1, "policy expects " + std::to_string(policy.state_dim()) +
                             "-dimensional states, got " + std::to_string(states.cols()));
  }
}

}  // namespace

GaussianPolicy::GaussianPolicy(ad::MlpParams net, std::size_t action_dim, PolicyConfig config)
    : net_(std::move(net)), action_dim_(action_dim), config_(config) {
  const std::size_t expected = config_.fixed_log_std ? action_dim_ : 2 * action_dim_;
  if (net_.out_dim() != expected) {
    throw ConfigError("policy network emits " + std::to_string(net_.out_dim()) +
                      " values, expected " + std::to_string(expected));
  }
  if (!(config_.log_std_min < config_.log_std_max)) {
    throw ConfigError("log-std clamp range is empty");
  }
}

GaussianPolicy GaussianPolicy::init(std::size_t state_dim, std::size_t action_dim,
                                    const std::vector<std::size_t>& hidden,
                                    ad::Activation activation, PolicyConfig config,
                                    std::uint64_t seed) {
  const std::size_t out = config.fixed_log_std ? action_dim : 2 * action_dim;
  return GaussianPolicy(ad::MlpParams::init(state_dim, hidden, out, activation, seed), action_dim,
                        config);
}

GaussianPolicy::Head GaussianPolicy::head(const Tensor& states) const {
  check_states(*this, states);
  const Tensor out = ad::mlp_apply(net_, states);
  const std::size_t n = states.rows();
  Head h{Tensor::matrix(n, action_dim_), Tensor::matrix(n, action_dim_)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < action_dim_; ++j) {
      h.mean(r, j) = out(r, j);
      const double raw = config_.fixed_log_std ? *config_.fixed_log_std : out(r, action_dim_ + j);
      h.log_std(r, j) = std::clamp(raw, config_.log_std_min, config_.log_std_max);
    }
  }
  return h;
}

double gaussian_log_density(std::span<const double> mean, std::span<const double> log_std,
                            std::span<const double> u) {
  double total = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double z = (u[j] - mean[j]) * std::exp(-log_std[j]);
    total += -0.5 * z * z - log_std[j] - kHalfLog2Pi;
  }
  return total;
}

double tanh_log_det(std::span<const double> u) {
  double total = 0.0;
  for (double x : u) total += 2.0 * (std::numbers::ln2 - x - softplus(-2.0 * x));
  return total;
}

std::vector<double> log_prob_pre_squash(const GaussianPolicy& policy, const Tensor& states,
                                        const Tensor& pre_squash) {
  const auto h = policy.head(states);
  std::vector<double> out(states.rows());
  for (std::size_t r = 0; r < states.rows(); ++r) {
    out[r] = gaussian_log_density(h.mean.row_span(r), h.log_std.row_span(r), pre_squash.row_span(r));
    if (policy.config().squash) out[r] -= tanh_log_det(pre_squash.row_span(r));
  }
  return out;
}

std::vector<double> log_prob_batch(const GaussianPolicy& policy, const Tensor& states,
                                   const Tensor& actions) {
  if (actions.cols() != policy.action_dim() || actions.rows() != states.rows()) {
    throw ShapeError(-1, "log_prob: actions " + actions.shape_string() + " do not match states " +
                             states.shape_string());
  }
  if (!policy.config().squash) return log_prob_pre_squash(policy, states, actions);
  Tensor u = Tensor::matrix(actions.rows(), actions.cols());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!(std::abs(actions[i]) < 1.0)) {
      throw Error("log_prob: action coordinate " + std::to_string(actions[i]) +
                  " is outside the open interval (-1, 1) of a squashed policy");
    }
    u[i] = std::atanh(actions[i]);
  }
  return log_prob_pre_squash(policy, states, u);
}

double log_prob(const GaussianPolicy& policy, std::span<const double> s, std::span<const double> a) {
  const Tensor states = Tensor::row({s.begin(), s.end()});
  const Tensor actions = Tensor::row({a.begin(), a.end()});
  return log_prob_batch(policy, states, actions).front();
}

BatchSample sample_with_noise(const GaussianPolicy& policy, const Tensor& states,
                              const Tensor& noise) {
  const std::size_t n = states.rows();
  const std::size_t adim = policy.action_dim();
  if (noise.rows() != n || noise.cols() != adim) {
    throw ShapeError(-1, "noise " + noise.shape_string() + " does not match " +
                             ad::shape_string(n, adim));
  }
  const auto h = policy.head(states);
  BatchSample out{Tensor::matrix(n, adim), Tensor::matrix(n, adim), noise, std::vector<double>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < adim; ++j) {
      const double u = h.mean(r, j) + std::exp(h.log_std(r, j)) * noise(r, j);
      out.pre_squash(r, j) = u;
      out.action(r, j) = policy.config().squash ? std::tanh(u) : u;
    }
    out.log_prob[r] =
        gaussian_log_density(h.mean.row_span(r), h.log_std.row_span(r), out.pre_squash.row_span(r));
    if (policy.config().squash) out.log_prob[r] -= tanh_log_det(out.pre_squash.row_span(r));
  }
  return out;
}

BatchSample rsample_batch(const GaussianPolicy& policy, const Tensor& states, Rng& rng) {
  Tensor noise = Tensor::matrix(states.rows(), policy.action_dim());
  fill_normal(rng, noise.data());
  return sample_with_noise(policy, states, noise);
}

ActionSample rsample(const GaussianPolicy& policy, std::span<const double> s, Rng& rng) {
  const auto batch = rsample_batch(policy, Tensor::row({s.begin(), s.end()}), rng);
  ActionSample out;
  out.action.assign(batch.action.data().begin(), batch.action.data().end());
  out.pre_squash.assign(batch.pre_squash.data().begin(), batch.pre_squash.data().end());
  out.noise.assign(batch.noise.data().begin(), batch.noise.data().end());
  out.log_prob = batch.log_prob.front();
  return out;
}

Tensor mean_action(const GaussianPolicy& policy, const Tensor& states) {
  Tensor m = policy.head(states).mean;
  if (policy.config().squash) {
    for (double& x : m.data()) x = std::tanh(x);
  }
  return m;
}

double entropy_estimate(const GaussianPolicy& policy, std::span<const double> s, std::size_t n,
                        Rng& rng) {
  if (n == 0) throw ConfigError("entropy_estimate needs at least one sample");
  const Tensor state = Tensor::row({s.begin(), s.end()});
  if (!policy.config().squash) {
    const auto h = policy.head(state);
    double total = 0.0;
    for (double ls : h.log_std.data()) total += 0.5 + kHalfLog2Pi + ls;
    return total;
  }
  Tensor states = Tensor::matrix(n, s.size());
  for (std::size_t r = 0; r < n; ++r) std::copy(s.begin(), s.end(), states.row_span(r).begin());
  const auto batch = rsample_batch(policy, states, rng);
  double total = 0.0;
  for (double lp : batch.log_prob) total -= lp;
  return total / static_cast<double>(n);
}

Tensor clip_to_support(const Tensor& actions, double margin) {
  Tensor out = actions;
  const double bound = 1.0 - margin;
  for (double& x : out.data()) x = std::clamp(x, -bound, bound);
  return out;
}

Tensor atanh_clipped(const Tensor& actions, double margin) {
  Tensor out = clip_to_support(actions, margin);
  for (double& x : out.data()) x = std::atanh(x);
  return out;
}

HeadNodes policy_head(ad::Graph& g, const ad::MlpNodes& net, ad::Node states,
                      const GaussianPolicy& shape) {
  const ad::Node out = ad::mlp_forward(g, net, states);
  const std::size_t adim = shape.action_dim();
  const auto& cfg = shape.config();
  const ad::Node mean = g.slice_cols(out, 0, adim);
  ad::Node log_std;
  if (cfg.fixed_log_std) {
    log_std = g.broadcast_like(
        g.constant(Tensor({1, adim}, std::vector<double>(adim, *cfg.fixed_log_std))), mean);
  } else {
    log_std = g.clamp(g.slice_cols(out, adim, adim), cfg.log_std_min, cfg.log_std_max);
  }
  return {mean, log_std};
}

ad::Node gaussian_log_density(ad::Graph& g, const HeadNodes& head, ad::Node u,
                              std::size_t action_dim) {
  const ad::Node z = g.mul(ad::sub(g, u, head.mean), g.exp(ad::neg(g, head.log_std)));
  const ad::Node per_coord = ad::sub(g, ad::scale(g, g.square(z), -0.5), head.log_std);
  return ad::add_scalar(g, g.sum(per_coord, ad::Axis::Cols),
                        -kHalfLog2Pi * static_cast<double>(action_dim));
}

ad::Node tanh_log_det(ad::Graph& g, ad::Node u) {
  // 2 * (ln 2 - u - softplus(-2u))
  const ad::Node inner = ad::sub(g, ad::neg(g, u), g.softplus(ad::scale(g, u, -2.0)));
  return g.sum(ad::scale(g, ad::add_scalar(g, inner, std::numbers::ln2), 2.0), ad::Axis::Cols);
}

SampleNodes rsample(ad::Graph& g, const HeadNodes& head, ad::Node noise,
                    const GaussianPolicy& shape) {
  const ad::Node u = g.add(head.mean, g.mul(g.exp(head.log_std), noise));
  ad::Node lp = gaussian_log_density(g, head, u, shape.action_dim());
  ad::Node a = u;
  if (shape.config().squash) {
    a = g.tanh(u);
    lp = ad::sub(g, lp, tanh_log_det(g, u));
  }
  return {u, a, lp};
}

}  // namespace misa::dist
