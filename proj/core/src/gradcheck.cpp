#include "misa/agent/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "misa/autodiff/graph.hpp"
#include "misa/common/error.hpp"

namespace misa::agent {
namespace {

std::vector<double> flatten(const ad::MlpParams& p) {
  std::vector<double> out;
  for (const Tensor* t : p.tensors()) out.insert(out.end(), t->data().begin(), t->data().end());
  return out;
}

}  // namespace

const char* q_shape_name(QShape shape) noexcept {
  switch (shape) {
    case QShape::Random: return "random";
    case QShape::Zero: return "zero";
    case QShape::Peaked: return "peaked";
  }
  return "?";
}

QShape parse_q_shape(const std::string& name) {
  if (name == "random") return QShape::Random;
  if (name == "zero") return QShape::Zero;
  if (name == "peaked") return QShape::Peaked;
  throw ConfigError("unknown q shape '" + name + "' (random, zero, peaked)");
}

GradcheckProblem gradcheck_problem(const GradcheckConfig& gc, std::size_t index) {
  if (gc.batch == 0 || gc.samples == 0) throw ConfigError("gradcheck needs batch, samples >= 1");
  GradcheckProblem p;
  TrainConfig& c = p.config;
  c.hidden = gc.hidden;
  c.mc_samples = gc.samples;
  c.hmc = gc.hmc;
  c.mi_grad = gc.mi_grad;
  c.bound = gc.bound;
  c.gamma2 = 1.0;
  c.batch_size = gc.batch;
  c.seed = gc.seed * 1000 + index;
  p.state = TrainState::init(c, 1, 1);

  Rng rng = make_stream(c.seed, 0, 0);
  // Spread the points over policy means and widths.
  auto& out_bias = p.state.policy.net().layers.back().bias;
  out_bias[0] += 2.0 * uniform01(rng) - 1.0;
  out_bias[1] += -1.5 * uniform01(rng);
  for (auto& head : p.state.critic.heads) {
    if (gc.q == QShape::Zero) {
      head = head.zeros_like();
    } else if (gc.q == QShape::Peaked) {
      for (double& w : head.layers.back().weight.data()) w *= gc.peak_scale;
      for (double& b : head.layers.back().bias.data()) b *= gc.peak_scale;
    }
  }
  p.state.target = p.state.critic;

  const std::size_t n = gc.batch;
  p.batch.states = Tensor::matrix(n, 1);
  p.batch.actions = Tensor::matrix(n, 1);
  p.batch.rewards = Tensor::matrix(n, 1);
  p.batch.next_states = Tensor::matrix(n, 1);
  p.batch.terminals = Tensor::matrix(n, 1);
  std::vector<double> z(n);
  fill_uniform(rng, p.batch.states.data(), -1.0, 1.0);
  fill_normal(rng, z);
  for (std::size_t i = 0; i < n; ++i) {
    p.batch.actions[i] = std::tanh(0.5 * p.batch.states[i] + 0.5 * z[i]);
    p.batch.next_states[i] = p.batch.states[i];
  }
  return p;
}

ad::MlpParams quadrature_mi_gradient(const TrainConfig& config, const TrainState& state,
                                     const data::Batch& batch, std::size_t grid) {
  if (state.policy.action_dim() != 1) throw ConfigError("quadrature gradient needs 1-D actions");
  if (grid < 3) throw ConfigError("quadrature gradient needs grid >= 3");
  const std::size_t n = batch.size();
  const auto head = state.policy.head(batch.states);
  const double z_max = 12.0;
  const double dz = 2.0 * z_max / static_cast<double>(grid - 1);

  Tensor s_all = Tensor::matrix(n * (grid + 1), state.policy.state_dim());
  Tensor u_all = Tensor::matrix(n * (grid + 1), 1);
  Tensor w_all = Tensor::matrix(n * (grid + 1), 1);
  std::vector<double> log_z(n);
  std::vector<std::vector<double>> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = head.mean[i];
    const double sigma = std::exp(head.log_std[i]);
    Tensor s_rep = Tensor::matrix(grid, s_all.cols());
    Tensor a = Tensor::matrix(grid, 1);
    for (std::size_t g = 0; g < grid; ++g) {
      std::copy(batch.states.row_span(i).begin(), batch.states.row_span(i).end(),
                s_rep.row_span(g).begin());
      const double u = mu + sigma * (-z_max + dz * static_cast<double>(g));
      a[g] = state.policy.config().squash ? std::tanh(u) : u;
      u_all[n + i * grid + g] = u;
      std::copy(batch.states.row_span(i).begin(), batch.states.row_span(i).end(),
                s_all.row_span(n + i * grid + g).begin());
    }
    const Tensor q = state.energy().evaluate(s_rep, a);
    std::vector<double> lw(grid);
    for (std::size_t g = 0; g < grid; ++g) {
      const double z = -z_max + dz * static_cast<double>(g);
      lw[g] = -0.5 * z * z + q[g];
    }
    const double peak = *std::max_element(lw.begin(), lw.end());
    double total = 0.0;
    for (double v : lw) total += std::exp(v - peak);
    weights[i].resize(grid);
    for (std::size_t g = 0; g < grid; ++g) weights[i][g] = std::exp(lw[g] - peak) / total;
    // log E_pi[e^Q] by the same rule.
    log_z[i] = peak + std::log(total * dz) - 0.5 * std::log(2.0 * std::numbers::pi);
  }

  std::vector<double> state_weight(n, 1.0 / static_cast<double>(n));
  if (config.bound == mi::BoundKind::MisaDV) {
    const double peak = *std::max_element(log_z.begin(), log_z.end());
    double total = 0.0;
    for (double v : log_z) total += std::exp(v - peak);
    for (std::size_t i = 0; i < n; ++i) state_weight[i] = std::exp(log_z[i] - peak) / total;
  } else if (config.bound == mi::BoundKind::MisaF) {
    for (std::size_t i = 0; i < n; ++i) {
      state_weight[i] = std::exp(log_z[i] - 1.0) / static_cast<double>(n);
    }
  }

  const Tensor u_data = state.policy.config().squash
                            ? dist::atanh_clipped(batch.actions, state.policy.config().atanh_margin)
                            : batch.actions;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(batch.states.row_span(i).begin(), batch.states.row_span(i).end(),
              s_all.row_span(i).begin());
    u_all[i] = u_data[i];
    w_all[i] = config.no_ba ? 0.0 : -config.gamma2 / static_cast<double>(n);
    for (std::size_t g = 0; g < grid; ++g) {
      w_all[n + i * grid + g] = config.gamma2 * state_weight[i] * weights[i][g];
    }
  }

  ad::Graph g;
  const ad::MlpNodes pi = ad::mlp_leaves(g, "pi", state.policy.net());
  const ad::Node s = g.leaf("s");
  const ad::Node u = g.leaf("u");
  const ad::Node w = g.leaf("w");
  const ad::Node lp = dist::gaussian_log_density(g, dist::policy_head(g, pi, s, state.policy), u, 1);
  const ad::Node loss = g.sum(g.mul(w, lp));
  ad::TensorMap in;
  ad::bind(in, "pi", state.policy.net());
  in.insert_or_assign("s", std::move(s_all));
  in.insert_or_assign("u", std::move(u_all));
  in.insert_or_assign("w", std::move(w_all));
  g.forward(in);
  return ad::gradients_for(g.backward(loss), "pi", state.policy.net());
}

double cosine_similarity(const ad::MlpParams& a, const ad::MlpParams& b) {
  const auto x = flatten(a);
  const auto y = flatten(b);
  if (x.size() != y.size()) throw ShapeError(-1, "cosine of differently shaped parameters");
  double xy = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xy += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  if (xx == 0.0 || yy == 0.0) return xx == yy ? 1.0 : 0.0;
  return xy / std::sqrt(xx * yy);
}

GradcheckReport run_gradcheck(const GradcheckConfig& gc) {
  if (gc.points == 0) throw ConfigError("gradcheck needs points >= 1");
  GradcheckReport report;
  report.min_cosine = 1.0;
  for (std::size_t p = 0; p < gc.points; ++p) {
    GradcheckProblem problem = gradcheck_problem(gc, p);
    const ad::MlpParams exact =
        quadrature_mi_gradient(problem.config, problem.state, problem.batch, gc.grid);
    MisaAgent agent(problem.config, std::move(problem.state));
    Rng rng = make_stream(problem.config.seed, 0, kHmcStream);
    const MiGradient est = agent.mi_policy_gradient(problem.batch, rng);
    const double c = cosine_similarity(est.grad, exact);
    report.cosines.push_back(c);
    report.mean_cosine += c / static_cast<double>(gc.points);
    report.min_cosine = std::min(report.min_cosine, c);
  }
  report.pass = report.min_cosine > gc.pass_min_cosine && report.mean_cosine > gc.pass_mean_cosine;
  return report;
}

}  // namespace misa::agent
