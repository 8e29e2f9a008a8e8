#include "misa/data/envs.hpp"

#include <algorithm>
#include <cmath>

#include "misa/common/error.hpp"

namespace misa::data {
namespace {

double clip1(double x) { return std::clamp(x, -1.0, 1.0); }

void check_action(std::span<const double> action, std::size_t dim) {
  if (action.size() != dim) {
    throw ShapeError(-1, "expected a " + std::to_string(dim) + "-dimensional action, got " +
                             std::to_string(action.size()));
  }
}

}  // namespace

std::vector<double> LineReach::reset(Rng& rng) {
  s_ = 2.0 * uniform01(rng) - 1.0;
  return {s_};
}

StepResult LineReach::step(std::span<const double> action) {
  check_action(action, 1);
  s_ = clip1(s_ + kGain * clip1(action[0]));
  return {{s_}, -std::abs(s_ - kGoal), false};
}

std::vector<double> LineReach::expert_action(std::span<const double> state) const {
  return {clip1((kGoal - state[0]) / kGain)};
}

std::vector<double> PointMass2D::reset(Rng& rng) {
  x_ = {2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0, 0.0, 0.0};
  return x_;
}

StepResult PointMass2D::step(std::span<const double> action) {
  check_action(action, 2);
  for (int d = 0; d < 2; ++d) {
    double v = x_[2 + d] + kDt * clip1(action[d]);
    double p = x_[d] + kDt * v;
    if (p > 1.0 || p < -1.0) {
      p = clip1(p);
      v = 0.0;
    }
    x_[d] = p;
    x_[2 + d] = v;
  }
  const double dist = std::hypot(x_[0] - kGoalX, x_[1] - kGoalY);
  return {x_, -dist, false};
}

std::vector<double> PointMass2D::expert_action(std::span<const double> state) const {
  constexpr double kp = 4.0;
  constexpr double kd = 3.0;
  return {clip1(kp * (kGoalX - state[0]) - kd * state[2]),
          clip1(kp * (kGoalY - state[1]) - kd * state[3])};
}

int ChainMaze::cell_of(double state) {
  return std::clamp(static_cast<int>(std::lround(state * (kCells - 1))), 0, kCells - 1);
}

std::vector<double> ChainMaze::reset(Rng&) {
  cell_ = 0;
  return {0.0};
}

StepResult ChainMaze::step(std::span<const double> action) {
  check_action(action, 1);
  const int move = static_cast<int>(std::lround(1.5 * clip1(action[0])));
  cell_ = std::clamp(cell_ + move, 0, kCells - 1);
  const bool goal = cell_ == kCells - 1;
  return {{static_cast<double>(cell_) / (kCells - 1)}, goal ? 1.0 : 0.0, goal};
}

std::vector<double> ChainMaze::expert_action(std::span<const double>) const { return {1.0}; }

std::size_t GridDiscrete::action_index(double a) {
  if (a < -0.5) return 0;
  if (a < 0.0) return 1;
  if (a < 0.5) return 2;
  return 3;
}

double GridDiscrete::action_value(std::size_t index) {
  static constexpr double kCentres[kActions] = {-0.75, -0.25, 0.25, 0.75};
  return kCentres[index];
}

std::size_t GridDiscrete::state_index(std::span<const double> state) {
  const auto coord = [](double v) {
    return std::clamp(static_cast<int>(std::lround(v * (kSize - 1))), 0, kSize - 1);
  };
  return static_cast<std::size_t>(coord(state[1]) * kSize + coord(state[0]));
}

std::vector<double> GridDiscrete::reset(Rng&) {
  x_ = 0;
  y_ = 0;
  return {0.0, 0.0};
}

StepResult GridDiscrete::step(std::span<const double> action) {
  check_action(action, 1);
  switch (action_index(clip1(action[0]))) {
    case 0: x_ = std::max(x_ - 1, 0); break;
    case 1: y_ = std::max(y_ - 1, 0); break;
    case 2: y_ = std::min(y_ + 1, kSize - 1); break;
    default: x_ = std::min(x_ + 1, kSize - 1); break;
  }
  const bool goal = x_ == kSize - 1 && y_ == kSize - 1;
  const double scale = kSize - 1;
  return {{x_ / scale, y_ / scale}, goal ? 1.0 : 0.0, goal};
}

std::vector<double> GridDiscrete::expert_action(std::span<const double> state) const {
  const std::size_t idx = state_index(state);
  const int x = static_cast<int>(idx % kSize);
  return {action_value(x < kSize - 1 ? 3 : 2)};
}

TabularSoftmax TabularSoftmax::uniform(std::size_t states, std::size_t actions) {
  return {ad::Tensor::matrix(states, actions, 0.0)};
}

std::vector<double> TabularSoftmax::probabilities(std::size_t state) const {
  auto row = logits.row_span(state);
  const double peak = *std::max_element(row.begin(), row.end());
  std::vector<double> p(row.size());
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = std::exp(row[j] - peak);
    total += p[j];
  }
  for (double& v : p) v /= total;
  return p;
}

double TabularSoftmax::log_prob(std::size_t state, std::size_t action) const {
  return std::log(probabilities(state).at(action));
}

std::unique_ptr<ToyEnv> make_env(const std::string& name) {
  if (name == "line-reach") return std::make_unique<LineReach>();
  if (name == "point-mass-2d") return std::make_unique<PointMass2D>();
  if (name == "chain-maze") return std::make_unique<ChainMaze>();
  if (name == "grid-discrete") return std::make_unique<GridDiscrete>();
  throw ConfigError("unknown environment '" + name + "'");
}

std::vector<std::string> env_names() {
  return {"line-reach", "point-mass-2d", "chain-maze", "grid-discrete"};
}

double run_episode(ToyEnv& env, const ActionFn& policy, Rng& rng) {
  std::vector<double> s = env.reset(rng);
  double total = 0.0;
  for (std::size_t t = 0; t < env.horizon(); ++t) {
    const auto a = policy(s, rng);
    StepResult step = env.step(a);
    total += step.reward;
    s = std::move(step.next_state);
    if (step.terminal) break;
  }
  return total;
}

ActionFn expert_policy(const ToyEnv& env) {
  std::shared_ptr<const ToyEnv> model = env.clone();
  return [model](std::span<const double> s, Rng&) { return model->expert_action(s); };
}

ActionFn uniform_policy(std::size_t action_dim) {
  return [action_dim](std::span<const double>, Rng& rng) {
    std::vector<double> a(action_dim);
    fill_uniform(rng, a, -1.0, 1.0);
    return a;
  };
}

double ScoreNormalizer::normalize(double ret) const {
  return 100.0 * (ret - random_return) / (expert_return - random_return);
}

ScoreNormalizer ScoreNormalizer::compute(const ToyEnv& env, std::size_t episodes,
                                         std::uint64_t seed) {
  if (episodes == 0) throw ConfigError("score normalizer needs at least one episode");
  auto sim = env.clone();
  ScoreNormalizer out;
  const ActionFn random = uniform_policy(env.action_dim());
  const ActionFn expert = expert_policy(env);
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng r1 = make_stream(seed, e, 1);
    out.random_return += run_episode(*sim, random, r1);
    Rng r2 = make_stream(seed, e, 2);
    out.expert_return += run_episode(*sim, expert, r2);
  }
  out.random_return /= static_cast<double>(episodes);
  out.expert_return /= static_cast<double>(episodes);
  if (!(out.expert_return > out.random_return)) {
    throw Error("expert return does not exceed random return on " + env.name());
  }
  return out;
}

}  // namespace misa::data
