#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "misa/autodiff/tensor.hpp"
#include "misa/common/rng.hpp"

namespace misa::data {

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool terminal = false;
};

// Episodic toy task with actions in [-1, 1]^action_dim. Actions outside the
// box are clipped by step().
class ToyEnv {
 public:
  virtual ~ToyEnv() = default;

  virtual std::string name() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual std::size_t horizon() const = 0;
  // Per-step reward bounds.
  virtual std::pair<double, double> reward_range() const = 0;

  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  // Scripted near-optimal controller.
  virtual std::vector<double> expert_action(std::span<const double> state) const = 0;
  virtual std::unique_ptr<ToyEnv> clone() const = 0;
};

// s in [-1, 1], s' = clip(s + 0.1 a), r = -|s' - 0.5|, 50 steps, s0 ~ U[-1, 1].
class LineReach : public ToyEnv {
 public:
  static constexpr double kGoal = 0.5;
  static constexpr double kGain = 0.1;

  std::string name() const override { return "line-reach"; }
  std::size_t state_dim() const override { return 1; }
  std::size_t action_dim() const override { return 1; }
  std::size_t horizon() const override { return 50; }
  std::pair<double, double> reward_range() const override { return {-1.5, 0.0}; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> expert_action(std::span<const double> state) const override;
  std::unique_ptr<ToyEnv> clone() const override { return std::make_unique<LineReach>(*this); }

 private:
  double s_ = 0.0;
};

// Double integrator: state (px, py, vx, vy), acceleration action, dt 0.1,
// positions clipped to [-1, 1], r = -|p' - goal|, 100 steps.
class PointMass2D : public ToyEnv {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kGoalX = 0.5;
  static constexpr double kGoalY = 0.5;

  std::string name() const override { return "point-mass-2d"; }
  std::size_t state_dim() const override { return 4; }
  std::size_t action_dim() const override { return 2; }
  std::size_t horizon() const override { return 100; }
  std::pair<double, double> reward_range() const override { return {-3.0, 0.0}; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  // PD controller toward the goal.
  std::vector<double> expert_action(std::span<const double> state) const override;
  std::unique_ptr<ToyEnv> clone() const override { return std::make_unique<PointMass2D>(*this); }

 private:
  std::vector<double> x_ = std::vector<double>(4, 0.0);
};

// Corridor of 10 cells; a moves round(1.5 a) cells. Reaching the last cell
// pays 1 and ends the episode. State is cell / 9. 25 steps, start at cell 0.
class ChainMaze : public ToyEnv {
 public:
  static constexpr int kCells = 10;

  std::string name() const override { return "chain-maze"; }
  std::size_t state_dim() const override { return 1; }
  std::size_t action_dim() const override { return 1; }
  std::size_t horizon() const override { return 25; }
  std::pair<double, double> reward_range() const override { return {0.0, 1.0}; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> expert_action(std::span<const double> state) const override;
  std::unique_ptr<ToyEnv> clone() const override { return std::make_unique<ChainMaze>(*this); }

  static int cell_of(double state);

 private:
  int cell_ = 0;
};

// 4x4 grid with four moves chosen by binning a scalar action at -0.5, 0, 0.5
// (bin centres -0.75, -0.25, 0.25, 0.75): 0 = -x, 1 = -y, 2 = +y, 3 = +x.
// Start (0, 0); reaching (3, 3) pays 1 and ends the episode. State is
// (x / 3, y / 3). 20 steps.
class GridDiscrete : public ToyEnv {
 public:
  static constexpr int kSize = 4;
  static constexpr std::size_t kActions = 4;

  std::string name() const override { return "grid-discrete"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t action_dim() const override { return 1; }
  std::size_t horizon() const override { return 20; }
  std::pair<double, double> reward_range() const override { return {0.0, 1.0}; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> expert_action(std::span<const double> state) const override;
  std::unique_ptr<ToyEnv> clone() const override { return std::make_unique<GridDiscrete>(*this); }

  static std::size_t action_index(double a);
  static double action_value(std::size_t index);
  static std::size_t state_index(std::span<const double> state);
  static std::size_t state_count() { return kSize * kSize; }

 private:
  int x_ = 0;
  int y_ = 0;
};

// Tabular softmax policy over the discrete actions of GridDiscrete.
struct TabularSoftmax {
  ad::Tensor logits;  // states x actions

  static TabularSoftmax uniform(std::size_t states, std::size_t actions);
  std::vector<double> probabilities(std::size_t state) const;
  double log_prob(std::size_t state, std::size_t action) const;
};

std::unique_ptr<ToyEnv> make_env(const std::string& name);
std::vector<std::string> env_names();

using ActionFn = std::function<std::vector<double>(std::span<const double> state, Rng& rng)>;

// Undiscounted return of one episode; the env is reset first.
double run_episode(ToyEnv& env, const ActionFn& policy, Rng& rng);

ActionFn expert_policy(const ToyEnv& env);
ActionFn uniform_policy(std::size_t action_dim);

// Reference returns for normalized scores.
struct ScoreNormalizer {
  double random_return = 0.0;
  double expert_return = 0.0;

  // 100 * (ret - random) / (expert - random).
  double normalize(double ret) const;
  // Monte Carlo over `episodes` episodes of the uniform and the expert policy.
  static ScoreNormalizer compute(const ToyEnv& env, std::size_t episodes = 5000,
                                 std::uint64_t seed = 20240101);
};

}  // namespace misa::data
