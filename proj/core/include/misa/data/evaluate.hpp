#pragma once

#include <optional>
#include <vector>

#include "misa/data/dataset.hpp"
#include "misa/data/envs.hpp"
#include "misa/distributions/gaussian_policy.hpp"

namespace misa::data {

struct EvalResult {
  double mean_return = 0.0;
  double normalized_score = 0.0;
  std::vector<double> returns;
};

inline constexpr std::size_t kDefaultEvalEpisodes = 10;

EvalResult evaluate_policy(const ToyEnv& env, const ActionFn& policy, std::size_t episodes,
                           std::uint64_t seed, const ScoreNormalizer& normalizer);
// Acts with the squashed policy mean.
EvalResult evaluate_policy(const ToyEnv& env, const dist::GaussianPolicy& policy,
                           std::size_t episodes, std::uint64_t seed,
                           const ScoreNormalizer& normalizer);

// Per-cell min/max of dataset actions over a grid of `bins` cells per state
// dimension spanning the dataset's state range.
class ActionEnvelope {
 public:
  ActionEnvelope(const OfflineDataset& ds, std::size_t bins);

  // Cell index of a state; states outside the range fall into the edge cells.
  std::size_t cell(std::span<const double> state) const;
  // Whether the cell of `state` holds any dataset action.
  bool covered(std::span<const double> state) const;
  bool inside(std::span<const double> state, std::span<const double> action) const;
  // Per-dimension [lo, hi] of the cell containing `state`; nullopt for an empty cell.
  std::optional<std::pair<std::vector<double>, std::vector<double>>> bounds(
      std::span<const double> state) const;

 private:
  std::size_t bins_;
  std::size_t action_dim_;
  std::vector<double> state_lo_;
  std::vector<double> state_hi_;
  std::vector<double> action_lo_;  // cell-major, action_dim per cell
  std::vector<double> action_hi_;
  std::vector<bool> filled_;
};

// Fraction of (state, action) queries whose action lies in its state cell's
// envelope. Queries in empty cells are left out of the denominator; returns
// NaN when every query is left out.
double support_coverage(const OfflineDataset& ds, const Tensor& states, const Tensor& actions,
                        std::size_t bins);

}  // namespace misa::data
