#include "misa/data/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "misa/common/error.hpp"

namespace misa::data {

EvalResult evaluate_policy(const ToyEnv& env, const ActionFn& policy, std::size_t episodes,
                           std::uint64_t seed, const ScoreNormalizer& normalizer) {
  if (episodes == 0) throw ConfigError("evaluate_policy needs at least one episode");
  auto sim = env.clone();
  EvalResult out;
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng rng = make_stream(seed, e, 0);
    out.returns.push_back(run_episode(*sim, policy, rng));
  }
  for (double r : out.returns) out.mean_return += r;
  out.mean_return /= static_cast<double>(episodes);
  out.normalized_score = normalizer.normalize(out.mean_return);
  return out;
}

EvalResult evaluate_policy(const ToyEnv& env, const dist::GaussianPolicy& policy,
                           std::size_t episodes, std::uint64_t seed,
                           const ScoreNormalizer& normalizer) {
  const ActionFn act = [&policy](std::span<const double> s, Rng&) {
    const Tensor a = dist::mean_action(policy, Tensor::row({s.begin(), s.end()}));
    return std::vector<double>(a.data().begin(), a.data().end());
  };
  return evaluate_policy(env, act, episodes, seed, normalizer);
}

ActionEnvelope::ActionEnvelope(const OfflineDataset& ds, std::size_t bins)
    : bins_(bins), action_dim_(ds.action_dim()) {
  if (bins == 0) throw ConfigError("support envelope needs bins >= 1");
  const std::size_t sd = ds.state_dim();
  state_lo_.assign(sd, std::numeric_limits<double>::infinity());
  state_hi_.assign(sd, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto s = ds.states().row_span(i);
    for (std::size_t d = 0; d < sd; ++d) {
      state_lo_[d] = std::min(state_lo_[d], s[d]);
      state_hi_[d] = std::max(state_hi_[d], s[d]);
    }
  }
  std::size_t cells = 1;
  for (std::size_t d = 0; d < sd; ++d) cells *= bins_;
  action_lo_.assign(cells * action_dim_, std::numeric_limits<double>::infinity());
  action_hi_.assign(cells * action_dim_, -std::numeric_limits<double>::infinity());
  filled_.assign(cells, false);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t c = cell(ds.states().row_span(i));
    filled_[c] = true;
    const auto a = ds.actions().row_span(i);
    for (std::size_t j = 0; j < action_dim_; ++j) {
      action_lo_[c * action_dim_ + j] = std::min(action_lo_[c * action_dim_ + j], a[j]);
      action_hi_[c * action_dim_ + j] = std::max(action_hi_[c * action_dim_ + j], a[j]);
    }
  }
}

std::size_t ActionEnvelope::cell(std::span<const double> state) const {
  std::size_t index = 0;
  for (std::size_t d = 0; d < state_lo_.size(); ++d) {
    const double width = state_hi_[d] - state_lo_[d];
    std::size_t b = 0;
    if (width > 0.0) {
      const double f = (state[d] - state_lo_[d]) / width * static_cast<double>(bins_);
      b = static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(bins_ - 1)));
    }
    index = index * bins_ + b;
  }
  return index;
}

bool ActionEnvelope::covered(std::span<const double> state) const { return filled_[cell(state)]; }

bool ActionEnvelope::inside(std::span<const double> state, std::span<const double> action) const {
  const std::size_t c = cell(state);
  if (!filled_[c]) return false;
  for (std::size_t j = 0; j < action_dim_; ++j) {
    if (action[j] < action_lo_[c * action_dim_ + j] || action[j] > action_hi_[c * action_dim_ + j]) {
      return false;
    }
  }
  return true;
}

std::optional<std::pair<std::vector<double>, std::vector<double>>> ActionEnvelope::bounds(
    std::span<const double> state) const {
  const std::size_t c = cell(state);
  if (!filled_[c]) return std::nullopt;
  const auto lo = action_lo_.begin() + static_cast<std::ptrdiff_t>(c * action_dim_);
  const auto hi = action_hi_.begin() + static_cast<std::ptrdiff_t>(c * action_dim_);
  return std::make_pair(std::vector<double>(lo, lo + static_cast<std::ptrdiff_t>(action_dim_)),
                        std::vector<double>(hi, hi + static_cast<std::ptrdiff_t>(action_dim_)));
}

double support_coverage(const OfflineDataset& ds, const Tensor& states, const Tensor& actions,
                        std::size_t bins) {
  if (states.rows() != actions.rows()) {
    throw ShapeError(-1, "coverage queries: states " + states.shape_string() + " vs actions " +
                             actions.shape_string());
  }
  const ActionEnvelope env(ds, bins);
  std::size_t counted = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < states.rows(); ++i) {
    if (!env.covered(states.row_span(i))) continue;
    ++counted;
    if (env.inside(states.row_span(i), actions.row_span(i))) ++hits;
  }
  if (counted == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(hits) / static_cast<double>(counted);
}

}  // namespace misa::data
