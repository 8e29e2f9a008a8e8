#pragma once

#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "misa/autodiff/tensor.hpp"
#include "misa/common/rng.hpp"

namespace misa::data {

using ad::Tensor;

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool terminal = false;
};

struct Batch {
  Tensor states;       // B x S
  Tensor actions;      // B x A
  Tensor rewards;      // B x 1
  Tensor next_states;  // B x S
  Tensor terminals;    // B x 1, 0 or 1

  std::size_t size() const noexcept { return states.rows(); }
};

// Immutable transition table.
class OfflineDataset {
 public:
  OfflineDataset() = default;
  OfflineDataset(Tensor states, Tensor actions, Tensor rewards, Tensor next_states,
                 Tensor terminals, nlohmann::json provenance);
  static OfflineDataset from_transitions(const std::vector<Transition>& transitions,
                                         nlohmann::json provenance);

  std::size_t size() const noexcept { return states_.rows(); }
  std::size_t state_dim() const noexcept { return states_.cols(); }
  std::size_t action_dim() const noexcept { return actions_.cols(); }

  const Tensor& states() const noexcept { return states_; }
  const Tensor& actions() const noexcept { return actions_; }
  const Tensor& rewards() const noexcept { return rewards_; }
  const Tensor& next_states() const noexcept { return next_states_; }
  const Tensor& terminals() const noexcept { return terminals_; }
  const nlohmann::json& provenance() const noexcept { return provenance_; }

  Transition transition(std::size_t i) const;
  Batch gather(std::span<const std::size_t> indices) const;
  // Uniform indices with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  Batch sample_batch(std::size_t n, Rng& rng) const;

 private:
  Tensor states_;
  Tensor actions_;
  Tensor rewards_;
  Tensor next_states_;
  Tensor terminals_;
  nlohmann::json provenance_;
};

// Line 1: {"version":1,"state_dim":S,"action_dim":A,"count":N,"provenance":{...}}
// then N records of little-endian float32: s, a, r, s', terminal.
void write_dataset(std::ostream& out, const OfflineDataset& ds);
OfflineDataset read_dataset(std::istream& in);
void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path);
OfflineDataset load_dataset(const std::filesystem::path& path);

// Nearest float32 value, as stored on disk.
inline double to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

}  // namespace misa::data
