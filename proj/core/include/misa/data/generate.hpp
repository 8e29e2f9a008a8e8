#pragma once

#include <string>

#include "misa/data/dataset.hpp"
#include "misa/data/envs.hpp"

namespace misa::data {

enum class Tier { Random, Expert, Medium, MediumReplay, MediumExpert, OodGap };

const char* tier_name(Tier tier) noexcept;
// Accepts "random", "expert", "medium", "medium_replay", "medium_expert",
// "ood_gap" ('-' works for '_').
Tier parse_tier(const std::string& name);

struct GenerateOptions {
  // Gaussian noise on the expert tier's actions.
  double expert_noise = 0.02;
  // Gaussian noise on the expert component of the medium mixture.
  double medium_noise = 0.1;
  // Normalized score the medium behavior is calibrated to.
  double medium_target = 100.0 / 3.0;
  std::size_t calibration_episodes = 100;
  // ood_gap actions stay inside [-ood_limit, ood_limit].
  double ood_limit = 0.3;
};

// Probability of following the noisy expert (else a uniform action) at each
// step, chosen by bisection so the mixture scores options.medium_target.
double calibrate_medium_mix(const ToyEnv& env, const GenerateOptions& options = {});

// Rolls the tier's behavior policy until n transitions are collected. Values
// are rounded to float32 so the in-memory dataset equals its saved form.
OfflineDataset generate_dataset(const ToyEnv& env, Tier tier, std::size_t n, std::uint64_t seed,
                                const GenerateOptions& options = {});

}  // namespace misa::data
