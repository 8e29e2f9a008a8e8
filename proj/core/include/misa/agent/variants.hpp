#pragma once

#include <array>
#include <string>

#include "misa/agent/train_config.hpp"

namespace misa::agent {

// Ablation column names, in table order, followed by the plain SAC baseline.
inline constexpr std::array<const char*, 11> kVariantNames = {
    "k=5", "k=20", "BI=1", "no BA", "BA", "MISA-f", "MISA-DV", "MISA-biased", "MISA-T", "MISA",
    "SAC"};

// Applies the deltas of `variant` to `base`; sets base.variant. Throws
// ConfigError on an unknown name.
//   k=5, k=20    mc_samples
//   BI=1         hmc.burn_in = 1
//   no BA        policy MI term keeps only the normalizer
//   BA           critic unregularized, policy MI term keeps only the data term
//   MISA-f/-DV   bound in both losses
//   MISA-biased  reparameterized MI gradient
//   MISA-T       separate T-network as the MI energy
//   SAC          both regularizers off
TrainConfig variant_matrix(const std::string& variant, TrainConfig base = {});

}  // namespace misa::agent
