#include "misa/agent/variants.hpp"

#include "misa/common/error.hpp"

namespace misa::agent {

TrainConfig variant_matrix(const std::string& variant, TrainConfig c) {
  c.variant = variant;
  if (variant == "MISA") return c;
  if (variant == "k=5") {
    c.mc_samples = 5;
  } else if (variant == "k=20") {
    c.mc_samples = 20;
  } else if (variant == "BI=1") {
    c.hmc.burn_in = 1;
  } else if (variant == "no BA") {
    c.no_ba = true;
  } else if (variant == "BA") {
    c.q_reg = QRegMode::Fixed;
    c.gamma1 = 0.0;
    c.mi_grad = MiGradMode::DataTermOnly;
  } else if (variant == "MISA-f") {
    c.bound = mi::BoundKind::MisaF;
  } else if (variant == "MISA-DV") {
    c.bound = mi::BoundKind::MisaDV;
  } else if (variant == "MISA-biased") {
    c.mi_grad = MiGradMode::Reparam;
  } else if (variant == "MISA-T") {
    c.misa_t = true;
  } else if (variant == "SAC") {
    c.q_reg = QRegMode::Fixed;
    c.gamma1 = 0.0;
    c.gamma2 = 0.0;
  } else {
    std::string names;
    for (const char* n : kVariantNames) names += std::string(names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown variant '" + variant + "' (" + names + ")");
  }
  return c;
}

}  // namespace misa::agent
