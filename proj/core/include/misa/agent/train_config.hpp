#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "misa/autodiff/mlp.hpp"
#include "misa/mcmc/hmc.hpp"
#include "misa/mi/bounds.hpp"

namespace misa::agent {

enum class QRegMode { Fixed, Lagrange };
enum class MiGradMode { UnbiasedMcmc, Reparam, DataTermOnly };
enum class TemperatureMode { Fixed, Auto };

const char* q_reg_name(QRegMode mode) noexcept;
const char* mi_grad_name(MiGradMode mode) noexcept;
const char* temperature_mode_name(TemperatureMode mode) noexcept;
QRegMode parse_q_reg(const std::string& name);
MiGradMode parse_mi_grad(const std::string& name);
TemperatureMode parse_temperature_mode(const std::string& name);

struct TrainConfig {
  std::string variant = "MISA";
  double discount = 0.99;
  std::size_t mc_samples = 50;
  mcmc::HmcConfig hmc;
  double gamma1 = 1.0;  // fixed weight, or the initial dual value under Lagrange
  double gamma2 = 1.0;
  QRegMode q_reg = QRegMode::Fixed;
  double tau = 3.0;
  MiGradMode mi_grad = MiGradMode::UnbiasedMcmc;
  mi::BoundKind bound = mi::BoundKind::Misa;
  bool no_ba = false;
  bool misa_t = false;
  TemperatureMode temperature = TemperatureMode::Auto;
  double init_temperature = 1.0;
  // Defaults to -action_dim.
  std::optional<double> target_entropy;
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  // Defaults to critic_lr.
  std::optional<double> dual_lr;
  double temperature_lr = 1e-4;
  double tnet_lr = 1e-4;
  double polyak = 0.005;
  std::size_t batch_size = 256;
  std::size_t steps = 20000;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64, 64};
  ad::Activation activation = ad::Activation::Elu;
  bool squash = true;
  double exp_clamp = 50.0;

  // Throws ConfigError on an out-of-range field.
  void validate() const;
  double resolved_dual_lr() const { return dual_lr.value_or(critic_lr); }
  double resolved_target_entropy(std::size_t action_dim) const {
    return target_entropy.value_or(-static_cast<double>(action_dim));
  }
};

// Penalty budget for an env: 10 on the sparse-reward mazes (chain-maze,
// grid-discrete), 3 on the dense-reward tasks.
double default_tau(const std::string& env_name);

nlohmann::json to_json(const TrainConfig& config);
// Fields missing from `j` keep their value in `base`; unknown keys throw ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace misa::agent
