#include "misa/agent/train_config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "misa/common/error.hpp"

namespace misa::agent {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  return s;
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

const char* q_reg_name(QRegMode mode) noexcept {
  return mode == QRegMode::Fixed ? "fixed" : "lagrange";
}

const char* mi_grad_name(MiGradMode mode) noexcept {
  switch (mode) {
    case MiGradMode::UnbiasedMcmc: return "unbiased_mcmc";
    case MiGradMode::Reparam: return "reparam";
    case MiGradMode::DataTermOnly: return "data_term_only";
  }
  return "?";
}

const char* temperature_mode_name(TemperatureMode mode) noexcept {
  return mode == TemperatureMode::Fixed ? "fixed" : "auto";
}

QRegMode parse_q_reg(const std::string& name) {
  const std::string n = lower(name);
  if (n == "fixed") return QRegMode::Fixed;
  if (n == "lagrange") return QRegMode::Lagrange;
  throw ConfigError("unknown q_reg mode '" + name + "' (fixed, lagrange)");
}

MiGradMode parse_mi_grad(const std::string& name) {
  const std::string n = lower(name);
  if (n == "unbiased_mcmc") return MiGradMode::UnbiasedMcmc;
  if (n == "reparam") return MiGradMode::Reparam;
  if (n == "data_term_only") return MiGradMode::DataTermOnly;
  throw ConfigError("unknown mi_grad mode '" + name +
                    "' (unbiased_mcmc, reparam, data_term_only)");
}

TemperatureMode parse_temperature_mode(const std::string& name) {
  const std::string n = lower(name);
  if (n == "fixed") return TemperatureMode::Fixed;
  if (n == "auto") return TemperatureMode::Auto;
  throw ConfigError("unknown temperature mode '" + name + "' (fixed, auto)");
}

void TrainConfig::validate() const {
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in (0, 1]");
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  hmc.validate();
  if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) throw ConfigError("gamma1 and gamma2 must be >= 0");
  if (q_reg == QRegMode::Lagrange && !(gamma1 > 0.0)) {
    throw ConfigError("lagrange mode needs an initial gamma1 > 0");
  }
  if (bound == mi::BoundKind::BA) {
    throw ConfigError("bound must be MISA, MISA-DV or MISA-f; use the BA variant for BA");
  }
  if (!(init_temperature > 0.0)) throw ConfigError("init_temperature must be > 0");
  for (double lr : {actor_lr, critic_lr, temperature_lr, tnet_lr, resolved_dual_lr()}) {
    if (!(lr > 0.0)) throw ConfigError("learning rates must be > 0");
  }
  if (!(polyak > 0.0 && polyak <= 1.0)) throw ConfigError("polyak must lie in (0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (hidden.empty()) throw ConfigError("hidden must list at least one layer");
  if (!(exp_clamp > 0.0)) throw ConfigError("exp_clamp must be > 0");
}

double default_tau(const std::string& env_name) {
  return env_name == "chain-maze" || env_name == "grid-discrete" ? 10.0 : 3.0;
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["variant"] = c.variant;
  j["discount"] = c.discount;
  j["mc_samples"] = c.mc_samples;
  j["hmc"] = {{"burn_in", c.hmc.burn_in},
              {"leapfrog_steps", c.hmc.leapfrog_steps},
              {"step_size", c.hmc.step_size},
              {"chains", c.hmc.chains}};
  j["gamma1"] = c.gamma1;
  j["gamma2"] = c.gamma2;
  j["q_reg"] = q_reg_name(c.q_reg);
  j["tau"] = c.tau;
  j["mi_grad"] = mi_grad_name(c.mi_grad);
  j["bound"] = mi::bound_name(c.bound);
  j["no_ba"] = c.no_ba;
  j["misa_t"] = c.misa_t;
  j["temperature"] = temperature_mode_name(c.temperature);
  j["init_temperature"] = c.init_temperature;
  j["target_entropy"] = c.target_entropy ? nlohmann::json(*c.target_entropy) : nlohmann::json();
  j["actor_lr"] = c.actor_lr;
  j["critic_lr"] = c.critic_lr;
  j["dual_lr"] = c.dual_lr ? nlohmann::json(*c.dual_lr) : nlohmann::json();
  j["temperature_lr"] = c.temperature_lr;
  j["tnet_lr"] = c.tnet_lr;
  j["polyak"] = c.polyak;
  j["batch_size"] = c.batch_size;
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["hidden"] = c.hidden;
  j["activation"] = ad::activation_name(c.activation);
  j["squash"] = c.squash;
  j["exp_clamp"] = std::isinf(c.exp_clamp) ? nlohmann::json("inf") : nlohmann::json(c.exp_clamp);
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  static const std::set<std::string> known = {
      "variant",  "discount",   "mc_samples",  "hmc",        "gamma1",         "gamma2",
      "q_reg",    "tau",        "mi_grad",     "bound",      "no_ba",          "misa_t",
      "temperature", "init_temperature", "target_entropy", "actor_lr", "critic_lr", "dual_lr",
      "temperature_lr", "tnet_lr", "polyak", "batch_size", "steps", "seed", "hidden",
      "activation", "squash", "exp_clamp"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown train config field '" + key + "'");
  }
  read(j, "variant", c.variant);
  read(j, "discount", c.discount);
  read(j, "mc_samples", c.mc_samples);
  if (j.contains("hmc")) {
    const auto& h = j.at("hmc");
    if (!h.is_object()) throw ConfigError("config field 'hmc' must be an object");
    read(h, "burn_in", c.hmc.burn_in);
    read(h, "leapfrog_steps", c.hmc.leapfrog_steps);
    read(h, "step_size", c.hmc.step_size);
    read(h, "chains", c.hmc.chains);
  }
  read(j, "gamma1", c.gamma1);
  read(j, "gamma2", c.gamma2);
  std::string text;
  if (j.contains("q_reg")) c.q_reg = parse_q_reg((read(j, "q_reg", text), text));
  read(j, "tau", c.tau);
  if (j.contains("mi_grad")) c.mi_grad = parse_mi_grad((read(j, "mi_grad", text), text));
  if (j.contains("bound")) c.bound = mi::parse_bound((read(j, "bound", text), text));
  read(j, "no_ba", c.no_ba);
  read(j, "misa_t", c.misa_t);
  if (j.contains("temperature")) {
    c.temperature = parse_temperature_mode((read(j, "temperature", text), text));
  }
  read(j, "init_temperature", c.init_temperature);
  if (j.contains("target_entropy")) {
    if (j.at("target_entropy").is_null()) {
      c.target_entropy.reset();
    } else {
      double v = 0.0;
      read(j, "target_entropy", v);
      c.target_entropy = v;
    }
  }
  read(j, "actor_lr", c.actor_lr);
  read(j, "critic_lr", c.critic_lr);
  if (j.contains("dual_lr")) {
    if (j.at("dual_lr").is_null()) {
      c.dual_lr.reset();
    } else {
      double v = 0.0;
      read(j, "dual_lr", v);
      c.dual_lr = v;
    }
  }
  read(j, "temperature_lr", c.temperature_lr);
  read(j, "tnet_lr", c.tnet_lr);
  read(j, "polyak", c.polyak);
  read(j, "batch_size", c.batch_size);
  read(j, "steps", c.steps);
  read(j, "seed", c.seed);
  read(j, "hidden", c.hidden);
  if (j.contains("activation")) c.activation = ad::parse_activation((read(j, "activation", text), text));
  read(j, "squash", c.squash);
  if (j.contains("exp_clamp")) {
    const auto& v = j.at("exp_clamp");
    if (v.is_string()) {
      if (lower(v.get<std::string>()) != "inf") throw ConfigError("exp_clamp must be a number or \"inf\"");
      c.exp_clamp = std::numeric_limits<double>::infinity();
    } else {
      read(j, "exp_clamp", c.exp_clamp);
    }
  }
  return c;
}

}  // namespace misa::agent
