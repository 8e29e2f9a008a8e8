#include <bit>
#include <fstream>
#include <string>

#include "misa/agent/checkpoint.hpp"
#include "misa/common/binary_io.hpp"
#include "misa/common/error.hpp"

namespace misa::agent {
namespace {

constexpr const char* kFormat = "misa-train-state/1";

// Doubles stored by bit pattern so the header round-trips exactly.
std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }
double from_bits(const nlohmann::json& j) { return std::bit_cast<double>(j.get<std::uint64_t>()); }

nlohmann::json scalar_adam_json(const ad::ScalarAdam& a) {
  return {{"m", bits(a.m)}, {"v", bits(a.v)}, {"t", a.t}};
}

ad::ScalarAdam scalar_adam_from(const nlohmann::json& j) {
  ad::ScalarAdam a;
  a.m = from_bits(j.at("m"));
  a.v = from_bits(j.at("v"));
  a.t = j.at("t").get<std::int64_t>();
  return a;
}

void write_moments(std::ostream& out, const ad::AdamState& s) {
  for (const auto* list : {&s.m, &s.v}) {
    for (const Tensor& t : *list) {
      for (double v : t.data()) io::write_f64(out, v);
    }
  }
}

void read_moments(std::istream& in, ad::AdamState& s) {
  for (auto* list : {&s.m, &s.v}) {
    for (Tensor& t : *list) {
      for (double& v : t.data()) {
        if (!io::read_f64(in, v)) throw ParseError(0, "checkpoint truncated in optimizer moments");
      }
    }
  }
}

std::vector<const ad::AdamState*> adam_list(const TrainState& st) {
  std::vector<const ad::AdamState*> out{&st.policy_adam};
  for (const auto& a : st.critic_adam) out.push_back(&a);
  if (st.tnet_adam) out.push_back(&*st.tnet_adam);
  return out;
}

}  // namespace

void write_checkpoint(std::ostream& out, const TrainConfig& config, const TrainState& st) {
  nlohmann::json h;
  h["format"] = kFormat;
  h["config"] = to_json(config);
  h["step"] = st.step;
  h["seed"] = st.seed;
  h["dual_raw"] = bits(st.dual_raw);
  h["log_temperature"] = bits(st.log_temperature);
  h["dual_adam"] = scalar_adam_json(st.dual_adam);
  h["temperature_adam"] = scalar_adam_json(st.temperature_adam);
  h["critic_heads"] = st.critic.heads.size();
  h["has_tnet"] = st.tnet.has_value();
  h["squash"] = st.policy.config().squash;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto* a : adam_list(st)) steps.push_back(a->t);
  h["adam_steps"] = steps;
  out << h.dump() << '\n';

  ad::write_mlp(out, st.policy.net());
  for (const auto& head : st.critic.heads) ad::write_mlp(out, head);
  for (const auto& head : st.target.heads) ad::write_mlp(out, head);
  if (st.tnet) ad::write_mlp(out, st.tnet->heads.front());
  for (const auto* a : adam_list(st)) write_moments(out, *a);
  if (!out) throw Error("checkpoint write failed");
}

std::pair<TrainConfig, TrainState> read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "missing checkpoint header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.byte, std::string("checkpoint header is not JSON: ") + e.what());
  }
  if (h.value("format", std::string()) != kFormat) {
    throw ParseError(0, "not a checkpoint (format '" + h.value("format", std::string()) + "')");
  }
  try {
    TrainConfig config = train_config_from_json(h.at("config"));
    TrainState st;
    st.step = h.at("step").get<std::uint64_t>();
    st.seed = h.at("seed").get<std::uint64_t>();
    st.dual_raw = from_bits(h.at("dual_raw"));
    st.log_temperature = from_bits(h.at("log_temperature"));
    st.dual_adam = scalar_adam_from(h.at("dual_adam"));
    st.temperature_adam = scalar_adam_from(h.at("temperature_adam"));
    const auto heads = h.at("critic_heads").get<std::size_t>();

    ad::MlpParams pnet = ad::read_mlp(in);
    const std::size_t out_dim = pnet.out_dim();
    dist::PolicyConfig pcfg;
    pcfg.squash = h.at("squash").get<bool>();
    const std::size_t adim = out_dim / 2;
    st.policy = dist::GaussianPolicy(std::move(pnet), adim, pcfg);
    const std::size_t sdim = st.policy.state_dim();
    st.critic.state_dim = st.target.state_dim = sdim;
    st.critic.action_dim = st.target.action_dim = adim;
    for (std::size_t i = 0; i < heads; ++i) st.critic.heads.push_back(ad::read_mlp(in));
    for (std::size_t i = 0; i < heads; ++i) st.target.heads.push_back(ad::read_mlp(in));
    if (h.at("has_tnet").get<bool>()) {
      st.tnet = mi::Critic{{ad::read_mlp(in)}, sdim, adim, 0.0};
      st.tnet_adam = ad::AdamState::for_params(st.tnet->heads.front());
    }
    st.policy_adam = ad::AdamState::for_params(st.policy.net());
    for (const auto& head : st.critic.heads) {
      st.critic_adam.push_back(ad::AdamState::for_params(head));
    }
    const auto steps = h.at("adam_steps").get<std::vector<std::int64_t>>();
    std::vector<ad::AdamState*> states{&st.policy_adam};
    for (auto& a : st.critic_adam) states.push_back(&a);
    if (st.tnet_adam) states.push_back(&*st.tnet_adam);
    if (steps.size() != states.size()) throw ParseError(0, "checkpoint optimizer count mismatch");
    for (std::size_t i = 0; i < states.size(); ++i) {
      states[i]->t = steps[i];
      read_moments(in, *states[i]);
    }
    return {std::move(config), std::move(st)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config,
                     const TrainState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, config, state);
}

std::pair<TrainConfig, TrainState> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace misa::agent
