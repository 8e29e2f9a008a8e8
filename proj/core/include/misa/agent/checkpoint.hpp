#pragma once

#include <filesystem>
#include <iosfwd>
#include <utility>

#include "misa/agent/agent.hpp"

namespace misa::agent {

// Line 1: JSON trainer state {"format","config","step","seed","dual_raw",
// "log_temperature","adam":{...},"nets":[...]}; then every network in
// parameter-block format (policy, critic heads, target heads, T-network),
// then the Adam moments of each network as little-endian float64.
void write_checkpoint(std::ostream& out, const TrainConfig& config, const TrainState& state);
std::pair<TrainConfig, TrainState> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config,
                     const TrainState& state);
std::pair<TrainConfig, TrainState> load_checkpoint(const std::filesystem::path& path);

}  // namespace misa::agent
