#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace misa::cli {

using Json = nlohmann::json;

// Raised for bad command lines and config files; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResolvedConfig {
  Json values;
  // Dotted paths set by the config file or a flag.
  std::set<std::string> explicit_keys;
};

// "--key value", "--key=value" and bare "--flag" (true). Keys use '_' for '-';
// dots address nested objects.
std::vector<std::pair<std::string, std::string>> parse_flag_pairs(
    const std::vector<std::string>& args);

// defaults < config file < flags. Every key must exist in `defaults`; flag
// values are parsed against the type of the default.
ResolvedConfig resolve_config(const Json& defaults, const std::optional<std::string>& config_file,
                              const std::vector<std::pair<std::string, std::string>>& flags);

// Sub-object of `explicit_keys` under `prefix` ("" for top level), with the
// prefix stripped.
Json explicit_subset(const ResolvedConfig& config, const std::string& prefix,
                     const std::set<std::string>& allowed);

std::uint64_t fnv1a64(const std::string& text);

// <root>/<command>-<seed>-<hash>, root = out_dir, else $MISA_OUT_DIR, else ".".
// The hash covers the resolved config without out_dir.
std::filesystem::path run_directory(const std::string& command, std::uint64_t seed,
                                    const Json& resolved);

// config.json (verbatim echo) and run_meta.json (timestamp, command).
void write_run_files(const std::filesystem::path& dir, const std::string& command,
                     const Json& resolved);

void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace misa::cli
