#include "run_config.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace misa::cli {
namespace {

std::string normalize_key(std::string key) {
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) out.push_back(part);
  return out;
}

Json parse_scalar_like(const Json& like, const std::string& key, const std::string& text) {
  try {
    if (like.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw UsageError("--" + key + " expects true or false, got '" + text + "'");
    }
    if (like.is_number_unsigned()) {
      std::size_t used = 0;
      if (!text.empty() && text.front() == '-') throw std::invalid_argument("negative");
      const unsigned long long v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return v;
    }
    if (like.is_number_integer()) {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return v;
    }
    if (like.is_number_float()) {
      if (text == "inf") return "inf";
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return v;
    }
    if (like.is_string()) return text;
  } catch (const std::invalid_argument&) {
    throw UsageError("--" + key + " expects a " + std::string(like.type_name()) + ", got '" +
                     text + "'");
  } catch (const std::out_of_range&) {
    throw UsageError("--" + key + " value out of range: '" + text + "'");
  }
  // null default: JSON literal if it parses, otherwise a string.
  const Json parsed = Json::parse(text, nullptr, false);
  return parsed.is_discarded() ? Json(text) : parsed;
}

Json parse_value(const Json& like, const std::string& key, const std::string& text) {
  if (like.is_array()) {
    const Json parsed = Json::parse(text, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_array()) return parsed;
    Json out = Json::array();
    if (text.empty()) return out;
    const Json element = like.empty() ? Json() : like.front();
    for (const auto& part : split(text, ',')) out.push_back(parse_scalar_like(element, key, part));
    return out;
  }
  return parse_scalar_like(like, key, text);
}

Json* find_path(Json& root, const std::string& dotted) {
  Json* node = &root;
  for (const auto& part : split(dotted, '.')) {
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
  }
  return node;
}

void merge_file(Json& target, const Json& source, const std::string& prefix,
                std::set<std::string>& explicit_keys) {
  for (const auto& [key, value] : source.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!target.contains(key)) throw UsageError("unknown config key '" + path + "'");
    Json& slot = target[key];
    if (slot.is_object() && value.is_object()) {
      merge_file(slot, value, path, explicit_keys);
    } else {
      slot = value;
      explicit_keys.insert(path);
    }
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_flag_pairs(
    const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
      throw UsageError("unexpected argument '" + arg + "'");
    }
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(normalize_key(arg.substr(0, eq)), arg.substr(eq + 1));
    } else if (i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0) {
      out.emplace_back(normalize_key(arg), args[i + 1]);
      ++i;
    } else {
      out.emplace_back(normalize_key(arg), "true");
    }
  }
  return out;
}

ResolvedConfig resolve_config(const Json& defaults, const std::optional<std::string>& config_file,
                              const std::vector<std::pair<std::string, std::string>>& flags) {
  ResolvedConfig rc{defaults, {}};
  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw UsageError("cannot open config file '" + *config_file + "'");
    const Json file = Json::parse(in, nullptr, false);
    if (file.is_discarded() || !file.is_object()) {
      throw UsageError("config file '" + *config_file + "' is not a JSON object");
    }
    merge_file(rc.values, file, "", rc.explicit_keys);
  }
  for (const auto& [key, text] : flags) {
    Json* slot = find_path(rc.values, key);
    const Json* like = find_path(const_cast<Json&>(defaults), key);
    if (slot == nullptr || like == nullptr || like->is_object()) {
      throw UsageError("unknown option --" + key);
    }
    *slot = parse_value(*like, key, text);
    rc.explicit_keys.insert(key);
  }
  return rc;
}

Json explicit_subset(const ResolvedConfig& config, const std::string& prefix,
                     const std::set<std::string>& allowed) {
  Json out = Json::object();
  const std::string lead = prefix.empty() ? "" : prefix + ".";
  for (const auto& key : config.explicit_keys) {
    if (key.rfind(lead, 0) != 0) continue;
    const std::string rest = key.substr(lead.size());
    const std::string top = rest.substr(0, rest.find('.'));
    if (!allowed.contains(top)) continue;
    Json* value = find_path(const_cast<Json&>(config.values), key);
    Json* node = &out;
    const auto parts = split(rest, '.');
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = *value;
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::filesystem::path run_directory(const std::string& command, std::uint64_t seed,
                                    const Json& resolved) {
  std::filesystem::path root = ".";
  if (resolved.contains("out_dir") && resolved["out_dir"].is_string()) {
    root = resolved["out_dir"].get<std::string>();
  } else if (const char* env = std::getenv("MISA_OUT_DIR"); env != nullptr && *env != '\0') {
    root = env;
  }
  Json hashed = resolved;
  hashed.erase("out_dir");
  std::ostringstream name;
  name << command << '-' << seed << '-' << std::hex << std::setw(16) << std::setfill('0')
       << fnv1a64(hashed.dump());
  return root / name.str();
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_run_files(const std::filesystem::path& dir, const std::string& command,
                     const Json& resolved) {
  std::filesystem::create_directories(dir);
  write_json(dir / "config.json", resolved);
  write_json(dir / "run_meta.json", {{"command", command}, {"started_utc", utc_timestamp()}});
}

}  // namespace misa::cli
