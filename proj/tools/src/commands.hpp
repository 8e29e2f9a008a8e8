#pragma once

#include <string>

#include "run_config.hpp"

namespace misa::cli {

struct Command {
  const char* name;
  const char* summary;
  Json (*defaults)();
  int (*run)(const ResolvedConfig&);
};

const std::vector<Command>& commands();

}  // namespace misa::cli
