#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "misa/common/error.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace misa::cli;
  CLI::App app{"Mutual-information regularized offline RL on toy tasks", "misa"};
  app.require_subcommand(1);
  struct Entry {
    const Command* command;
    CLI::App* sub;
    std::string config;
  };
  std::vector<Entry> entries;
  entries.reserve(commands().size());
  for (const Command& c : commands()) {
    CLI::App* sub = app.add_subcommand(c.name, c.summary);
    sub->allow_extras();
    entries.push_back({&c, sub, {}});
    sub->add_option("--config", entries.back().config, "JSON config file (flags override it)");
    sub->footer("Any config key is also a flag: --key value (nested keys as --a.b value).");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  for (const Entry& e : entries) {
    if (!e.sub->parsed()) continue;
    try {
      const auto flags = parse_flag_pairs(e.sub->remaining());
      const std::optional<std::string> file =
          e.config.empty() ? std::nullopt : std::optional<std::string>(e.config);
      return e.command->run(resolve_config(e.command->defaults(), file, flags));
    } catch (const UsageError& err) {
      std::cerr << "misa " << e.command->name << ": " << err.what() << '\n';
      return kExitUsage;
    } catch (const misa::ConfigError& err) {
      std::cerr << "misa " << e.command->name << ": " << err.what() << '\n';
      return kExitUsage;
    } catch (const misa::NumericalError& err) {
      std::cerr << "misa " << e.command->name << ": numerical abort: " << err.what() << '\n';
      return kExitNumerical;
    } catch (const std::exception& err) {
      std::cerr << "misa " << e.command->name << ": " << err.what() << '\n';
      return 1;
    }
  }
  return kExitUsage;
}
