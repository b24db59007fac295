#pragma once
// Subcommand implementations behind the sipm-lab executable.

#include <filesystem>
#include <iosfwd>

#include "sipm/config.hpp"

namespace sipm::commands {

enum Exit : int { ok = 0, invariant_failure = 1, usage_error = 2 };

struct Context {
  std::filesystem::path out;
  bool quiet = false;
  std::ostream* log = nullptr;  // progress; nullptr or quiet silences it
  std::ostream* err = nullptr;  // diagnostics
};

/// Creates the output directory, echoes the configuration to config.ini and
/// dispatches on cfg.command. Library exceptions map to exit codes.
int run(const config::RunConfig& cfg, const Context& ctx);

}  // namespace sipm::commands
