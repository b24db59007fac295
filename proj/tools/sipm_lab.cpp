// sipm-lab: eigenvalue, linear-growth and patch-evolution runs from one
// config file.

#include <cstdlib>
#include <iostream>
#include <utility>

#include <CLI11.hpp>

#include "sipm/commands.hpp"
#include "sipm/config.hpp"
#include "sipm/error.hpp"

int main(int argc, char** argv) {
  namespace cmd = sipm::commands;
  CLI::App app{"sipm-lab: unstable spectrum and patch dynamics for even-multiplier active scalars"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  bool quiet = false;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides SIPM_LAB_OUT and output.dir)");
  app.add_flag("--quiet", quiet, "suppress progress output");
  const std::pair<const char*, const char*> subcommands[] = {
      {"spectrum", "solve lambda* over the k sweep; writes spectrum.csv"},
      {"scan-f2", "tabulate F_2 against lambda p_1; writes scan.csv and crossing.txt"},
      {"evolve-linear", "integrate the linearized flow on one k1 slice; writes trajectory.csv and field.csv"},
      {"beta2-check", "beta = 2 construction residuals and growth; writes beta2.csv"},
      {"patch-run", "evolve the contour equation; writes snapshots/ and norms.csv"},
      {"patch-verify", "contour kernel invariance and limit suite; writes verify.csv"},
      {"cbeta", "print C_beta for patch.beta; writes cbeta.csv"},
      {"validate-symbol", "check the SIPM symbol against the admissibility conditions; writes validate.csv"},
  };
  for (const auto& [name, help] : subcommands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cmd::ok : cmd::usage_error;
  }

  sipm::config::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = sipm::config::load(config_path);
  } catch (const sipm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cmd::usage_error;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  if (!out_dir.empty()) {
    cfg.out = out_dir;
  } else if (const char* env = std::getenv("SIPM_LAB_OUT"); env && *env) {
    cfg.out = env;
  }

  cmd::Context ctx;
  ctx.out = cfg.out;
  ctx.quiet = quiet;
  ctx.log = &std::cout;
  ctx.err = &std::cerr;
  return cmd::run(cfg, ctx);
}
