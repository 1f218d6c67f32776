// Command-line front end: builds the two-pole Kaup-Boussinesq soliton from
// discrete scattering data, evaluates it on grids, and runs the verification
// suites. See README.md for the file formats.

#include <CLI11.hpp>

#include "kbsoliton/cli.hpp"

namespace {

void add_common(CLI::App* cmd, kb::RunConfig& cfg, std::string& format) {
  cmd->add_option("--mu", cfg.mu, "Re lambda1 (nonzero)")->required();
  cmd->add_option("--nu", cfg.nu, "Im lambda1 (> 0)")->required();
  cmd->add_option("--x0", cfg.x0, "norming constant x0 (default: normalized)");
  cmd->add_option("--t0", cfg.t0, "norming constant t0 (default: 0)");
  cmd->add_option("--x-min", cfg.grid.x_min, "grid left edge")->required();
  cmd->add_option("--x-max", cfg.grid.x_max, "grid right edge")->required();
  cmd->add_option("--x-step", cfg.grid.x_step, "grid spacing")->required();
  cmd->add_option("--times", cfg.grid.times, "time slices")->required()->delimiter(',');
  cmd->add_option("--out", cfg.out, "output path prefix")->required();
  cmd->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--tol-gamma", cfg.tol_gamma, "singularity tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-pole Kaup-Boussinesq soliton: evaluation and verification"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config appear after the subcommand name
  app.set_config("--config", "",
                 "INI config file with a [eval]/[verify]/[singularities] section; "
                 "command-line flags override file values");
  app.allow_config_extras(CLI::config_extras_mode::error);  // unknown keys rejected

  kb::RunConfig cfg;
  std::string format = "csv";

  auto* eval = app.add_subcommand("eval", "evaluate u, eta on the grid and export slices");
  add_common(eval, cfg, format);

  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->set_help_flag("--help", "print help");  // frees -h for the FD step flag
  add_common(verify, cfg, format);
  verify->add_option("--suite", cfg.suite, "algebra, pde, scatter or all")
      ->check(CLI::IsMember({"algebra", "pde", "scatter", "all"}));
  verify->add_option("--h", cfg.h, "FD step for the PDE residual study");
  verify->add_option("--L", cfg.L, "scattering domain half-width");
  verify->add_option("--steps", cfg.steps, "scattering integrator steps");

  auto* sing = app.add_subcommand("singularities", "bisect Gamma sign changes per slice");
  add_common(sing, cfg, format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  cfg.format = (format == "json") ? kb::OutputFormat::json : kb::OutputFormat::csv;
  if (eval->parsed()) return kb::cmd_eval(cfg);
  if (verify->parsed()) return kb::cmd_verify(cfg);
  return kb::cmd_singularities(cfg);
}
