#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "htd/cli/config.hpp"
#include "htd/cli/report.hpp"
#include "htd/cli/runner.hpp"

namespace cli = htd::cli;

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for heavy-tailed diffusions on the half-line"};
  app.set_version_flag("--version", cli::kVersion);
  app.require_subcommand(1);

  std::string config_path, run_dir;
  cli::RunOverrides ov;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the master seed");
  auto* out_opt = run->add_option("--out", out, "Output directory (overrides $" + std::string(cli::kOutDirEnv) + ")");
  run->add_flag("--emit-svg", ov.emit_svg, "Write SVG plots");
  run->add_flag("--emit-paths", ov.emit_paths, "Write per-step sample paths");
  auto* threads_opt = run->add_option("--threads", threads, "OpenMP thread count")->check(CLI::PositiveNumber);

  auto* val = app.add_subcommand("validate", "Check a config file without running it");
  val->add_option("config", config_path, "Config file")->required();

  auto* rep = app.add_subcommand("report", "Summarize a finished run directory");
  rep->add_option("run-dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kOperationalError;
  }

  try {
    if (*run) {
      if (*seed_opt) ov.seed = seed;
      if (*out_opt) ov.out = out;
      if (*threads_opt) ov.threads = threads;
      const auto cfg = cli::apply_overrides(cli::load_config(config_path), ov, std::getenv(cli::kOutDirEnv));
      return cli::run_experiment(cfg, std::cout, std::cerr);
    }
    if (*val) {
      const auto cfg = cli::load_config(config_path);
      cli::validate(cfg);
      std::cout << "ok: " << cli::to_string(cfg.kind) << " experiment, config hash " << cli::config_hash(cfg) << "\n";
      return cli::kOk;
    }
    if (*rep) {
      std::cout << cli::write_report(run_dir);
      return cli::kOk;
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return cli::kOperationalError;
}
