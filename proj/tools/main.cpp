#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "microbend/harness.hpp"

// Subcommands: cell, simulate, converge, check.
// Global flags (--config, --out, --seed, --threads) override config keys.
// Exit codes: 0 success, 1 validation failure, 2 solver failure, 3 check failure.
int main(int argc, char** argv) {
  CLI::App app{"two-scale simulator for prestrained microstructured bending plates"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int threads = 0;

  for (const std::string& name : {"cell", "simulate", "converge", "check"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration file (TOML)");
    sub->add_option("--out", out_dir, "output directory (overrides run.out)");
    sub->add_option("--seed", seed, "rng seed (overrides run.seed)");
    sub->add_option("--threads", threads, "worker threads (overrides run.threads)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    microbend::toml::Table table;
    if (!config_path.empty()) table = microbend::toml::Table::parse_file(config_path);
    if (!out_dir.empty()) table.set_override("run.out", "\"" + out_dir + "\"");
    if (seed >= 0) table.set_override("run.seed", std::to_string(seed));
    if (threads > 0) table.set_override("run.threads", std::to_string(threads));
    const microbend::RunConfig cfg = microbend::parse_run_config(table);
    return microbend::harness::dispatch(command, cfg, std::cout, std::cerr);
  } catch (const microbend::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
