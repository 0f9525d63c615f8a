#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "malt/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"MALT sampler experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  bool single_chain = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file path")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", seed, "PRNG seed (overrides config)");
    cmd->add_flag("--quiet", quiet, "suppress progress output");
  };

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run);
  run->add_flag("--single-chain", single_chain,
                "single-chain preset: K=1, learning rate 0.01, 4x adaptation budget");

  CLI::App* sweep = app.add_subcommand("sweep", "fixed-kernel (tau, gamma) grid sweep");
  add_common(sweep);

  CLI::App* bench = app.add_subcommand("bench", "repeated-seed method battery");
  add_common(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (single_chain) {
        malt::ExperimentConfig config = malt::load_config(config_path);
        if (out_dir) config.output.dir = *out_dir;
        if (seed) config.run.seed = *seed;
        malt::apply_single_chain_preset(config);
        return malt::run_command(config, quiet);
      }
      return malt::cmd_run(config_path, out_dir, seed, quiet);
    }
    if (sweep->parsed()) return malt::cmd_sweep(config_path, out_dir, seed, quiet);
    if (bench->parsed()) return malt::cmd_bench(config_path, out_dir, seed, quiet);
  } catch (const malt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
