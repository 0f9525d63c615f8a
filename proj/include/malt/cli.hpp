#pragma once

#include <optional>
#include <string>
#include <vector>

#include "malt/sampler.hpp"
#include "malt/target.hpp"

namespace malt {

// A sweep over fixed (tau, gamma) kernels, Fig.-style efficiency surface data.
struct SweepConfig {
  std::vector<double> tau_grid;
  std::vector<double> gamma_grid;
  double step = 0.2;  // h for the fixed kernels
  int repeats = 1;
};

struct BenchConfig {
  std::vector<std::string> methods;  // malt-adaptive | malt-rho1 | hmc | rhmc-uniform | rhmc-exponential
  int repeats = 5;
};

struct OutputConfig {
  std::string dir = "out";
  bool draws = false;  // also write draws.csv
};

struct ExperimentConfig {
  BuiltinTargetSpec target;
  RunConfig run;
  OutputConfig output;
  std::optional<SweepConfig> sweep;
  std::optional<BenchConfig> bench;
};

// Config file errors name the offending section/key.
struct ConfigError : std::runtime_error {
  explicit ConfigError(std::string what) : std::runtime_error(std::move(what)) {}
};

// Parses the sectioned key = value format documented in the README. Unknown
// sections, unknown keys, duplicates and type mismatches are all errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Lowers the single-chain preset: K = 1, quartered learning rate schedule
// (delta = 0.01) and 4x the adaptation budget.
void apply_single_chain_preset(ExperimentConfig& config);

// Library entry points backing the CLI subcommands; each writes its files
// under config.output.dir and returns a process exit code (0 ok, 1 config
// error, 2 runtime abort).
int run_command(const ExperimentConfig& config, bool quiet);
int sweep_command(const ExperimentConfig& config, bool quiet);
int bench_command(const ExperimentConfig& config, bool quiet);

// File-based wrappers: load, then dispatch. Used by the CLI binary.
int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir,
            const std::optional<std::uint64_t>& seed, bool quiet);
int cmd_sweep(const std::string& config_path, const std::optional<std::string>& out_dir,
              const std::optional<std::uint64_t>& seed, bool quiet);
int cmd_bench(const std::string& config_path, const std::optional<std::string>& out_dir,
              const std::optional<std::uint64_t>& seed, bool quiet);

}  // namespace malt
