#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "malt/cli.hpp"
#include "malt/diagnostics.hpp"
#include "malt/rng.hpp"
#include "malt/util.hpp"

namespace malt {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Write-to-temp-then-rename keeps partially written files from ever being
// visible under the final name.
void atomic_write(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string fmt(double v) {
  std::ostringstream oss;
  oss << std::setprecision(17) << v;
  return oss.str();
}

const char* kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::malt: return "malt";
    case KernelKind::hmc: return "hmc";
    case KernelKind::rhmc_uniform: return "rhmc-uniform";
    case KernelKind::rhmc_exponential: return "rhmc-exponential";
  }
  return "?";
}

std::string trace_csv(const RunRecord& record) {
  std::ostringstream os;
  os << "iter,step,length,damping,lambda_hat,rho,accept,g_step,g_length\n";
  for (std::size_t i = 0; i < record.adapt_trace.size(); ++i) {
    const auto& t = record.adapt_trace[i];
    os << (i + 1) << ',' << fmt(t.step) << ',' << fmt(t.length) << ',' << fmt(t.damping) << ','
       << fmt(t.lambda_hat) << ',' << fmt(t.rho) << ',' << fmt(t.accept_prob) << ','
       << fmt(t.g_step) << ',' << fmt(t.g_length) << '\n';
  }
  return os.str();
}

std::string draws_csv(const RunRecord& record) {
  std::ostringstream os;
  os << "iter,chain";
  for (int j = 0; j < record.dim; ++j) os << ",x" << j;
  os << '\n';
  for (long t = 0; t < record.n_sample; ++t) {
    for (int k = 0; k < record.chains; ++k) {
      os << t << ',' << k;
      for (int j = 0; j < record.dim; ++j) os << ',' << fmt(record.draw(t, k, j));
      os << '\n';
    }
  }
  return os.str();
}

json report_json(const TargetDensity& target, const RunConfig& run, const RunRecord& record,
                 const EssReport& ess, double runtime_seconds) {
  json j;
  j["target"] = target.name;
  j["kernel"] = kernel_name(run.kernel);
  j["chains"] = record.chains;
  j["n_sample"] = record.n_sample;
  j["seed"] = run.seed;
  j["ess"] = {
      {"per_coordinate", ess.per_coordinate_ess},
      {"min_ess", ess.min_ess},
      {"min_coordinate", ess.min_coordinate},
      {"ess_per_grad", ess.ess_per_grad},
      {"ess_per_iter", ess.ess_per_iter},
      {"n_draws", ess.n_draws},
      {"autocorr_curve", ess.autocorr_curve},
  };
  j["gradient_evals"] = {
      {"total", record.total_gradient_evals},
      {"sampling", record.sampling_gradient_evals},
  };
  j["frozen"] = {
      {"step", record.frozen.step},
      {"length", record.frozen.length},
      {"damping", record.frozen.damping},
      {"mass_diag", record.frozen.mass_diag},
  };
  j["runtime_seconds"] = runtime_seconds;
  return j;
}

RunRecord dispatch_run(const TargetDensity& target, const RunConfig& run) {
  return run.kernel == KernelKind::malt ? run_adaptive(target, run)
                                        : run_baseline(target, run);
}

struct MethodSetup {
  std::string name;
  KernelKind kernel;
  RhoMode rho;
};

MethodSetup method_setup(const std::string& name) {
  if (name == "malt-adaptive") return {name, KernelKind::malt, RhoMode::adaptive};
  if (name == "malt-rho1") return {name, KernelKind::malt, RhoMode::fixed_one};
  if (name == "hmc") return {name, KernelKind::hmc, RhoMode::fixed_one};
  if (name == "rhmc-uniform") return {name, KernelKind::rhmc_uniform, RhoMode::fixed_one};
  if (name == "rhmc-exponential")
    return {name, KernelKind::rhmc_exponential, RhoMode::fixed_one};
  throw ConfigError("unknown bench method '" + name + "'");
}

// Bootstrap SEM of the 10th percentile across repeats.
double bootstrap_sem_p10(const std::vector<double>& values, std::uint64_t seed) {
  constexpr int kResamples = 500;
  Rng rng = Rng::stream(seed, 0xb00f, 0);
  std::vector<double> stats(kResamples);
  std::vector<double> resample(values.size());
  for (int b = 0; b < kResamples; ++b) {
    for (auto& v : resample) {
      const auto idx = static_cast<std::size_t>(rng.next_u64() % values.size());
      v = values[idx];
    }
    stats[static_cast<std::size_t>(b)] = percentile(resample, 10.0);
  }
  const double mean = pairwise_mean(stats);
  double acc = 0.0;
  for (double s : stats) acc += (s - mean) * (s - mean);
  return std::sqrt(acc / (kResamples - 1));
}

}  // namespace

int run_command(const ExperimentConfig& config, bool quiet) {
  try {
    const auto start = std::chrono::steady_clock::now();
    const TargetDensity target = make_target(config.target);
    RunConfig run = config.run;
    run.store_draws = true;
    const RunRecord record = dispatch_run(target, run);
    const EssReport ess = min_ess_squared_coords(record, target);
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path dir(config.output.dir);
    atomic_write(dir / "trace.csv", trace_csv(record));
    if (config.output.draws) atomic_write(dir / "draws.csv", draws_csv(record));
    atomic_write(dir / "report.json",
                 report_json(target, run, record, ess, runtime).dump(2) + "\n");
    {
      std::ostringstream os;
      write_ess_csv(os, ess);
      atomic_write(dir / "ess.csv", os.str());
    }
    {
      std::ostringstream os;
      write_ess_jsonl(os, ess);
      atomic_write(dir / "ess.jsonl", os.str());
    }
    if (!quiet) {
      std::cout << target.name << " [" << kernel_name(run.kernel) << "] min ESS "
                << ess.min_ess << " (per grad " << ess.ess_per_grad << ", per iter "
                << ess.ess_per_iter << "), " << runtime << " s\n";
    }
    return 0;
  } catch (const TunerDivergence& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
}

int sweep_command(const ExperimentConfig& config, bool quiet) {
  if (!config.sweep) {
    std::cerr << "config error: sweep requires a [sweep] section\n";
    return 1;
  }
  try {
    const TargetDensity target = make_target(config.target);
    const SweepConfig& sweep = *config.sweep;

    std::ostringstream os;
    os << "tau,gamma,steps,clamped,repeats,min_ess_per_grad,min_ess_per_iter\n";
    for (double tau : sweep.tau_grid) {
      for (double gamma : sweep.gamma_grid) {
        std::vector<double> per_grad, per_iter;
        for (int r = 0; r < sweep.repeats; ++r) {
          RunConfig run = config.run;
          run.kernel = KernelKind::malt;
          run.n_adapt = 0;
          run.n_clip = 0;
          run.damping_mode = DampingMode::fixed;
          run.damping_value = gamma;
          run.init_step = sweep.step;
          run.init_length = tau;
          run.seed = config.run.seed + static_cast<std::uint64_t>(r);
          run.store_draws = true;
          const RunRecord record = run_adaptive(target, run);
          const EssReport ess = min_ess_squared_coords(record, target);
          per_grad.push_back(ess.ess_per_grad);
          per_iter.push_back(ess.ess_per_iter);
        }
        const long steps = static_cast<long>(std::ceil(std::max(tau, sweep.step) / sweep.step));
        const bool clamped = tau < sweep.step;
        os << fmt(tau) << ',' << fmt(gamma) << ',' << steps << ',' << (clamped ? 1 : 0) << ','
           << sweep.repeats << ',' << fmt(pairwise_mean(per_grad)) << ','
           << fmt(pairwise_mean(per_iter)) << '\n';
        if (!quiet) {
          std::cout << "cell tau=" << tau << " gamma=" << gamma
                    << " min ESS/grad=" << pairwise_mean(per_grad) << "\n";
        }
      }
    }
    atomic_write(fs::path(config.output.dir) / "surface.csv", os.str());
    return 0;
  } catch (const TunerDivergence& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
}

int bench_command(const ExperimentConfig& config, bool quiet) {
  if (!config.bench) {
    std::cerr << "config error: bench requires a [bench] section\n";
    return 1;
  }
  try {
    const TargetDensity target = make_target(config.target);
    const BenchConfig& bench = *config.bench;

    struct MethodResult {
      std::string name;
      std::vector<double> per_grad, per_iter;
    };
    std::vector<MethodResult> results;

    std::ostringstream raw;
    raw << "row,method,seed,min_ess,min_ess_per_grad,min_ess_per_iter,p10_ess_per_grad,"
           "p10_ess_per_iter,sem_ess_per_grad,sem_ess_per_iter,norm_ess_per_grad,"
           "norm_ess_per_iter\n";
    for (const auto& name : bench.methods) {
      const MethodSetup setup = method_setup(name);
      MethodResult res{name, {}, {}};
      for (int r = 0; r < bench.repeats; ++r) {
        RunConfig run = config.run;
        run.kernel = setup.kernel;
        run.rho_mode = setup.rho;
        run.seed = config.run.seed + static_cast<std::uint64_t>(r);
        run.store_draws = true;
        const RunRecord record = dispatch_run(target, run);
        const EssReport ess = min_ess_squared_coords(record, target);
        res.per_grad.push_back(ess.ess_per_grad);
        res.per_iter.push_back(ess.ess_per_iter);
        raw << "raw," << name << ',' << run.seed << ',' << fmt(ess.min_ess) << ','
            << fmt(ess.ess_per_grad) << ',' << fmt(ess.ess_per_iter) << ",,,,,,\n";
        if (!quiet) {
          std::cout << name << " seed " << run.seed << ": min ESS/grad " << ess.ess_per_grad
                    << "\n";
        }
      }
      results.push_back(std::move(res));
    }

    // Normalization baseline: malt-rho1 when present, else the first method.
    std::size_t base = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].name == "malt-rho1") base = i;
    }
    const double base_grad = percentile(results[base].per_grad, 10.0);
    const double base_iter = percentile(results[base].per_iter, 10.0);

    for (const auto& res : results) {
      const double p10_grad = percentile(res.per_grad, 10.0);
      const double p10_iter = percentile(res.per_iter, 10.0);
      raw << "summary," << res.name << ",,,,," << fmt(p10_grad) << ','
          << fmt(p10_iter) << ',' << fmt(bootstrap_sem_p10(res.per_grad, config.run.seed))
          << ',' << fmt(bootstrap_sem_p10(res.per_iter, config.run.seed ^ 1)) << ','
          << fmt(base_grad > 0.0 ? p10_grad / base_grad : 0.0) << ','
          << fmt(base_iter > 0.0 ? p10_iter / base_iter : 0.0) << '\n';
    }
    atomic_write(fs::path(config.output.dir) / "bench.csv", raw.str());
    return 0;
  } catch (const TunerDivergence& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

int file_command(const std::string& config_path, const std::optional<std::string>& out_dir,
                 const std::optional<std::uint64_t>& seed, bool quiet,
                 int (*command)(const ExperimentConfig&, bool)) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (out_dir) config.output.dir = *out_dir;
  if (seed) config.run.seed = *seed;
  return command(config, quiet);
}

}  // namespace

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir,
            const std::optional<std::uint64_t>& seed, bool quiet) {
  return file_command(config_path, out_dir, seed, quiet, run_command);
}

int cmd_sweep(const std::string& config_path, const std::optional<std::string>& out_dir,
              const std::optional<std::uint64_t>& seed, bool quiet) {
  return file_command(config_path, out_dir, seed, quiet, sweep_command);
}

int cmd_bench(const std::string& config_path, const std::optional<std::string>& out_dir,
              const std::optional<std::uint64_t>& seed, bool quiet) {
  return file_command(config_path, out_dir, seed, quiet, bench_command);
}

}  // namespace malt
