#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "malt/adaptation.hpp"
#include "malt/dynamics.hpp"
#include "malt/target.hpp"

namespace malt {

enum class KernelKind { malt, hmc, rhmc_uniform, rhmc_exponential };
enum class RhoMode { adaptive, fixed_one };
enum class DampingMode { adaptive, fixed };
enum class AcceptMean { arithmetic, harmonic };

struct RunConfig {
  int chains = 4;
  long n_adapt = 5000;
  long n_clip = 100;
  long n_postadapt_warmup = 400;
  long n_sample = 1600;
  std::uint64_t seed = 1;
  KernelKind kernel = KernelKind::malt;
  RhoMode rho_mode = RhoMode::adaptive;

  // Damping is normally recomputed from the CCIPCA eigenvalue each iteration;
  // fixed mode pins it (fixed at 0 reproduces HMC exactly).
  DampingMode damping_mode = DampingMode::adaptive;
  double damping_value = 0.0;

  AdamConfig adam;
  AmnesiaSchedule schedule;
  double alpha_star = 0.8;
  AcceptMean accept_mean = AcceptMean::arithmetic;
  double damping_fallback = 1.0;
  double variance_floor = 1e-10;  // relative floor applied before the mass

  // 0 means the scale-aware default h0 = 0.5 d^{-1/4}; tau0 defaults to h0.
  double init_step = 0.0;
  double init_length = 0.0;
  double max_length_factor = 1e6;  // tau clamped to [h, factor * h]

  int threads = 1;
  bool store_draws = true;
};

struct ChainEnsemble {
  int dim = 0;
  int chains = 0;
  std::uint64_t seed = 0;
  std::vector<double> positions;  // K x d row-major
  long iteration = 0;

  std::span<double> chain(int k) {
    return std::span<double>(positions).subspan(static_cast<std::size_t>(k) * dim,
                                                static_cast<std::size_t>(dim));
  }
  std::span<const double> chain(int k) const {
    return std::span<const double>(positions).subspan(static_cast<std::size_t>(k) * dim,
                                                      static_cast<std::size_t>(dim));
  }
};

// Per-iteration adaptation snapshot: the kernel parameters in force when the
// K trajectories ran, plus the tuning signals they produced.
struct IterationTrace {
  double step = 0.0;
  double length = 0.0;
  double damping = 0.0;
  double lambda_hat = 0.0;
  double rho = 0.0;
  double accept_prob = 0.0;  // cross-chain mean of exp(-Delta+)
  double g_step = 0.0;
  double g_length = 0.0;
};

struct FrozenParams {
  std::vector<double> mass_diag;
  double damping = 0.0;
  double step = 0.0;
  double length = 0.0;
};

struct RunRecord {
  int dim = 0;
  int chains = 0;
  long n_sample = 0;
  std::vector<IterationTrace> adapt_trace;
  FrozenParams frozen;
  OnlineMoments final_moments;
  // Sampling-phase draws, [iteration][chain][coordinate] row-major; empty
  // when store_draws is off.
  std::vector<double> draws;
  // Per-chain energy errors of the sampling phase, [iteration][chain].
  std::vector<double> sampling_deltas;
  // Trajectory length actually run each iteration (all phases, in order).
  // For RHMC this is the jitter draw shared by every chain that iteration.
  std::vector<double> realized_lengths;
  long total_gradient_evals = 0;
  long sampling_gradient_evals = 0;

  double draw(long t, int k, int j) const {
    return draws[(static_cast<std::size_t>(t) * chains + k) * dim + j];
  }
};

// Thrown when the tuner state stops being finite; carries a snapshot for
// diagnosis.
struct TunerDivergence : std::runtime_error {
  explicit TunerDivergence(std::string what) : std::runtime_error(std::move(what)) {}
};

// Overdispersed Gaussian initialization, N(0, init_scale^2 I), one splittable
// stream per chain. Deterministic in the seed.
ChainEnsemble initialize_chains(const TargetDensity& target, const RunConfig& config);

// The full adaptive schedule: n_adapt tuning iterations (tau pinned to h for
// the first n_clip), then parameters freeze for n_postadapt_warmup + n_sample
// fixed-kernel iterations, collecting draws in the last phase. Requires
// kernel == malt.
RunRecord run_adaptive(const TargetDensity& target, const RunConfig& config);

// Same loop with an HMC or RHMC kernel; RHMC shares one jitter draw across
// chains per iteration. Requires kernel != malt.
RunRecord run_baseline(const TargetDensity& target, const RunConfig& config);

}  // namespace malt
