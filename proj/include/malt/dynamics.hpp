#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "malt/rng.hpp"
#include "malt/target.hpp"

namespace malt {

// Diagonal mass matrix with cached square roots and inverses.
class MassDiag {
 public:
  explicit MassDiag(std::vector<double> entries);
  static MassDiag identity(int dim);

  int dim() const { return static_cast<int>(entries_.size()); }
  std::span<const double> entries() const { return entries_; }
  double entry(std::size_t i) const { return entries_[i]; }
  double sqrt_entry(std::size_t i) const { return sqrt_entries_[i]; }
  double inv_entry(std::size_t i) const { return inv_entries_[i]; }

  // |v|^2_{M^-1} = sum v_i^2 / M_ii
  double inv_norm_sq(std::span<const double> v) const;

 private:
  std::vector<double> entries_, sqrt_entries_, inv_entries_;
};

// One trajectory kernel's tunables: mass M, damping gamma, step h, length tau.
struct KernelParams {
  MassDiag mass;
  double damping = 0.0;  // gamma >= 0
  double step = 0.1;     // h > 0
  double length = 1.0;   // tau > 0

  // L = ceil(tau / h), at least 1.
  long leapfrog_steps() const {
    const long L = static_cast<long>(std::ceil(length / step));
    return L < 1 ? 1 : L;
  }
  // eta = exp(-gamma h), the per-step momentum retention.
  double momentum_retention() const { return std::exp(-damping * step); }
};

// Everything one trajectory hands back: the accepted point, both endpoint
// states for the trajectory-length gradient estimators, and the energy-error
// bookkeeping.
struct TrajectoryOutcome {
  std::vector<double> accepted_position;  // X' (equals start on rejection)
  std::vector<double> end_velocity;       // v_L of the proposed trajectory
  std::vector<double> start_position;     // x_0
  std::vector<double> start_velocity;     // v_0', the first refreshed velocity
  double delta = 0.0;                     // accumulated energy error
  bool accepted = false;
  std::vector<double> per_step_deltas;    // full per-step energy errors
  long gradient_evals = 0;

  bool divergent() const { return std::isinf(delta); }
};

struct LeapfrogResult {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> gradient;  // of the potential at the new position
  bool finite = true;
};

// One leapfrog step:
//   v_half = v0 - (h/2) grad(x0)
//   x1     = x0 + h M^-1 v_half
//   v1     = v_half - (h/2) grad(x1)
// grad_x0 must be the gradient at x0; passing it in keeps the cost at one
// fresh gradient evaluation per step. finite == false signals a non-finite
// state; the caller treats the trajectory as rejected.
LeapfrogResult leapfrog(std::span<const double> x0, std::span<const double> v0,
                        const TargetDensity& target, const MassDiag& mass, double step,
                        std::span<const double> grad_x0);

// v' = eta v + sqrt(1 - eta^2) xi with xi ~ N(0, M). Always consumes exactly
// d normal variates, even at eta == 1, so stream positions stay aligned
// across kernels.
std::vector<double> partial_refresh(std::span<const double> v, double eta,
                                    const MassDiag& mass, Rng& rng);

// One MALT trajectory: full velocity refresh, L partially-refreshed leapfrog
// steps with the energy error accumulated per step, then a single accept test
// Z >= Delta with Z ~ Exp(1). Ties accept. Non-finite states reject with
// delta = +infinity and leave the chain in place.
TrajectoryOutcome malt_step(std::span<const double> x, const TargetDensity& target,
                            const KernelParams& params, Rng& rng);

// Fixed-length HMC: malt_step with eta forced to 1. Bit-identical to
// malt_step at damping == 0 on a shared stream.
TrajectoryOutcome hmc_step(std::span<const double> x, const TargetDensity& target,
                           const KernelParams& params, Rng& rng);

enum class Jitter { uniform, exponential };

// Draws tau' ~ Uniform(0, 2 tau] or Exp(mean tau), clamps tau' >= h.
double draw_jitter(double mean_length, double step, Jitter jitter, Rng& rng);

// HMC with a trajectory length drawn fresh from the jitter distribution
// (params.length is the mean). Multi-chain drivers that share one jitter draw
// per iteration should draw it themselves and call hmc_step.
TrajectoryOutcome rhmc_step(std::span<const double> x, const TargetDensity& target,
                            const KernelParams& params, Jitter jitter, Rng& rng);

}  // namespace malt
