#include "malt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "malt/rng.hpp"
#include "malt/util.hpp"

namespace malt {

namespace {

// Stream id reserved for the per-iteration jitter draw RHMC shares across
// chains; chain streams use ids 0..K-1.
constexpr std::uint64_t kJitterStream = 0xffffffffffffffffULL;

void validate(const TargetDensity& target, const RunConfig& cfg) {
  if (target.dim < 1) throw std::invalid_argument("run: target dim must be >= 1");
  if (cfg.chains < 1) throw std::invalid_argument("run: chains must be >= 1");
  if (cfg.n_adapt < 0 || cfg.n_clip < 0 || cfg.n_postadapt_warmup < 0 || cfg.n_sample < 0)
    throw std::invalid_argument("run: iteration counts must be >= 0");
  if (cfg.n_clip > cfg.n_adapt) throw std::invalid_argument("run: n_clip must be <= n_adapt");
  if (cfg.init_step < 0.0 || cfg.init_length < 0.0)
    throw std::invalid_argument("run: initial step/length must be >= 0");
}

double mean_acceptance(std::span<const double> accept, AcceptMean mode) {
  if (mode == AcceptMean::arithmetic) return pairwise_mean(accept);
  std::vector<double> inv(accept.size());
  for (std::size_t k = 0; k < accept.size(); ++k) {
    if (!(accept[k] > 0.0)) return 0.0;
    inv[k] = 1.0 / accept[k];
  }
  return static_cast<double>(accept.size()) / pairwise_sum(inv);
}

struct IterationScratch {
  std::vector<double> accept;    // exp(-Delta_k+)
  std::vector<double> g_length;  // per-chain trajectory gradients
  std::vector<double> c_value;   // per-chain lag products
  std::vector<double> delta;     // raw Delta_k
  std::vector<long> grads;
};

class Runner {
 public:
  Runner(const TargetDensity& target, const RunConfig& cfg)
      : target_(target), cfg_(cfg), d_(static_cast<std::size_t>(target.dim)) {
    validate(target, cfg);
    const double h0 = cfg.init_step > 0.0
                          ? cfg.init_step
                          : 0.5 * std::pow(static_cast<double>(target.dim), -0.25);
    const double tau0 = cfg.init_length > 0.0 ? cfg.init_length : h0;
    adam_step_.theta = std::log(h0);
    adam_length_.theta = std::log(tau0);
    moments_ = OnlineMoments::initial(target.dim);
    ensemble_ = initialize_chains(target, cfg);
  }

  RunRecord run() {
    RunRecord record;
    record.dim = target_.dim;
    record.chains = cfg_.chains;
    record.n_sample = cfg_.n_sample;
    record.adapt_trace.reserve(static_cast<std::size_t>(cfg_.n_adapt));

    IterationScratch scratch;
    const auto chains = static_cast<std::size_t>(cfg_.chains);
    scratch.accept.resize(chains);
    scratch.g_length.resize(chains);
    scratch.c_value.resize(chains);
    scratch.delta.resize(chains);
    scratch.grads.resize(chains);

    for (long n = 1; n <= cfg_.n_adapt; ++n) {
      record.adapt_trace.push_back(adapt_iteration(n, scratch, record));
      check_tuner_finite(n);
    }

    // Freeze the kernel exactly as the next iteration would have built it.
    const MassDiag mass = compute_mass(moments_.var, cfg_.variance_floor);
    const double gamma = current_damping();
    const double h = std::exp(adam_step_.theta);
    const double tau = clamp_length(std::exp(adam_length_.theta), h);
    record.frozen.mass_diag.assign(mass.entries().begin(), mass.entries().end());
    record.frozen.damping = gamma;
    record.frozen.step = h;
    record.frozen.length = tau;
    record.final_moments = moments_;

    KernelParams params{mass, gamma, h, tau};
    if (cfg_.store_draws) {
      record.draws.reserve(static_cast<std::size_t>(cfg_.n_sample) * chains * d_);
      record.sampling_deltas.reserve(static_cast<std::size_t>(cfg_.n_sample) * chains);
    }

    for (long t = 1; t <= cfg_.n_postadapt_warmup + cfg_.n_sample; ++t) {
      const long n = cfg_.n_adapt + t;
      const bool sampling = t > cfg_.n_postadapt_warmup;
      frozen_iteration(n, params, sampling, scratch, record);
    }
    return record;
  }

 private:
  double current_damping() const {
    if (cfg_.kernel != KernelKind::malt) return 0.0;  // eta == 1 for (R)HMC
    if (cfg_.damping_mode == DampingMode::fixed) return cfg_.damping_value;
    return compute_damping(moments_.pca_vector, cfg_.damping_fallback);
  }

  double clamp_length(double tau, double h) const {
    return std::clamp(tau, h, cfg_.max_length_factor * h);
  }

  // Realized trajectory length for this iteration; RHMC draws one shared
  // jitter per iteration so every chain runs the same number of steps.
  double realized_length(long n, const KernelParams& params) const {
    switch (cfg_.kernel) {
      case KernelKind::rhmc_uniform: {
        Rng rng = Rng::stream(cfg_.seed, kJitterStream, static_cast<std::uint64_t>(n));
        return draw_jitter(params.length, params.step, Jitter::uniform, rng);
      }
      case KernelKind::rhmc_exponential: {
        Rng rng = Rng::stream(cfg_.seed, kJitterStream, static_cast<std::uint64_t>(n));
        return draw_jitter(params.length, params.step, Jitter::exponential, rng);
      }
      default:
        return params.length;
    }
  }

  TrajectoryOutcome kernel_step(std::span<const double> x, const KernelParams& params,
                                Rng& rng) const {
    if (cfg_.kernel == KernelKind::malt) return malt_step(x, target_, params, rng);
    return hmc_step(x, target_, params, rng);
  }

  IterationTrace adapt_iteration(long n, IterationScratch& scratch, RunRecord& record) {
    const MassDiag mass = compute_mass(moments_.var, cfg_.variance_floor);
    const double lambda_hat = moments_.lambda_hat();
    const double gamma = current_damping();
    const double h = std::exp(adam_step_.theta);
    if (!(h > 0.0) || !std::isfinite(h)) {
      std::ostringstream oss;
      oss << "step size left (0, inf) at iteration " << n << ": log_h=" << adam_step_.theta;
      throw TunerDivergence(oss.str());
    }
    double tau = clamp_length(std::exp(adam_length_.theta), h);
    if (n <= cfg_.n_clip) tau = h;  // MALA-like warm start
    const double rho = cfg_.rho_mode == RhoMode::fixed_one
                           ? 1.0
                           : compute_rho(moments_.lag_cov, moments_.proj_var);
    const OnlineMoments frame = moments_.with_axis_fallback();

    KernelParams params{mass, gamma, h, tau};
    KernelParams realized = params;
    realized.length = realized_length(n, params);
    record.realized_lengths.push_back(realized.length);

    parallel_for(cfg_.chains, cfg_.threads, [&](int k) {
      Rng rng = Rng::stream(cfg_.seed, static_cast<std::uint64_t>(k),
                            static_cast<std::uint64_t>(n));
      const TrajectoryOutcome out = kernel_step(ensemble_.chain(k), realized, rng);
      const auto ku = static_cast<std::size_t>(k);
      scratch.accept[ku] = std::exp(-std::max(0.0, out.delta));
      scratch.delta[ku] = out.delta;
      scratch.grads[ku] = out.gradient_evals;
      if (out.divergent()) {
        scratch.g_length[ku] = 0.0;
      } else {
        scratch.g_length[ku] =
            trajectory_gradient(out.accepted_position, out.end_velocity, out.start_position,
                                out.start_velocity, rho, tau, frame, mass);
      }
      const double phi_end = phi(out.accepted_position, frame, mass);
      const double phi_start = phi(out.start_position, frame, mass);
      scratch.c_value[ku] =
          (phi_end - moments_.proj_mean) * (phi_start - moments_.proj_mean);
      std::copy(out.accepted_position.begin(), out.accepted_position.end(),
                ensemble_.chain(k).begin());
    });
    ensemble_.iteration = n;
    for (long g : scratch.grads) record.total_gradient_evals += g;

    const double accept = mean_acceptance(scratch.accept, cfg_.accept_mean);
    const double g_step = accept - cfg_.alpha_star;
    const double g_length = pairwise_mean(scratch.g_length);
    adam_step_ = adam_update(adam_step_, g_step, cfg_.adam);
    adam_length_ = adam_update(adam_length_, g_length, cfg_.adam);
    moments_ = online_update(moments_, cfg_.schedule, ensemble_.positions, scratch.c_value,
                             mass, n);

    IterationTrace trace;
    trace.step = h;
    trace.length = tau;
    trace.damping = gamma;
    trace.lambda_hat = lambda_hat;
    trace.rho = rho;
    trace.accept_prob = accept;
    trace.g_step = g_step;
    trace.g_length = g_length;
    return trace;
  }

  void frozen_iteration(long n, const KernelParams& params, bool sampling,
                        IterationScratch& scratch, RunRecord& record) {
    KernelParams realized = params;
    realized.length = realized_length(n, params);
    record.realized_lengths.push_back(realized.length);
    parallel_for(cfg_.chains, cfg_.threads, [&](int k) {
      Rng rng = Rng::stream(cfg_.seed, static_cast<std::uint64_t>(k),
                            static_cast<std::uint64_t>(n));
      const TrajectoryOutcome out = kernel_step(ensemble_.chain(k), realized, rng);
      const auto ku = static_cast<std::size_t>(k);
      scratch.delta[ku] = out.delta;
      scratch.grads[ku] = out.gradient_evals;
      std::copy(out.accepted_position.begin(), out.accepted_position.end(),
                ensemble_.chain(k).begin());
    });
    ensemble_.iteration = n;
    for (long g : scratch.grads) {
      record.total_gradient_evals += g;
      if (sampling) record.sampling_gradient_evals += g;
    }
    if (sampling && cfg_.store_draws) {
      record.draws.insert(record.draws.end(), ensemble_.positions.begin(),
                          ensemble_.positions.end());
      record.sampling_deltas.insert(record.sampling_deltas.end(), scratch.delta.begin(),
                                    scratch.delta.end());
    }
  }

  void check_tuner_finite(long n) const {
    const bool ok = std::isfinite(adam_step_.theta) && std::isfinite(adam_length_.theta) &&
                    all_finite(moments_.mean) && all_finite(moments_.var) &&
                    all_finite(moments_.pca_vector) && std::isfinite(moments_.proj_mean) &&
                    std::isfinite(moments_.proj_var) && std::isfinite(moments_.lag_cov);
    if (ok) return;
    std::ostringstream oss;
    oss << "tuner state non-finite at iteration " << n << ": log_h=" << adam_step_.theta
        << " log_tau=" << adam_length_.theta << " lambda_hat=" << moments_.lambda_hat()
        << " m2=" << moments_.proj_mean << " s2=" << moments_.proj_var
        << " c=" << moments_.lag_cov;
    throw TunerDivergence(oss.str());
  }

  const TargetDensity& target_;
  const RunConfig& cfg_;
  std::size_t d_;
  AdamState adam_step_;
  AdamState adam_length_;
  OnlineMoments moments_;
  ChainEnsemble ensemble_;
};

}  // namespace

ChainEnsemble initialize_chains(const TargetDensity& target, const RunConfig& config) {
  validate(target, config);
  ChainEnsemble ens;
  ens.dim = target.dim;
  ens.chains = config.chains;
  ens.seed = config.seed;
  ens.positions.resize(static_cast<std::size_t>(config.chains) * target.dim);
  for (int k = 0; k < config.chains; ++k) {
    Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(k), 0);
    auto x = ens.chain(k);
    for (double& xi : x) xi = target.init_scale * rng.normal();
  }
  return ens;
}

RunRecord run_adaptive(const TargetDensity& target, const RunConfig& config) {
  if (config.kernel != KernelKind::malt)
    throw std::invalid_argument("run_adaptive: kernel must be malt (use run_baseline)");
  return Runner(target, config).run();
}

RunRecord run_baseline(const TargetDensity& target, const RunConfig& config) {
  if (config.kernel == KernelKind::malt)
    throw std::invalid_argument("run_baseline: kernel must be hmc or rhmc-*");
  return Runner(target, config).run();
}

}  // namespace malt
