#include "malt/dynamics.hpp"

#include <limits>
#include <stdexcept>

#include "malt/util.hpp"

namespace malt {

MassDiag::MassDiag(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("MassDiag: empty diagonal");
  sqrt_entries_.resize(entries_.size());
  inv_entries_.resize(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!(entries_[i] > 0.0) || !std::isfinite(entries_[i]))
      throw std::invalid_argument("MassDiag: entries must be positive and finite");
    sqrt_entries_[i] = std::sqrt(entries_[i]);
    inv_entries_[i] = 1.0 / entries_[i];
  }
}

MassDiag MassDiag::identity(int dim) {
  return MassDiag(std::vector<double>(static_cast<std::size_t>(dim), 1.0));
}

double MassDiag::inv_norm_sq(std::span<const double> v) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * v[i] * inv_entries_[i];
  return acc;
}

LeapfrogResult leapfrog(std::span<const double> x0, std::span<const double> v0,
                        const TargetDensity& target, const MassDiag& mass, double step,
                        std::span<const double> grad_x0) {
  const std::size_t d = x0.size();
  LeapfrogResult out;
  out.position.resize(d);
  out.velocity.resize(d);
  out.gradient.resize(d);

  for (std::size_t i = 0; i < d; ++i) {
    const double v_half = v0[i] - 0.5 * step * grad_x0[i];
    out.velocity[i] = v_half;
    out.position[i] = x0[i] + step * mass.inv_entry(i) * v_half;
  }
  if (!all_finite(out.position)) {
    out.finite = false;
    return out;
  }
  target.gradient(out.position, out.gradient);
  if (!all_finite(out.gradient)) {
    out.finite = false;
    return out;
  }
  for (std::size_t i = 0; i < d; ++i) out.velocity[i] -= 0.5 * step * out.gradient[i];
  out.finite = all_finite(out.velocity);
  return out;
}

std::vector<double> partial_refresh(std::span<const double> v, double eta,
                                    const MassDiag& mass, Rng& rng) {
  const double noise_scale = std::sqrt(std::max(0.0, 1.0 - eta * eta));
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = eta * v[i] + noise_scale * mass.sqrt_entry(i) * rng.normal();
  }
  return out;
}

namespace {

TrajectoryOutcome run_trajectory(std::span<const double> x, const TargetDensity& target,
                                 const KernelParams& params, double eta, Rng& rng) {
  const std::size_t d = x.size();
  const long steps = params.leapfrog_steps();

  TrajectoryOutcome out;
  out.start_position.assign(x.begin(), x.end());
  out.per_step_deltas.reserve(static_cast<std::size_t>(steps));

  // v_0 ~ N(0, M), the full refresh that erases momentum flips.
  std::vector<double> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = params.mass.sqrt_entry(i) * rng.normal();

  auto diverge = [&](std::vector<double> last_velocity) {
    out.delta = std::numeric_limits<double>::infinity();
    out.accepted = false;
    out.accepted_position = out.start_position;
    if (out.start_velocity.empty()) out.start_velocity = last_velocity;
    out.end_velocity = std::move(last_velocity);
    return out;
  };

  std::vector<double> grad(d);
  target.gradient(x, grad);
  out.gradient_evals = 1;
  const double pot0 = target.potential(x);
  if (!all_finite(grad) || !std::isfinite(pot0)) return diverge(std::move(v));

  std::vector<double> pos(x.begin(), x.end());
  double kinetic_delta = 0.0;
  double pot_prev = pot0;
  double pot_end = pot0;

  for (long i = 1; i <= steps; ++i) {
    std::vector<double> v_refreshed = partial_refresh(v, eta, params.mass, rng);
    if (i == 1) out.start_velocity = v_refreshed;
    const double kin_before = 0.5 * params.mass.inv_norm_sq(v_refreshed);

    LeapfrogResult lf = leapfrog(pos, v_refreshed, target, params.mass, params.step, grad);
    ++out.gradient_evals;
    if (!lf.finite) return diverge(std::move(v_refreshed));

    const double kin_after = 0.5 * params.mass.inv_norm_sq(lf.velocity);
    const double pot_here = target.potential(lf.position);
    if (!std::isfinite(pot_here) || !std::isfinite(kin_after))
      return diverge(std::move(lf.velocity));

    kinetic_delta += kin_after - kin_before;
    out.per_step_deltas.push_back((pot_here - pot_prev) + (kin_after - kin_before));
    pot_prev = pot_here;
    pot_end = pot_here;

    pos = std::move(lf.position);
    v = std::move(lf.velocity);
    grad = std::move(lf.gradient);
  }

  out.delta = kinetic_delta + (pot_end - pot0);
  out.end_velocity = std::move(v);
  const double z = rng.exponential();
  out.accepted = !(z < out.delta);
  out.accepted_position = out.accepted ? std::move(pos) : out.start_position;
  return out;
}

}  // namespace

TrajectoryOutcome malt_step(std::span<const double> x, const TargetDensity& target,
                            const KernelParams& params, Rng& rng) {
  return run_trajectory(x, target, params, params.momentum_retention(), rng);
}

TrajectoryOutcome hmc_step(std::span<const double> x, const TargetDensity& target,
                           const KernelParams& params, Rng& rng) {
  return run_trajectory(x, target, params, 1.0, rng);
}

double draw_jitter(double mean_length, double step, Jitter jitter, Rng& rng) {
  double drawn = 0.0;
  switch (jitter) {
    case Jitter::uniform:
      drawn = 2.0 * mean_length * rng.uniform();
      break;
    case Jitter::exponential:
      drawn = mean_length * rng.exponential();
      break;
  }
  // A proposal shorter than one step is undefined; clamp so L >= 1.
  return std::max(drawn, step);
}

TrajectoryOutcome rhmc_step(std::span<const double> x, const TargetDensity& target,
                            const KernelParams& params, Jitter jitter, Rng& rng) {
  KernelParams realized = params;
  realized.length = draw_jitter(params.length, params.step, jitter, rng);
  return hmc_step(x, target, realized, rng);
}

}  // namespace malt
