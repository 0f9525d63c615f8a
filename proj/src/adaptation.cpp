#include "malt/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "malt/util.hpp"

namespace malt {

AdamState adam_update(const AdamState& state, double g, const AdamConfig& cfg) {
  AdamState next;
  next.n = state.n + 1;
  next.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g;
  next.s = cfg.beta2 * state.s + (1.0 - cfg.beta2) * g * g;
  const double m_hat = next.m / (1.0 - std::pow(cfg.beta1, static_cast<double>(next.n)));
  const double s_hat = next.s / (1.0 - std::pow(cfg.beta2, static_cast<double>(next.n)));
  next.theta = state.theta + cfg.learning_rate * m_hat / (std::sqrt(s_hat) + cfg.epsilon);
  return next;
}

double step_size_gradient(double delta, double alpha_star) {
  return std::exp(-std::max(0.0, delta)) - alpha_star;
}

OnlineMoments OnlineMoments::initial(int dim) {
  OnlineMoments m;
  m.mean.assign(static_cast<std::size_t>(dim), 0.0);
  m.var.assign(static_cast<std::size_t>(dim), 1.0);
  m.pca_vector.assign(static_cast<std::size_t>(dim), 0.0);
  return m;
}

double OnlineMoments::lambda_hat() const {
  double acc = 0.0;
  for (double w : pca_vector) acc += w * w;
  return std::sqrt(acc);
}

std::vector<double> OnlineMoments::principal_axis_or(std::span<const double> fallback) const {
  const double norm = lambda_hat();
  if (norm > 0.0) {
    std::vector<double> z(pca_vector.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = pca_vector[i] / norm;
    return z;
  }
  return std::vector<double>(fallback.begin(), fallback.end());
}

OnlineMoments OnlineMoments::with_axis_fallback() const {
  if (lambda_hat() > 0.0) return *this;
  OnlineMoments out = *this;
  out.pca_vector.assign(pca_vector.size(), 0.0);
  out.pca_vector[0] = 1.0;
  return out;
}

namespace {

// z^T M^{1/2} (x - m), the scalar projection both phi and its gradient share.
double axis_projection(std::span<const double> x, const OnlineMoments& moments,
                       const MassDiag& mass) {
  const double norm = moments.lambda_hat();
  if (!(norm > 0.0)) throw std::domain_error("phi: principal axis undefined (|w| == 0)");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += (moments.pca_vector[i] / norm) * mass.sqrt_entry(i) * (x[i] - moments.mean[i]);
  }
  return acc;
}

}  // namespace

double phi(std::span<const double> x, const OnlineMoments& moments, const MassDiag& mass) {
  const double p = axis_projection(x, moments, mass);
  return p * p;
}

std::vector<double> phi_grad(std::span<const double> x, const OnlineMoments& moments,
                             const MassDiag& mass) {
  const double p = axis_projection(x, moments, mass);
  const double norm = moments.lambda_hat();
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    g[i] = 2.0 * p * mass.sqrt_entry(i) * (moments.pca_vector[i] / norm);
  }
  return g;
}

double esjd_grad_forward(std::span<const double> x_end, std::span<const double> x_start,
                         std::span<const double> v_end, const OnlineMoments& moments,
                         const MassDiag& mass) {
  const std::vector<double> grad_end = phi_grad(x_end, moments, mass);
  double along = 0.0;
  for (std::size_t i = 0; i < v_end.size(); ++i) {
    along += grad_end[i] * mass.inv_entry(i) * v_end[i];
  }
  return 2.0 * along * (phi(x_end, moments, mass) - phi(x_start, moments, mass));
}

double esjd_grad_reduced(std::span<const double> x_end, std::span<const double> v_end,
                         std::span<const double> x_start, std::span<const double> v_start,
                         const OnlineMoments& moments, const MassDiag& mass) {
  std::vector<double> neg_v_start(v_start.size());
  for (std::size_t i = 0; i < v_start.size(); ++i) neg_v_start[i] = -v_start[i];
  const double forward = esjd_grad_forward(x_end, x_start, v_end, moments, mass);
  const double reverse = esjd_grad_forward(x_start, x_end, neg_v_start, moments, mass);
  return 0.5 * (forward + reverse);
}

double trajectory_gradient(std::span<const double> x_end, std::span<const double> v_end,
                           std::span<const double> x_start, std::span<const double> v_start,
                           double rho, double tau, const OnlineMoments& moments,
                           const MassDiag& mass) {
  const double g = esjd_grad_reduced(x_end, v_end, x_start, v_start, moments, mass);
  const double jump = phi(x_end, moments, mass) - phi(x_start, moments, mass);
  return g - (1.0 + rho) / (2.0 * tau) * jump * jump;
}

std::vector<double> ccipca_update(std::span<const double> w, std::span<const double> x,
                                  const OnlineMoments& moments, const MassDiag& mass,
                                  double beta) {
  const std::size_t d = w.size();
  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) y[i] = mass.sqrt_entry(i) * (x[i] - moments.mean[i]);

  double w_norm_sq = 0.0;
  for (double wi : w) w_norm_sq += wi * wi;

  std::vector<double> out(d);
  if (w_norm_sq > 0.0) {
    const double w_norm = std::sqrt(w_norm_sq);
    double dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) dot += y[i] * w[i];
    const double coeff = dot / w_norm;
    for (std::size_t i = 0; i < d; ++i) out[i] = beta * w[i] + (1.0 - beta) * coeff * y[i];
  } else {
    // Cold start: seed along the sample itself, consistent with the update's
    // fixed-point form.
    double y_norm = 0.0;
    for (double yi : y) y_norm += yi * yi;
    y_norm = std::sqrt(y_norm);
    for (std::size_t i = 0; i < d; ++i) out[i] = (1.0 - beta) * y[i] * y_norm;
  }
  return out;
}

MassDiag compute_mass(std::span<const double> s, double floor_scale) {
  double max_s = 0.0;
  for (double si : s) max_s = std::max(max_s, si);
  if (!(max_s > 0.0)) max_s = 1.0;
  const double floor = floor_scale * max_s;
  std::vector<double> diag(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) diag[i] = max_s / std::max(s[i], floor);
  return MassDiag(std::move(diag));
}

double compute_damping(std::span<const double> w, double fallback) {
  double norm_sq = 0.0;
  for (double wi : w) norm_sq += wi * wi;
  if (!(norm_sq > 0.0)) return fallback;
  return 1.0 / std::sqrt(std::sqrt(norm_sq));
}

double compute_rho(double c, double s2) {
  if (!(s2 > 0.0)) return 1.0;
  return std::clamp(std::max(0.0, c) / s2, 0.0, 1.0);
}

OnlineMoments online_update(const OnlineMoments& moments, const AmnesiaSchedule& schedule,
                            std::span<const double> end_positions,
                            std::span<const double> c_values, const MassDiag& mass, long n) {
  const std::size_t d = moments.mean.size();
  const std::size_t chains = c_values.size();
  if (end_positions.size() != chains * d)
    throw std::invalid_argument("online_update: positions/chains size mismatch");

  const double beta = schedule.beta(n);
  const double beta_w = schedule.beta_w(n);

  OnlineMoments next = moments;
  std::vector<double> scratch(chains);
  auto chain_pos = [&](std::size_t k) {
    return end_positions.subspan(k * d, d);
  };

  // Preconditioned centered samples against the incoming moments, and their
  // projections on the axis phi used this iteration (first coordinate axis
  // while w is still cold).
  const double w_norm = moments.lambda_hat();
  std::vector<double> e1(d, 0.0);
  e1[0] = 1.0;
  const std::vector<double> z = moments.principal_axis_or(e1);
  std::vector<double> y(chains * d);
  std::vector<double> proj(chains, 0.0);
  for (std::size_t k = 0; k < chains; ++k) {
    const auto x = chain_pos(k);
    double dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      y[k * d + i] = mass.sqrt_entry(i) * (x[i] - moments.mean[i]);
      dot += y[k * d + i] * z[i];
    }
    proj[k] = dot;
  }

  // m and s
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < chains; ++k) scratch[k] = chain_pos(k)[i];
    next.mean[i] = beta * moments.mean[i] + (1.0 - beta) * pairwise_mean(scratch);
    for (std::size_t k = 0; k < chains; ++k) {
      const double c = chain_pos(k)[i] - moments.mean[i];
      scratch[k] = c * c;
    }
    next.var[i] = beta * moments.var[i] + (1.0 - beta) * pairwise_mean(scratch);
  }

  // w (amnesia a_w)
  if (w_norm > 0.0) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < chains; ++k) scratch[k] = proj[k] * y[k * d + i];
      next.pca_vector[i] =
          beta_w * moments.pca_vector[i] + (1.0 - beta_w) * pairwise_mean(scratch);
    }
  } else {
    // Cold start: direction seeded from the first chain's sample so the
    // batch mean cannot cancel itself.
    double u_norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) u_norm += y[i] * y[i];
    u_norm = std::sqrt(u_norm);
    if (u_norm > 0.0) {
      std::vector<double> seed_proj(chains);
      for (std::size_t k = 0; k < chains; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += y[k * d + i] * y[i] / u_norm;
        seed_proj[k] = dot;
      }
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < chains; ++k) scratch[k] = seed_proj[k] * y[k * d + i];
        next.pca_vector[i] = (1.0 - beta_w) * pairwise_mean(scratch);
      }
    }
  }

  // m2 and s2 from the squared projections
  for (std::size_t k = 0; k < chains; ++k) scratch[k] = proj[k] * proj[k];
  std::vector<double> proj_sq(scratch.begin(), scratch.end());
  next.proj_mean = beta * moments.proj_mean + (1.0 - beta) * pairwise_mean(proj_sq);
  for (std::size_t k = 0; k < chains; ++k) {
    const double c = proj_sq[k] - moments.proj_mean;
    scratch[k] = c * c;
  }
  next.proj_var = beta * moments.proj_var + (1.0 - beta) * pairwise_mean(scratch);

  // lag covariance
  next.lag_cov = beta * moments.lag_cov + (1.0 - beta) * pairwise_mean(c_values);

  return next;
}

}  // namespace malt
