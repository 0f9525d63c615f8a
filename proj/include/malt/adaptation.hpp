#pragma once

#include <span>
#include <vector>

#include "malt/dynamics.hpp"

namespace malt {

// Ascent-form Adam on a scalar (here log h or log tau).
struct AdamConfig {
  double learning_rate = 0.05;
  double beta1 = 0.0;
  double beta2 = 0.95;
  double epsilon = 1e-8;
};

struct AdamState {
  double theta = 0.0;
  double m = 0.0;  // first moment
  double s = 0.0;  // second moment
  long n = 0;      // completed updates
};

// One bias-corrected ascent step:
//   m' = b1 m + (1-b1) g,  m_hat = m' / (1 - b1^n)
//   s' = b2 s + (1-b2) g^2, s_hat = s' / (1 - b2^n)
//   theta' = theta + lr * m_hat / (sqrt(s_hat) + eps)
// n is incremented first, so the first call corrects with n = 1.
AdamState adam_update(const AdamState& state, double g, const AdamConfig& cfg);

// Synthetic step-size gradient exp(-max(0, delta)) - alpha_star. Divergent
// trajectories (delta = +inf) give -alpha_star.
double step_size_gradient(double delta, double alpha_star);

// Decay schedule beta(n) = n / (n + a); w uses its own amnesia a_w.
struct AmnesiaSchedule {
  double a = 8.0;
  double a_w = 3.0;
  double beta(long n) const { return static_cast<double>(n) / (static_cast<double>(n) + a); }
  double beta_w(long n) const { return static_cast<double>(n) / (static_cast<double>(n) + a_w); }
};

// Online estimates driving the tuning: per-coordinate mean m and variance s,
// the unnormalized principal eigenvector w of the preconditioned covariance,
// and the scalar projection moments m2, s2 plus the lag covariance c.
struct OnlineMoments {
  std::vector<double> mean;        // m
  std::vector<double> var;         // s
  std::vector<double> pca_vector;  // w; |w| estimates the top eigenvalue
  double proj_mean = 0.0;          // m2
  double proj_var = 1.0;           // s2
  double lag_cov = 0.0;            // c

  static OnlineMoments initial(int dim);

  double lambda_hat() const;  // |w|
  // w / |w| when |w| > 0, otherwise the supplied fallback axis.
  std::vector<double> principal_axis_or(std::span<const double> fallback) const;
  // Copy with the pca vector replaced by the first coordinate axis while w is
  // still cold (|w| == 0).
  OnlineMoments with_axis_fallback() const;
};

// phi(x) = (z^T M^{1/2} (x - m))^2, the squared principal-axis projection of
// the centered preconditioned position. Throws std::domain_error while the
// axis is undefined (|w| == 0).
double phi(std::span<const double> x, const OnlineMoments& moments, const MassDiag& mass);

// grad phi(x) = 2 (z^T M^{1/2} (x - m)) M^{1/2} z
std::vector<double> phi_grad(std::span<const double> x, const OnlineMoments& moments,
                             const MassDiag& mass);

// Forward estimator of d/dtau ESJD_phi:
//   delta = 2 (grad phi(x_end)^T M^-1 v_end) (phi(x_end) - phi(x_start))
double esjd_grad_forward(std::span<const double> x_end, std::span<const double> x_start,
                         std::span<const double> v_end, const OnlineMoments& moments,
                         const MassDiag& mass);

// Averaged forward/reverse estimator; the two terms decorrelate as tau grows,
// halving the variance:
//   g = (delta(x_end, x_start, v_end) + delta(x_start, x_end, -v_start)) / 2
double esjd_grad_reduced(std::span<const double> x_end, std::span<const double> v_end,
                         std::span<const double> x_start, std::span<const double> v_start,
                         const OnlineMoments& moments, const MassDiag& mass);

// One chain's trajectory-length gradient:
//   g_k = g(x_end, v_end, x_start, v_start)
//         - ((1 + rho) / (2 tau)) (phi(x_end) - phi(x_start))^2
double trajectory_gradient(std::span<const double> x_end, std::span<const double> v_end,
                           std::span<const double> x_start, std::span<const double> v_start,
                           double rho, double tau, const OnlineMoments& moments,
                           const MassDiag& mass);

// Single-sample CCIPCA update w <- beta w + (1-beta) y (y^T w)/|w| for
// y = M^{1/2}(x - m). A cold start (|w| == 0) seeds w with (1-beta) y |y|.
std::vector<double> ccipca_update(std::span<const double> w, std::span<const double> x,
                                  const OnlineMoments& moments, const MassDiag& mass,
                                  double beta);

// M = max(s) diag(s)^-1; the largest-variance coordinate gets mass 1. Entries
// are floored at floor_scale * max(s) first so degenerate coordinates cannot
// produce infinite mass.
MassDiag compute_mass(std::span<const double> s, double floor_scale = 1e-10);

// gamma = |w|^{-1/2}; fallback while |w| == 0.
double compute_damping(std::span<const double> w, double fallback);

// rho = clamp(max(0, c) / s2, 0, 1); rho = 1 when s2 <= 0.
double compute_rho(double c, double s2);

// One batch update of every online estimate. end_positions holds the K chain
// states row-major (K x d); c_values the per-chain lag products
// (phi(X_k) - m2)(phi(x0_k) - m2) computed against the incoming moments. All
// f_psi are evaluated at the incoming moments (snapshot semantics) and
// cross-chain means use pairwise summation.
OnlineMoments online_update(const OnlineMoments& moments, const AmnesiaSchedule& schedule,
                            std::span<const double> end_positions,
                            std::span<const double> c_values, const MassDiag& mass, long n);

}  // namespace malt
