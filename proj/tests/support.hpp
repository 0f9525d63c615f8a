#pragma once

// Test-only oracles: independent reference computations the implementation
// under test is checked against. Nothing here calls into malt/dynamics or
// malt/adaptation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "malt/rng.hpp"
#include "malt/sampler.hpp"

namespace oracle {

struct SampleStats {
  double mean = 0.0;
  double var = 0.0;  // unbiased
  double se_mean = 0.0;
  std::size_t n = 0;
};

inline SampleStats stats(std::span<const double> xs) {
  SampleStats s;
  s.n = xs.size();
  double acc = 0.0;
  for (double x : xs) acc += x;
  s.mean = acc / static_cast<double>(s.n);
  double sq = 0.0;
  for (double x : xs) sq += (x - s.mean) * (x - s.mean);
  s.var = sq / static_cast<double>(s.n - 1);
  s.se_mean = std::sqrt(s.var / static_cast<double>(s.n));
  return s;
}

// --- dense symmetric eigendecomposition (cyclic Jacobi) --------------------

struct EigenSym {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

inline EigenSym jacobi_eigen(std::vector<double> a, std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-26) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p * n + q]) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * a[p * n + q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i * n + p], aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a[p * n + i], aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v[i * n + p], viq = v[i * n + q];
          v[i * n + p] = c * vip - s * viq;
          v[i * n + q] = s * vip + c * viq;
        }
      }
    }
  }

  EigenSym out;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });
  for (std::size_t r = 0; r < n; ++r) {
    out.values.push_back(a[order[r] * n + order[r]]);
    std::vector<double> vec(n);
    for (std::size_t i = 0; i < n; ++i) vec[i] = v[i * n + order[r]];
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

// Lower Cholesky factor of a positive definite matrix (row-major).
inline std::vector<double> cholesky(std::vector<double> a, std::size_t n) {
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) acc -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (acc <= 0.0) throw std::runtime_error("cholesky: not positive definite");
        l[i * n + i] = std::sqrt(acc);
      } else {
        l[i * n + j] = acc / l[j * n + j];
      }
    }
  }
  return l;
}

// --- AR(1) ------------------------------------------------------------------

// Stationary AR(1): x_{t+1} = phi x_t + e_t with unit innovations.
inline std::vector<double> ar1_series(std::size_t n, double phi, malt::Rng& rng) {
  std::vector<double> x(n);
  x[0] = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (std::size_t t = 1; t < n; ++t) x[t] = phi * x[t - 1] + rng.normal();
  return x;
}

inline double ar1_ess_fraction(double phi) { return (1.0 - phi) / (1.0 + phi); }

// --- kinetic Langevin reference simulator ------------------------------------

// Fine-step OBABO splitting of the kinetic Langevin SDE for the 1-D standard
// Gaussian (potential x^2/2, unit mass). Used as an exact-in-law endpoint
// generator as h_fine -> 0; written here independently of the sampler's own
// integrator.
struct LangevinEndpoints {
  double x0, v0, x1, v1;
};

inline LangevinEndpoints langevin_1d_gaussian(double tau, double gamma, double h_fine,
                                              malt::Rng& rng) {
  LangevinEndpoints e{};
  e.x0 = rng.normal();
  e.v0 = rng.normal();
  double x = e.x0, v = e.v0;
  const long steps = std::lround(tau / h_fine);
  const double eta_half = std::exp(-gamma * h_fine / 2.0);
  const double noise = std::sqrt(1.0 - eta_half * eta_half);
  for (long i = 0; i < steps; ++i) {
    v = eta_half * v + noise * rng.normal();
    v -= 0.5 * h_fine * x;
    x += h_fine * v;
    v -= 0.5 * h_fine * x;
    v = eta_half * v + noise * rng.normal();
  }
  e.x1 = x;
  e.v1 = v;
  return e;
}

// Closed-form stationary position autocorrelation of the same SDE in the
// underdamped regime gamma < 2:
//   r(tau) = exp(-gamma tau / 2) (cos(w tau) + gamma/(2w) sin(w tau)),
//   w = sqrt(1 - gamma^2/4)
inline double langevin_1d_gaussian_autocorr(double tau, double gamma) {
  const double w = std::sqrt(1.0 - 0.25 * gamma * gamma);
  return std::exp(-0.5 * gamma * tau) *
         (std::cos(w * tau) + gamma / (2.0 * w) * std::sin(w * tau));
}

// --- record comparison --------------------------------------------------------

inline bool records_identical(const malt::RunRecord& a, const malt::RunRecord& b) {
  auto vec_eq = [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] != y[i]) return false;
    return true;
  };
  if (a.dim != b.dim || a.chains != b.chains || a.n_sample != b.n_sample) return false;
  if (a.adapt_trace.size() != b.adapt_trace.size()) return false;
  for (std::size_t i = 0; i < a.adapt_trace.size(); ++i) {
    const auto& x = a.adapt_trace[i];
    const auto& y = b.adapt_trace[i];
    if (x.step != y.step || x.length != y.length || x.damping != y.damping ||
        x.lambda_hat != y.lambda_hat || x.rho != y.rho || x.accept_prob != y.accept_prob ||
        x.g_step != y.g_step || x.g_length != y.g_length)
      return false;
  }
  if (!vec_eq(a.frozen.mass_diag, b.frozen.mass_diag)) return false;
  if (a.frozen.damping != b.frozen.damping || a.frozen.step != b.frozen.step ||
      a.frozen.length != b.frozen.length)
    return false;
  if (!vec_eq(a.final_moments.mean, b.final_moments.mean)) return false;
  if (!vec_eq(a.final_moments.var, b.final_moments.var)) return false;
  if (!vec_eq(a.final_moments.pca_vector, b.final_moments.pca_vector)) return false;
  if (a.final_moments.proj_mean != b.final_moments.proj_mean ||
      a.final_moments.proj_var != b.final_moments.proj_var ||
      a.final_moments.lag_cov != b.final_moments.lag_cov)
    return false;
  return vec_eq(a.draws, b.draws) && vec_eq(a.sampling_deltas, b.sampling_deltas) &&
         vec_eq(a.realized_lengths, b.realized_lengths) &&
         a.total_gradient_evals == b.total_gradient_evals &&
         a.sampling_gradient_evals == b.sampling_gradient_evals;
}

}  // namespace oracle
