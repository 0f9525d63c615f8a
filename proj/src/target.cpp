#include "malt/target.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "malt/rng.hpp"

namespace malt {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

TargetDensity make_standard_gaussian(int dim, double init_scale) {
  require(dim >= 1, "standard-gaussian: dim must be >= 1");
  TargetDensity t;
  t.dim = dim;
  t.name = "standard-gaussian(d=" + std::to_string(dim) + ")";
  t.init_scale = init_scale;
  t.potential = [](std::span<const double> x) {
    double acc = 0.0;
    for (double xi : x) acc += xi * xi;
    return 0.5 * acc;
  };
  t.gradient = [](std::span<const double> x, std::span<double> g) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i];
  };
  GaussianInfo info;
  info.mean.assign(dim, 0.0);
  info.marginal_variances.assign(dim, 1.0);
  info.eigenvalues.assign(dim, 1.0);
  info.covariance.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) info.covariance[static_cast<std::size_t>(i) * dim + i] = 1.0;
  t.gaussian = std::move(info);
  return t;
}

TargetDensity make_diag_gaussian(const std::vector<double>& variances, double init_scale) {
  require(!variances.empty(), "diag-gaussian: variances must be non-empty");
  for (double v : variances) require(v > 0.0, "diag-gaussian: variances must be > 0");
  const int dim = static_cast<int>(variances.size());
  auto precision = std::make_shared<std::vector<double>>(variances.size());
  for (std::size_t i = 0; i < variances.size(); ++i) (*precision)[i] = 1.0 / variances[i];

  TargetDensity t;
  t.dim = dim;
  t.name = "diag-gaussian(d=" + std::to_string(dim) + ")";
  t.init_scale = init_scale;
  t.potential = [precision](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * x[i] * (*precision)[i];
    return 0.5 * acc;
  };
  t.gradient = [precision](std::span<const double> x, std::span<double> g) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] * (*precision)[i];
  };
  GaussianInfo info;
  info.mean.assign(dim, 0.0);
  info.marginal_variances = variances;
  info.eigenvalues = variances;
  std::sort(info.eigenvalues.begin(), info.eigenvalues.end(), std::greater<>());
  info.covariance.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i)
    info.covariance[static_cast<std::size_t>(i) * dim + i] = variances[static_cast<std::size_t>(i)];
  t.gaussian = std::move(info);
  return t;
}

// Orthogonal matrix from QR (modified Gram-Schmidt) of a seeded Gaussian
// matrix, row-major.
std::vector<double> random_rotation(int dim, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(dim);
  std::vector<double> q(n * n);
  Rng rng = Rng::stream(seed, 0x726f74, 0);  // dedicated rotation stream
  for (double& v : q) v = rng.normal();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += q[i * n + j] * q[i * n + k];
      for (std::size_t i = 0; i < n; ++i) q[i * n + j] -= dot * q[i * n + k];
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q[i * n + j] * q[i * n + j];
    norm = std::sqrt(norm);
    require(norm > 1e-12, "rotated-gaussian: degenerate rotation draw");
    for (std::size_t i = 0; i < n; ++i) q[i * n + j] /= norm;
  }
  return q;
}

TargetDensity make_rotated_gaussian(const std::vector<double>& spectrum,
                                    std::uint64_t rotation_seed, double init_scale) {
  require(!spectrum.empty(), "rotated-gaussian: spectrum must be non-empty");
  for (double v : spectrum) require(v > 0.0, "rotated-gaussian: spectrum must be > 0");
  const int dim = static_cast<int>(spectrum.size());
  const auto n = static_cast<std::size_t>(dim);
  const std::vector<double> q = random_rotation(dim, rotation_seed);

  // covariance = Q diag(spectrum) Q^T, precision = Q diag(1/spectrum) Q^T
  auto cov = std::vector<double>(n * n, 0.0);
  auto precision = std::make_shared<std::vector<double>>(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double cij = 0.0, pij = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        cij += q[i * n + k] * spectrum[k] * q[j * n + k];
        pij += q[i * n + k] * (1.0 / spectrum[k]) * q[j * n + k];
      }
      cov[i * n + j] = cij;
      (*precision)[i * n + j] = pij;
    }
  }

  TargetDensity t;
  t.dim = dim;
  t.name = "rotated-gaussian(d=" + std::to_string(dim) + ")";
  t.init_scale = init_scale;
  t.potential = [precision, n](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += (*precision)[i * n + j] * x[j];
      acc += x[i] * row;
    }
    return 0.5 * acc;
  };
  t.gradient = [precision, n](std::span<const double> x, std::span<double> g) {
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += (*precision)[i * n + j] * x[j];
      g[i] = row;
    }
  };
  GaussianInfo info;
  info.mean.assign(dim, 0.0);
  info.marginal_variances.resize(n);
  for (std::size_t i = 0; i < n; ++i) info.marginal_variances[i] = cov[i * n + i];
  info.eigenvalues = spectrum;
  std::sort(info.eigenvalues.begin(), info.eigenvalues.end(), std::greater<>());
  info.covariance = std::move(cov);
  t.gaussian = std::move(info);
  return t;
}

// Pairs of coordinates (u, v) with potential (1-u)^2 + b (v - u^2)^2 per pair.
// The global minimum is the all-ones point.
TargetDensity make_rosenbrock(int dim, double curvature, double init_scale) {
  require(dim >= 2 && dim % 2 == 0, "rosenbrock: dim must be even and >= 2");
  require(curvature > 0.0, "rosenbrock: curvature must be > 0");
  TargetDensity t;
  t.dim = dim;
  t.name = "rosenbrock(d=" + std::to_string(dim) + ")";
  t.init_scale = init_scale;
  const double b = curvature;
  t.potential = [b](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t p = 0; p + 1 < x.size(); p += 2) {
      const double u = x[p], v = x[p + 1];
      const double du = 1.0 - u, dv = v - u * u;
      acc += du * du + b * dv * dv;
    }
    return acc;
  };
  t.gradient = [b](std::span<const double> x, std::span<double> g) {
    for (std::size_t p = 0; p + 1 < x.size(); p += 2) {
      const double u = x[p], v = x[p + 1];
      const double dv = v - u * u;
      g[p] = -2.0 * (1.0 - u) - 4.0 * b * u * dv;
      g[p + 1] = 2.0 * b * dv;
    }
  };
  return t;
}

// Bayesian logistic regression on synthetic data: covariates and true
// weights are i.i.d. standard normal, labels Bernoulli(sigmoid(z.w)), with a
// standard normal prior on the weights. Convex and reproducible from a seed.
TargetDensity make_logistic_regression(int n_obs, int dim, std::uint64_t data_seed,
                                       double init_scale) {
  require(n_obs >= 1, "logistic-regression: n_obs must be >= 1");
  require(dim >= 1, "logistic-regression: dim must be >= 1");
  const auto n = static_cast<std::size_t>(n_obs);
  const auto d = static_cast<std::size_t>(dim);

  auto data = std::make_shared<std::vector<double>>(n * d);  // covariates, row-major
  auto labels = std::make_shared<std::vector<double>>(n);
  {
    Rng rng = Rng::stream(data_seed, 0x6c6f67, 0);
    std::vector<double> true_w(d);
    for (double& v : true_w) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double z = rng.normal();
        (*data)[i * d + j] = z;
        dot += z * true_w[j];
      }
      const double p = 1.0 / (1.0 + std::exp(-dot));
      (*labels)[i] = rng.uniform() <= p ? 1.0 : 0.0;
    }
  }

  auto softplus = [](double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  };

  TargetDensity t;
  t.dim = dim;
  t.name = "logistic-regression(n=" + std::to_string(n_obs) + ",d=" + std::to_string(dim) + ")";
  t.init_scale = init_scale;
  t.potential = [data, labels, n, d, softplus](std::span<const double> w) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += 0.5 * w[j] * w[j];
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += (*data)[i * d + j] * w[j];
      acc += softplus(dot) - (*labels)[i] * dot;
    }
    return acc;
  };
  t.gradient = [data, labels, n, d](std::span<const double> w, std::span<double> g) {
    for (std::size_t j = 0; j < d; ++j) g[j] = w[j];
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += (*data)[i * d + j] * w[j];
      const double resid = 1.0 / (1.0 + std::exp(-dot)) - (*labels)[i];
      for (std::size_t j = 0; j < d; ++j) g[j] += resid * (*data)[i * d + j];
    }
  };
  return t;
}

}  // namespace

TargetDensity make_target(const BuiltinTargetSpec& spec) {
  require(spec.init_scale > 0.0, "init_scale must be > 0");
  switch (spec.kind) {
    case BuiltinTargetSpec::Kind::standard_gaussian:
      return make_standard_gaussian(spec.dim, spec.init_scale);
    case BuiltinTargetSpec::Kind::diag_gaussian:
      return make_diag_gaussian(spec.variances, spec.init_scale);
    case BuiltinTargetSpec::Kind::rotated_gaussian:
      return make_rotated_gaussian(spec.spectrum, spec.rotation_seed, spec.init_scale);
    case BuiltinTargetSpec::Kind::rosenbrock:
      return make_rosenbrock(spec.dim, spec.curvature, spec.init_scale);
    case BuiltinTargetSpec::Kind::logistic_regression:
      return make_logistic_regression(spec.n_obs, spec.dim, spec.data_seed, spec.init_scale);
  }
  throw std::invalid_argument("unknown target kind");
}

GradientCheckReport check_gradient(const TargetDensity& target,
                                   std::span<const std::vector<double>> points,
                                   double tol) {
  if (tol <= 0.0) throw std::invalid_argument("check_gradient: tol must be > 0");
  GradientCheckReport report;
  const auto d = static_cast<std::size_t>(target.dim);
  std::vector<double> grad(d), probe(d);
  for (const auto& point : points) {
    if (point.size() != d) throw std::invalid_argument("check_gradient: point has wrong dim");
    target.gradient(point, grad);
    probe.assign(point.begin(), point.end());
    bool failed = false;
    for (std::size_t j = 0; j < d; ++j) {
      const double eps = 6e-6 * std::max(1.0, std::abs(point[j]));
      probe[j] = point[j] + eps;
      const double up = target.potential(probe);
      probe[j] = point[j] - eps;
      const double down = target.potential(probe);
      probe[j] = point[j];
      const double fd = (up - down) / (2.0 * eps);
      const double rel = std::abs(fd - grad[j]) / std::max({std::abs(grad[j]), std::abs(fd), 1.0});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      if (rel > tol) failed = true;
    }
    ++report.points_checked;
    if (failed) ++report.points_failed;
  }
  report.pass = report.points_failed == 0;
  return report;
}

}  // namespace malt
