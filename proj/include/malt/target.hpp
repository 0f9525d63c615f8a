#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace malt {

// Exact moments of a Gaussian builtin, exposed so tests can check sampler
// output against ground truth.
struct GaussianInfo {
  std::vector<double> mean;
  std::vector<double> marginal_variances;
  std::vector<double> eigenvalues;  // covariance spectrum, descending
  std::vector<double> covariance;   // row-major d x d
};

// A differentiable unnormalized density exp(-potential(x)). Read-only after
// construction; safe to evaluate from many chains concurrently.
struct TargetDensity {
  int dim = 0;
  std::string name;
  std::function<double(std::span<const double>)> potential;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  double init_scale = 1.0;
  std::optional<GaussianInfo> gaussian;

  std::vector<double> grad(std::span<const double> x) const {
    std::vector<double> g(static_cast<std::size_t>(dim));
    gradient(x, g);
    return g;
  }
};

struct BuiltinTargetSpec {
  enum class Kind {
    standard_gaussian,
    diag_gaussian,
    rotated_gaussian,
    rosenbrock,
    logistic_regression,
  };

  Kind kind = Kind::standard_gaussian;
  int dim = 1;                     // standard-gaussian, rosenbrock, logistic
  std::vector<double> variances;   // diag-gaussian (dim = size)
  std::vector<double> spectrum;    // rotated-gaussian eigenvalues (dim = size)
  std::uint64_t rotation_seed = 0;
  double curvature = 5.0;          // rosenbrock
  int n_obs = 50;                  // logistic regression
  std::uint64_t data_seed = 0;
  double init_scale = 1.0;
};

// Builds a builtin target. Throws std::invalid_argument on bad parameters
// (non-positive variance, dim < 1, odd rosenbrock dim, ...). Deterministic
// for fixed seeds.
TargetDensity make_target(const BuiltinTargetSpec& spec);

struct GradientCheckReport {
  bool pass = true;
  double max_rel_error = 0.0;
  int points_checked = 0;
  int points_failed = 0;
};

// Central finite differences of the potential against the coded gradient,
// relative error per coordinate. Failures land in the report, not in an
// exception.
GradientCheckReport check_gradient(const TargetDensity& target,
                                   std::span<const std::vector<double>> points,
                                   double tol);

}  // namespace malt
