#include <doctest.h>

#include <cmath>

#include "malt/rng.hpp"
#include "malt/target.hpp"
#include "support.hpp"

using malt::BuiltinTargetSpec;
using malt::TargetDensity;
using Kind = BuiltinTargetSpec::Kind;

namespace {

BuiltinTargetSpec spec_of(Kind kind) {
  BuiltinTargetSpec s;
  s.kind = kind;
  return s;
}

std::vector<std::vector<double>> random_points(int dim, int count, std::uint64_t seed,
                                               double scale = 1.0) {
  std::vector<std::vector<double>> pts;
  malt::Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (double& v : x) v = scale * rng.normal();
    pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace

TEST_CASE("standard gaussian gradient is the identity") {
  auto spec = spec_of(Kind::standard_gaussian);
  spec.dim = 1;
  const TargetDensity t = malt::make_target(spec);
  const std::vector<double> x{3.0};
  CHECK(t.grad(x)[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(t.potential(x) == doctest::Approx(4.5).epsilon(1e-15));
}

TEST_CASE("diag gaussian gradient matches diag(1/v) x") {
  auto spec = spec_of(Kind::diag_gaussian);
  spec.variances = {4.0, 1.0};
  const TargetDensity t = malt::make_target(spec);
  const std::vector<double> x{2.0, 2.0};
  const auto g = t.grad(x);
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("rosenbrock gradient vanishes at the minimum") {
  auto spec = spec_of(Kind::rosenbrock);
  spec.dim = 4;
  const TargetDensity t = malt::make_target(spec);
  const std::vector<double> ones(4, 1.0);
  for (double gi : t.grad(ones)) CHECK(gi == 0.0);
}

TEST_CASE("invalid parameters are rejected") {
  auto bad_var = spec_of(Kind::diag_gaussian);
  bad_var.variances = {1.0, 0.0};
  CHECK_THROWS_AS((void)malt::make_target(bad_var), std::invalid_argument);

  auto bad_dim = spec_of(Kind::standard_gaussian);
  bad_dim.dim = 0;
  CHECK_THROWS_AS((void)malt::make_target(bad_dim), std::invalid_argument);

  auto odd_rosen = spec_of(Kind::rosenbrock);
  odd_rosen.dim = 3;
  CHECK_THROWS_AS((void)malt::make_target(odd_rosen), std::invalid_argument);

  auto bad_spec = spec_of(Kind::rotated_gaussian);
  bad_spec.spectrum = {2.0, -1.0};
  CHECK_THROWS_AS((void)malt::make_target(bad_spec), std::invalid_argument);
}

TEST_CASE("check_gradient passes on builtin targets") {
  auto gauss = spec_of(Kind::standard_gaussian);
  gauss.dim = 3;
  const auto pts3 = random_points(3, 10, 11);
  CHECK(malt::check_gradient(malt::make_target(gauss), pts3, 1e-5).pass);

  auto logit = spec_of(Kind::logistic_regression);
  logit.n_obs = 50;
  logit.dim = 5;
  logit.data_seed = 7;
  const auto pts5 = random_points(5, 10, 12);
  const auto report = malt::check_gradient(malt::make_target(logit), pts5, 1e-5);
  CHECK(report.pass);
  CHECK(report.points_checked == 10);

  auto rosen = spec_of(Kind::rosenbrock);
  rosen.dim = 4;
  const auto pts4 = random_points(4, 10, 13);
  CHECK(malt::check_gradient(malt::make_target(rosen), pts4, 1e-5).pass);
}

TEST_CASE("check_gradient flags a corrupted gradient") {
  auto spec = spec_of(Kind::standard_gaussian);
  spec.dim = 3;
  TargetDensity t = malt::make_target(spec);
  auto good = t.gradient;
  t.gradient = [good](std::span<const double> x, std::span<double> g) {
    good(x, g);
    for (double& gi : g) gi *= 1.01;  // off by 1%
  };
  const auto pts = random_points(3, 5, 21);
  CHECK_FALSE(malt::check_gradient(t, pts, 1e-5).pass);
}

TEST_CASE("gaussian builtins match their analytic density up to a constant") {
  std::vector<BuiltinTargetSpec> specs;
  {
    auto s = spec_of(Kind::standard_gaussian);
    s.dim = 3;
    specs.push_back(s);
  }
  {
    auto s = spec_of(Kind::diag_gaussian);
    s.variances = {0.5, 2.0, 7.0};
    specs.push_back(s);
  }
  {
    auto s = spec_of(Kind::rotated_gaussian);
    s.spectrum = {9.0, 4.0, 1.0};
    s.rotation_seed = 5;
    specs.push_back(s);
  }
  for (const auto& spec : specs) {
    const TargetDensity t = malt::make_target(spec);
    REQUIRE(t.gaussian.has_value());
    const auto n = static_cast<std::size_t>(t.dim);

    // Quadratic form x^T Sigma^-1 x via a Cholesky solve of the advertised
    // covariance; exp(-potential) must be proportional to exp(-q/2).
    const auto l = oracle::cholesky(t.gaussian->covariance, n);
    auto quad_form = [&](std::span<const double> x) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = x[i];
        for (std::size_t k = 0; k < i; ++k) acc -= l[i * n + k] * y[k];
        y[i] = acc / l[i * n + i];
      }
      double q = 0.0;
      for (double yi : y) q += yi * yi;
      return q;
    };

    const auto pts = random_points(t.dim, 3, 31, 1.5);
    const double ref = t.potential(pts[0]) - 0.5 * quad_form(pts[0]);
    for (const auto& x : pts) {
      const double diff = t.potential(x) - 0.5 * quad_form(x);
      CHECK(diff == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("rotated gaussian marginals and spectrum are consistent") {
  auto spec = spec_of(Kind::rotated_gaussian);
  spec.spectrum = {9.0, 4.0, 1.0};
  spec.rotation_seed = 42;
  const TargetDensity t = malt::make_target(spec);
  REQUIRE(t.gaussian.has_value());
  const auto eig = oracle::jacobi_eigen(t.gaussian->covariance, 3);
  CHECK(eig.values[0] == doctest::Approx(9.0).epsilon(1e-10));
  CHECK(eig.values[1] == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(eig.values[2] == doctest::Approx(1.0).epsilon(1e-10));
  double trace = 0.0;
  for (double v : t.gaussian->marginal_variances) trace += v;
  CHECK(trace == doctest::Approx(14.0).epsilon(1e-10));
}

TEST_CASE("logistic regression is convex with a bounded score at the truth") {
  auto spec = spec_of(Kind::logistic_regression);
  spec.n_obs = 50;
  spec.dim = 5;
  spec.data_seed = 3;
  const TargetDensity t = malt::make_target(spec);

  malt::Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(5), b(5), mid(5);
    for (int j = 0; j < 5; ++j) {
      a[static_cast<std::size_t>(j)] = 2.0 * rng.normal();
      b[static_cast<std::size_t>(j)] = 2.0 * rng.normal();
      mid[static_cast<std::size_t>(j)] =
          0.5 * (a[static_cast<std::size_t>(j)] + b[static_cast<std::size_t>(j)]);
    }
    CHECK(t.potential(mid) <= 0.5 * (t.potential(a) + t.potential(b)) + 1e-9);
  }

  // The data generator draws the true weights first from this stream.
  malt::Rng data_rng = malt::Rng::stream(spec.data_seed, 0x6c6f67, 0);
  std::vector<double> true_w(5);
  for (double& v : true_w) v = data_rng.normal();
  double norm = 0.0;
  for (double gi : t.grad(true_w)) norm += gi * gi;
  norm = std::sqrt(norm);
  CHECK(norm <= 5.0 * std::sqrt(50.0 * 5.0));
}

TEST_CASE("targets are deterministic in their seeds") {
  auto spec = spec_of(Kind::logistic_regression);
  spec.n_obs = 20;
  spec.dim = 3;
  spec.data_seed = 9;
  const TargetDensity a = malt::make_target(spec);
  const TargetDensity b = malt::make_target(spec);
  spec.data_seed = 10;
  const TargetDensity c = malt::make_target(spec);
  const std::vector<double> x{0.3, -0.2, 1.1};
  CHECK(a.potential(x) == b.potential(x));
  CHECK(a.potential(x) != c.potential(x));
}
