#include <doctest.h>

#include <cmath>
#include <limits>

#include "malt/adaptation.hpp"
#include "malt/rng.hpp"
#include "support.hpp"

using malt::AdamConfig;
using malt::AdamState;
using malt::AmnesiaSchedule;
using malt::MassDiag;
using malt::OnlineMoments;
using malt::Rng;

namespace {

OnlineMoments moments_1d(double mean, double w) {
  OnlineMoments m = OnlineMoments::initial(1);
  m.mean[0] = mean;
  m.pca_vector[0] = w;
  return m;
}

}  // namespace

TEST_CASE("adam: zero gradient from a fresh state leaves theta in place") {
  const AdamConfig cfg;
  AdamState s;
  s.theta = 1.25;
  const AdamState next = malt::adam_update(s, 0.0, cfg);
  CHECK(next.theta == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(next.n == 1);
}

TEST_CASE("adam: first-step hand values") {
  AdamConfig cfg;  // beta1 = 0, beta2 = 0.95, lr = 0.05
  AdamState s;
  const AdamState next = malt::adam_update(s, 0.5, cfg);
  CHECK(next.m == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.s == doctest::Approx(0.0125).epsilon(1e-15));
  // s_hat = 0.0125 / 0.05 = 0.25, step = 0.05 * 0.5 / (0.5 + 1e-8)
  CHECK(next.theta == doctest::Approx(0.05).epsilon(1e-7));
}

TEST_CASE("adam: constant positive gradient walks theta up in bounded steps") {
  const AdamConfig cfg;
  AdamState s;
  double prev = 0.0;
  for (int i = 0; i < 50; ++i) {
    s = malt::adam_update(s, 0.7, cfg);
    CHECK(s.theta > prev);
    CHECK(s.theta - prev <= cfg.learning_rate * 1.001);
    prev = s.theta;
  }
}

TEST_CASE("adam: opposite gradients move theta symmetrically (beta1 = 0)") {
  const AdamConfig cfg;
  AdamState s;  // theta = 0 keeps the comparison exact in floating point
  const double up = malt::adam_update(s, 0.31, cfg).theta;
  const double down = malt::adam_update(s, -0.31, cfg).theta;
  CHECK(up == -down);
}

TEST_CASE("step size gradient") {
  CHECK(malt::step_size_gradient(-3.0, 0.8) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(malt::step_size_gradient(std::log(2.0), 0.8) == doctest::Approx(-0.3).epsilon(1e-14));
  CHECK(malt::step_size_gradient(std::numeric_limits<double>::infinity(), 0.8) ==
        doctest::Approx(-0.8).epsilon(1e-15));
}

TEST_CASE("phi and its gradient") {
  const MassDiag mass = MassDiag::identity(1);
  const OnlineMoments m = moments_1d(0.0, 1.0);

  CHECK(malt::phi(std::vector<double>{2.0}, m, mass) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(malt::phi_grad(std::vector<double>{2.0}, m, mass)[0] ==
        doctest::Approx(4.0).epsilon(1e-15));

  // centered point
  const OnlineMoments shifted = moments_1d(1.5, 1.0);
  CHECK(malt::phi(std::vector<double>{1.5}, shifted, mass) == 0.0);
  CHECK(malt::phi_grad(std::vector<double>{1.5}, shifted, mass)[0] == 0.0);

  // sign of z is irrelevant
  const OnlineMoments flipped = moments_1d(0.0, -2.0);
  CHECK(malt::phi(std::vector<double>{2.0}, flipped, mass) ==
        malt::phi(std::vector<double>{2.0}, moments_1d(0.0, 2.0), mass));

  // undefined axis
  const OnlineMoments cold = moments_1d(0.0, 0.0);
  CHECK_THROWS_AS((void)malt::phi(std::vector<double>{2.0}, cold, mass), std::domain_error);
  CHECK(cold.with_axis_fallback().pca_vector[0] == 1.0);
}

TEST_CASE("forward esjd gradient estimator") {
  const MassDiag mass = MassDiag::identity(1);
  const OnlineMoments m = moments_1d(0.0, 1.0);
  const std::vector<double> x_end{2.0}, x_start{1.0}, v_end{0.5};

  CHECK(malt::esjd_grad_forward(x_end, x_end, v_end, m, mass) == 0.0);
  // 2 (grad phi(2) . v) (phi(2) - phi(1)) = 2 * (4 * 0.5) * 3 = 12
  CHECK(malt::esjd_grad_forward(x_end, x_start, v_end, m, mass) ==
        doctest::Approx(12.0).epsilon(1e-14));
  const std::vector<double> neg_v{-0.5};
  CHECK(malt::esjd_grad_forward(x_end, x_start, neg_v, m, mass) ==
        doctest::Approx(-12.0).epsilon(1e-14));
}

TEST_CASE("reduced-variance esjd gradient estimator") {
  const MassDiag mass = MassDiag::identity(1);
  const OnlineMoments m = moments_1d(0.0, 1.0);
  const std::vector<double> x_end{2.0}, x_start{1.0}, v_end{0.5}, v_start{-0.3};

  // reverse term: 2 * (2 * 0.3) * (1 - 4) = -3.6; g = (12 - 3.6) / 2 = 4.2
  CHECK(malt::esjd_grad_reduced(x_end, v_end, x_start, v_start, m, mass) ==
        doctest::Approx(4.2).epsilon(1e-14));
  CHECK(malt::esjd_grad_reduced(x_end, v_end, x_end, v_end, m, mass) == 0.0);

  // swapping endpoints with negated start velocity leaves g unchanged
  const std::vector<double> neg_v_end{-0.5}, neg_v_start{0.3};
  CHECK(malt::esjd_grad_reduced(x_start, neg_v_start, x_end, neg_v_end, m, mass) ==
        doctest::Approx(4.2).epsilon(1e-14));
}

TEST_CASE("trajectory gradient applies the rescaling penalty") {
  const MassDiag mass = MassDiag::identity(1);
  const OnlineMoments m = moments_1d(0.0, 1.0);
  const std::vector<double> x_end{2.0}, x_start{1.0}, v_end{0.5}, v_start{-0.3};

  const double g = malt::esjd_grad_reduced(x_end, v_end, x_start, v_start, m, mass);
  const double jump = 4.0 - 1.0;  // phi(2) - phi(1)

  const double gk1 = malt::trajectory_gradient(x_end, v_end, x_start, v_start, 1.0, 1.0, m, mass);
  CHECK(gk1 == doctest::Approx(g - jump * jump).epsilon(1e-13));

  // doubling tau halves the penalty term
  const double gk2 = malt::trajectory_gradient(x_end, v_end, x_start, v_start, 1.0, 2.0, m, mass);
  CHECK(g - gk2 == doctest::Approx(0.5 * (g - gk1)).epsilon(1e-12));

  // rejected trajectory: zero jump kills both the estimator and the penalty
  const double gk_rej =
      malt::trajectory_gradient(x_start, v_end, x_start, v_start, 0.7, 1.0, m, mass);
  CHECK(gk_rej == 0.0);
  CHECK(malt::esjd_grad_reduced(x_start, v_end, x_start, v_start, m, mass) == 0.0);
}

TEST_CASE("ccipca: aligned and orthogonal samples") {
  const MassDiag mass = MassDiag::identity(2);
  OnlineMoments m = OnlineMoments::initial(2);
  const std::vector<double> w{1.0, 0.0};  // |w| = 1
  const double beta = 0.6;

  // y = c w: direction fixed, norm beta + (1-beta) c^2
  const double c = 1.7;
  const auto aligned = malt::ccipca_update(w, std::vector<double>{c, 0.0}, m, mass, beta);
  CHECK(aligned[0] == doctest::Approx(beta + (1 - beta) * c * c).epsilon(1e-14));
  CHECK(aligned[1] == 0.0);

  // y orthogonal to w: no information, pure decay of the estimate
  const auto ortho = malt::ccipca_update(w, std::vector<double>{0.0, 2.5}, m, mass, beta);
  CHECK(ortho[0] == doctest::Approx(beta).epsilon(1e-14));
  CHECK(ortho[1] == 0.0);

  // cold start seeds along the first sample
  const std::vector<double> zero{0.0, 0.0};
  const auto seeded = malt::ccipca_update(zero, std::vector<double>{3.0, 4.0}, m, mass, 0.25);
  CHECK(seeded[0] == doctest::Approx(0.75 * 3.0 * 5.0).epsilon(1e-14));
  CHECK(seeded[1] == doctest::Approx(0.75 * 4.0 * 5.0).epsilon(1e-14));
}

TEST_CASE("ccipca converges to the top eigenpair of a streaming gaussian") {
  // x ~ N(0, diag(4, 1)); the top eigenpair is (4, e1).
  const MassDiag mass = MassDiag::identity(2);
  const OnlineMoments frame = OnlineMoments::initial(2);  // mean zero
  const AmnesiaSchedule schedule;                         // a_w = 3
  Rng rng(401);
  std::vector<double> w{0.0, 0.0};
  for (long n = 1; n <= 5000; ++n) {
    const std::vector<double> x{2.0 * rng.normal(), rng.normal()};
    w = malt::ccipca_update(w, x, frame, mass, schedule.beta_w(n));
  }
  const double norm = std::hypot(w[0], w[1]);
  CHECK(std::abs(norm - 4.0) / 4.0 < 0.10);
  CHECK(std::abs(w[0] / norm) > 0.95);

  // gamma = |w|^{-1/2} chains through to 1/2
  CHECK(std::abs(malt::compute_damping(w, 1.0) - 0.5) / 0.5 < 0.10);
}

TEST_CASE("compute_mass normalizes by the largest variance") {
  const auto homogeneous = malt::compute_mass(std::vector<double>{3.0, 3.0, 3.0});
  for (int i = 0; i < 3; ++i) CHECK(homogeneous.entry(static_cast<std::size_t>(i)) == 1.0);

  const auto two = malt::compute_mass(std::vector<double>{4.0, 1.0});
  CHECK(two.entry(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(two.entry(1) == doctest::Approx(4.0).epsilon(1e-15));

  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> s(4);
    for (double& si : s) si = std::exp(2.0 * rng.normal());
    const auto mass = malt::compute_mass(s);
    double min_entry = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) min_entry = std::min(min_entry, mass.entry(static_cast<std::size_t>(i)));
    CHECK(min_entry == doctest::Approx(1.0).epsilon(1e-12));
  }

  // degenerate coordinate hits the floor instead of producing infinite mass
  const auto floored = malt::compute_mass(std::vector<double>{1.0, 0.0});
  CHECK(floored.entry(1) == doctest::Approx(1e10).epsilon(1e-12));
}

TEST_CASE("compute_damping") {
  CHECK(malt::compute_damping(std::vector<double>{4.0, 0.0}, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(malt::compute_damping(std::vector<double>{0.0, 1.0}, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(malt::compute_damping(std::vector<double>{0.0, 0.0}, 0.375) == 0.375);
}

TEST_CASE("compute_rho clamps to [0, 1]") {
  CHECK(malt::compute_rho(-2.0, 0.5) == 0.0);
  CHECK(malt::compute_rho(0.6, 0.6) == 1.0);
  CHECK(malt::compute_rho(0.3, 0.6) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(malt::compute_rho(5.0, 0.1) == 1.0);
  CHECK(malt::compute_rho(0.2, 0.0) == 1.0);  // s2 fallback

  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const double rho = malt::compute_rho(rng.normal(), std::abs(rng.normal()));
    CHECK(rho >= 0.0);
    CHECK(rho <= 1.0);
  }
}

TEST_CASE("online update: beta(0) jumps to the batch statistic") {
  const AmnesiaSchedule schedule;
  const MassDiag mass = MassDiag::identity(1);
  OnlineMoments m = OnlineMoments::initial(1);
  m.mean[0] = 100.0;  // should be wiped by beta(0) = 0
  m.pca_vector[0] = 1.0;
  const std::vector<double> positions{2.0, 4.0};
  const std::vector<double> c_values{0.0, 0.0};
  const auto next = malt::online_update(m, schedule, positions, c_values, mass, 0);
  CHECK(next.mean[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("online update: constant stream collapses the variance") {
  const AmnesiaSchedule schedule;
  const MassDiag mass = MassDiag::identity(2);
  OnlineMoments m = OnlineMoments::initial(2);
  const std::vector<double> positions{1.5, -2.0, 1.5, -2.0};  // two chains at x*
  const std::vector<double> c_values{0.0, 0.0};
  for (long n = 1; n <= 400; ++n) m = malt::online_update(m, schedule, positions, c_values, mass, n);
  CHECK(m.mean[0] == doctest::Approx(1.5).epsilon(1e-4));
  CHECK(m.mean[1] == doctest::Approx(-2.0).epsilon(1e-4));
  CHECK(m.var[0] < 1e-3);
  CHECK(m.var[1] < 1e-3);
  CHECK(m.var[0] >= 0.0);
  // the mass floor keeps the degenerate coordinates usable
  const auto mass2 = malt::compute_mass(m.var);
  CHECK(mass2.entry(0) >= 1.0);
}

TEST_CASE("online update: variances converge on a gaussian stream") {
  const AmnesiaSchedule schedule;  // a = 8
  const MassDiag mass = MassDiag::identity(2);
  OnlineMoments m = OnlineMoments::initial(2);
  Rng rng(77);
  const std::size_t chains = 4;
  std::vector<double> positions(chains * 2);
  std::vector<double> c_values(chains, 0.0);
  for (long n = 1; n <= 5000; ++n) {
    for (std::size_t k = 0; k < chains; ++k) {
      positions[k * 2] = 2.0 * rng.normal();
      positions[k * 2 + 1] = rng.normal();
    }
    m = malt::online_update(m, schedule, positions, c_values, mass, n);
  }
  CHECK(std::abs(m.var[0] - 4.0) / 4.0 < 0.10);
  CHECK(std::abs(m.var[1] - 1.0) < 0.10);
  CHECK(m.var[0] >= 0.0);
  CHECK(m.var[1] >= 0.0);
  CHECK(m.proj_var >= 0.0);
  // w tracks the top eigenvalue of the stream too
  CHECK(std::abs(m.lambda_hat() - 4.0) / 4.0 < 0.15);
}

TEST_CASE("preconditioning with estimated variances shrinks the spread") {
  // True variances (16, 4, 1) estimated with noise; applying the mass must
  // reduce max/min of the preconditioned variances.
  Rng rng(31);
  const std::vector<double> truth{16.0, 4.0, 1.0};
  std::vector<double> est(3);
  for (std::size_t i = 0; i < 3; ++i) est[i] = truth[i] * (1.0 + 0.1 * rng.normal());
  const auto mass = malt::compute_mass(est);
  std::vector<double> precond(3);
  for (std::size_t i = 0; i < 3; ++i) precond[i] = mass.entry(i) * truth[i];
  auto spread = [](const std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return hi / lo;
  };
  CHECK(spread(precond) < spread(truth));
}
