#include "doctest.h"

#include <cmath>
#include <vector>

#include "qadapt/errors.hpp"
#include "qadapt/process_noise.hpp"
#include "qadapt/rng.hpp"

using namespace qadapt;

namespace {

double max_rel(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

// Printed closed form evaluated in long double, away from the cancellation
// regime, as an independent check of the coefficient algebra.
DmcCoefficients closed_form_ld(long double b, long double t) {
  const long double e = std::exp(-b * t), e2 = std::exp(-2 * b * t);
  DmcCoefficients c;
  c.c11 = static_cast<double>(
      (1 / (2 * b * b * b * b * b)) * (1 - e2 + 2 * b * t + 2 * b * b * b * t * t * t / 3 -
                                       2 * b * b * t * t - 4 * b * t * e));
  c.c21 = static_cast<double>((1 / (2 * b * b * b * b)) *
                              (e2 + 1 - 2 * e + 2 * b * t * e - 2 * b * t + b * b * t * t));
  c.c31 = static_cast<double>((1 / (2 * b * b * b)) * (1 - e2 - 2 * b * t * e));
  c.c22 = static_cast<double>((1 / (2 * b * b * b)) * (4 * e - 3 - e2 + 2 * b * t));
  c.c32 = static_cast<double>((1 / (2 * b * b)) * (e2 + 1 - 2 * e));
  c.c33 = static_cast<double>((1 / (2 * b)) * (1 - e2));
  return c;
}

}  // namespace

TEST_CASE("snc block for unit intensity and unit interval") {
  Mat q = snc_q_analytic(Vec::Ones(3), 1.0);
  REQUIRE(q.rows() == 6);
  for (int a = 0; a < 3; ++a) {
    CHECK(q(a, a) == doctest::Approx(1.0 / 3.0));
    CHECK(q(a, a + 3) == doctest::Approx(0.5));
    CHECK(q(a + 3, a) == doctest::Approx(0.5));
    CHECK(q(a + 3, a + 3) == doctest::Approx(1.0));
  }
  CHECK(q(0, 1) == 0.0);
  CHECK(q(0, 4) == 0.0);
}

TEST_CASE("snc per-axis determinant is dt^4/12 q^2") {
  const double dt = 2.5, qq = 0.7;
  Mat q = snc_q_analytic(Vec::Constant(1, qq), dt);
  CHECK(q.determinant() == doctest::Approx(std::pow(dt, 4) / 12.0 * qq * qq));
}

TEST_CASE("doubling dt multiplies the snc position variance by eight") {
  Mat q1 = snc_q_analytic(Vec::Constant(1, 0.3), 0.7);
  Mat q2 = snc_q_analytic(Vec::Constant(1, 0.3), 1.4);
  CHECK(std::abs(q2(0, 0) / q1(0, 0) - 8.0) < 1e-12 * 8.0);
  CHECK(std::abs(q2(1, 1) / q1(1, 1) - 2.0) < 1e-12 * 2.0);
}

TEST_CASE("negative intensity is rejected") {
  CHECK_THROWS_AS(snc_q_analytic(Vec::Constant(1, -1.0), 1.0), std::invalid_argument);
  CHECK_THROWS(dmc_q_analytic(Vec::Constant(1, -1.0), Vec::Constant(1, 0.1), 1.0));
}

TEST_CASE("snc agrees with quadrature on the double integrator") {
  Rng rng(5);
  auto model = snc_linear_model(1);
  for (int i = 0; i < 20; ++i) {
    const double dt = 10.0 * (1.0 - rng.uniform()) ;
    Vec q0 = Vec::Constant(1, 0.1 + rng.uniform());
    Mat num = q_numeric(model, q0, 0.0, dt);
    CHECK(max_rel(num, snc_q_analytic(q0, dt)) < 1e-10);
  }
  CHECK(q_numeric(model, Vec::Zero(1), 0.0, 1.0).isZero(0.0));
}

TEST_CASE("dmc coefficients at the one dimensional scenario values") {
  const double beta = 0.005, dt = 0.1;
  Vec b = Vec::Constant(1, beta);
  Mat num = q_numeric(dmc_linear_model(b), Vec::Ones(1), 0.0, dt);
  Mat ana = dmc_q_analytic(Vec::Ones(1), b, dt);
  CHECK(max_rel(ana, num) < 1e-8);
  // element-wise as well: the smallest entry is ~1e-7 of the largest
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(std::abs(ana(r, c) / num(r, c) - 1.0) < 1e-8);
  }
}

TEST_CASE("dmc coefficients match extended-precision closed form") {
  for (double beta : {1e-3, 0.05, 1.0}) {
    for (double dt : {1.0, 60.0, 300.0}) {
      if (beta * dt < 0.5) continue;
      DmcCoefficients a = dmc_coefficients(beta, dt);
      DmcCoefficients o = closed_form_ld(beta, dt);
      CHECK(a.c11 == doctest::Approx(o.c11).epsilon(1e-9));
      CHECK(a.c21 == doctest::Approx(o.c21).epsilon(1e-9));
      CHECK(a.c31 == doctest::Approx(o.c31).epsilon(1e-9));
      CHECK(a.c22 == doctest::Approx(o.c22).epsilon(1e-9));
      CHECK(a.c32 == doctest::Approx(o.c32).epsilon(1e-9));
      CHECK(a.c33 == doctest::Approx(o.c33).epsilon(1e-9));
    }
  }
}

TEST_CASE("dmc small-beta limit reduces to the integrated white noise block") {
  DmcCoefficients c = dmc_coefficients(1e-9, 1.0);
  CHECK(std::abs(c.c22 / (1.0 / 3.0) - 1.0) < 1e-4);
  CHECK(std::abs(c.c33 - 1.0) < 1e-4);
  CHECK(std::abs(c.c11 / (1.0 / 20.0) - 1.0) < 1e-4);
}

TEST_CASE("dmc large-beta limits") {
  const double beta = 50.0, dt = 1.0;
  DmcCoefficients c = dmc_coefficients(beta, dt);
  CHECK(c.c33 == doctest::Approx(1.0 / (2.0 * beta)).epsilon(1e-12));
  CHECK(c.c32 == doctest::Approx(1.0 / (2.0 * beta * beta)).epsilon(1e-12));
  DmcCoefficients far = dmc_coefficients(1000.0, 1.0);
  CHECK(std::isfinite(far.c11));
  CHECK(far.c33 == doctest::Approx(1.0 / 2000.0));
}

TEST_CASE("dmc analytic matches quadrature across the beta and dt grid") {
  for (double beta : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    for (double dt : {0.1, 1.0, 10.0, 60.0, 300.0}) {
      Vec b = Vec::Constant(1, beta);
      Mat num = q_numeric(dmc_linear_model(b), Vec::Ones(1), 0.0, dt);
      Mat ana = dmc_q_analytic(Vec::Ones(1), b, dt);
      CAPTURE(beta);
      CAPTURE(dt);
      CHECK(max_rel(ana, num) < 1e-8);
    }
  }
}

TEST_CASE("returned Q is PSD and linear in the intensity") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    Vec q(3), b(3);
    for (int k = 0; k < 3; ++k) {
      q(k) = std::pow(10.0, -12.0 + 12.0 * rng.uniform());
      b(k) = std::pow(10.0, -5.0 + 5.0 * rng.uniform());
    }
    const double dt = 0.1 + 300.0 * rng.uniform();
    Mat s = snc_q_analytic(q, dt);
    Mat d = dmc_q_analytic(q, b, dt);
    CHECK(is_psd(s));
    CHECK(is_psd(d));
    CHECK(max_rel(snc_q_analytic(3.0 * q, dt), 3.0 * s) < 1e-14);
    CHECK(max_rel(dmc_q_analytic(3.0 * q, b, dt), 3.0 * d) < 1e-14);
  }
}

TEST_CASE("stacked layouts place axes in blocks") {
  NoiseLayout s = NoiseLayout::stacked(2, 3, CompensationModel::kSnc);
  CHECK(s.state_dim == 12);
  CHECK(s.axis_count() == 6);
  CHECK(s.axes[4].position == 7);
  CHECK(s.axes[4].velocity == 10);
  CHECK(s.ss_indices.size() == 12);

  NoiseLayout d = NoiseLayout::stacked(2, 3, CompensationModel::kDmc);
  CHECK(d.state_dim == 18);
  CHECK(d.axes[3].position == 9);
  CHECK(d.axes[3].acceleration == 15);
  CHECK(d.ss_indices == std::vector<int>{0, 1, 2, 3, 4, 5, 9, 10, 11, 12, 13, 14});

  Vec q(6);
  q << 1, 2, 3, 4, 5, 6;
  Mat full = assemble_q(s, CompensationModel::kSnc, q, Vec(), 2.0);
  CHECK(full(7, 7) == doctest::Approx(5.0 * 8.0 / 3.0));
  CHECK(full(7, 10) == doctest::Approx(5.0 * 2.0));
  CHECK(full(7, 8) == 0.0);
}

TEST_CASE("gauss markov propagation") {
  Vec a = Vec::Ones(1), b = Vec::Constant(1, 0.005);
  CHECK(gauss_markov_propagate(a, b, 0.1)(0) == doctest::Approx(std::exp(-0.0005)));
  CHECK(gauss_markov_propagate(a, b, 0.0)(0) == 1.0);
  Vec half = gauss_markov_propagate(gauss_markov_propagate(a, b, 0.05), b, 0.05);
  CHECK(half(0) == doctest::Approx(gauss_markov_propagate(a, b, 0.1)(0)).epsilon(1e-15));
}

TEST_CASE("noise spec validation") {
  NoiseSpec s;
  s.qtilde = Vec::Ones(2);
  s.lower = Vec::Zero(2);
  s.alpha = 1.0;
  CHECK_NOTHROW(s.validate());
  s.alpha = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.alpha = 0.5;
  s.upper = Vec::Constant(2, -1.0);
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.upper.reset();
  s.beta = Vec::Zero(2);
  CHECK_THROWS_AS(s.validate(), ConfigError);
}
