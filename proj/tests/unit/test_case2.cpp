#include "doctest.h"

#include <cmath>

#include "qadapt/case2.hpp"
#include "qadapt/errors.hpp"
#include "qadapt/orbital.hpp"

using namespace qadapt;

namespace {

constexpr double kDeg = M_PI / 180.0;

KeplerElements chief() { return {40000.0, 0.01, 95.0 * kDeg, 0.0, 0.0, 0.0}; }

}  // namespace

TEST_CASE("kepler round trip") {
  const double mu = 4.463e5;
  KeplerElements el{42000.0, 0.2, 30 * kDeg, 40 * kDeg, 50 * kDeg, 60 * kDeg};
  KeplerElements back = cartesian_to_kepler(kepler_to_cartesian(el, mu), mu);
  CHECK(back.a == doctest::Approx(el.a).epsilon(1e-12));
  CHECK(back.e == doctest::Approx(el.e).epsilon(1e-12));
  CHECK(back.i == doctest::Approx(el.i).epsilon(1e-12));
  CHECK(back.raan == doctest::Approx(el.raan).epsilon(1e-12));
  CHECK(back.argp == doctest::Approx(el.argp).epsilon(1e-12));
  CHECK(back.mean_anomaly == doctest::Approx(el.mean_anomaly).epsilon(1e-12));
  CHECK(solve_kepler(true_to_mean_anomaly(1.0, 0.3), 0.3) ==
        doctest::Approx(2.0 * std::atan(std::sqrt(0.7 / 1.3) * std::tan(0.5))));
}

TEST_CASE("identical spacecraft have zero relative elements") {
  RelativeOrbitalElements roe = roe_from_kepler(chief(), chief());
  CHECK(roe.as_vector().isZero(0.0));
}

TEST_CASE("configured relative elements round trip") {
  Case2Config cfg;
  KeplerElements dep = case2_deputy_elements(cfg);
  Eigen::Matrix<double, 6, 1> back = roe_from_kepler(cfg.chief, dep).as_vector() * cfg.chief.a;
  Eigen::Matrix<double, 6, 1> want;
  want << 0, 5000, 0, 2000, 0, 2000;
  // 1e-9 km
  CHECK((back - want).cwiseAbs().maxCoeff() < 1e-6);
  // δe and δi are parallel
  CHECK(back(2) * back(5) - back(3) * back(4) == doctest::Approx(0.0));
}

TEST_CASE("relative eccentricity vector follows its definition") {
  KeplerElements c = chief();
  KeplerElements d = c;
  d.e = 0.012;
  d.argp = 0.3;
  d.mean_anomaly = -0.3;
  RelativeOrbitalElements roe = roe_from_kepler(c, d);
  CHECK(roe.dex == doctest::Approx(0.012 * std::cos(0.3) - 0.01));
  CHECK(roe.dey == doctest::Approx(0.012 * std::sin(0.3)));
}

TEST_CASE("point-mass truth integration conserves energy") {
  Case2Config cfg;
  cfg.gravity.j2 = 0.0;
  cfg.gravity.j3 = 0.0;
  cfg.gravity.c22 = 0.0;
  TruthPerturbations none;
  const double mu = cfg.gravity.mu;
  Vec6 x0 = kepler_to_cartesian(cfg.chief, mu);
  auto energy = [&](const Vec6& s) {
    return 0.5 * s.tail<3>().squaredNorm() - mu / s.head<3>().norm();
  };
  Vec6 x1 = propagate_truth(cfg, none, std::nullopt, x0, 0.0, 4.0 * cfg.period());
  CHECK(std::abs(energy(x1) / energy(x0) - 1.0) < 1e-9);
}

TEST_CASE("gravity acceleration is the gradient of the potential") {
  GravityField g{4.463e5, 16000.0, 0.1176, 0.01, 0.0533, 3.3e-4};
  Vec3 r(21000.0, -13000.0, 9000.0);
  const double t = 1234.0, h = 1e-2;
  Vec3 grad;
  for (int i = 0; i < 3; ++i) {
    Vec3 rp = r, rm = r;
    rp(i) += h;
    rm(i) -= h;
    grad(i) = (g.potential(rp, t) - g.potential(rm, t)) / (2 * h);
  }
  CHECK((g.acceleration(r, t) - grad).norm() < 1e-7 * g.acceleration(r, t).norm());
}

TEST_CASE("pinhole camera") {
  PinholeCamera cam;
  Eigen::Vector2d c = cam.project(Vec3(0, 0, 5000));
  CHECK(c.x() == cam.cx);
  CHECK(c.y() == cam.cy);
  CHECK(cam.in_view(Vec3(0, 0, 1)));
  CHECK_FALSE(cam.in_view(Vec3(0, 0, -1)));
  CHECK_FALSE(cam.in_view(Vec3(1e6, 0, 1)));

  // boresight points at the body centre
  Vec3 r(30000, 10000, -5000), v(0, 1, 0.2);
  Mat3 att = nadir_camera_attitude(r, v);
  CHECK((att * att.transpose() - Mat3::Identity()).norm() < 1e-12);
  CHECK(att.determinant() == doctest::Approx(1.0));
  Eigen::Vector2d uv = pixel_measurement(cam, att, Mat3::Identity(), r, Vec3::Zero());
  CHECK(uv.x() == doctest::Approx(cam.cx));
  CHECK(uv.y() == doctest::Approx(cam.cy));
}

TEST_CASE("landmark visibility tests") {
  Ellipsoid body{Vec3(17000, 5500, 5500)};
  PinholeCamera cam;
  cam.fx = cam.fy = 500.0;  // wide field so only lighting and occlusion matter
  const Vec3 sc(40000, 0, 0);
  const Mat3 att = nadir_camera_attitude(sc, Vec3(0, 1, 0));
  Landmark sub{Vec3(17000, 0, 0), Vec3(1, 0, 0)};
  Landmark far{Vec3(-17000, 0, 0), Vec3(-1, 0, 0)};
  const Vec3 sun_behind(1, 0, 0);
  CHECK(landmark_visible(sub, sc, sun_behind, body, cam, att, Mat3::Identity()));
  CHECK_FALSE(landmark_visible(far, sc, -sun_behind, body, cam, att, Mat3::Identity()));
  CHECK_FALSE(landmark_visible(sub, sc, -sun_behind, body, cam, att, Mat3::Identity()));
  // occlusion alone, normal forced toward the camera
  Landmark hidden{Vec3(-17000, 0, 0), Vec3(1, 0, 0)};
  CHECK(first_ellipsoid_hit(body, sc, hidden.position) < 1.0);
  CHECK_FALSE(landmark_visible(hidden, sc, sun_behind, body, cam, att, Mat3::Identity()));
}

TEST_CASE("landmarks lie on the ellipsoid with outward normals") {
  Ellipsoid body{Vec3(17000, 5500, 5500)};
  auto lms = make_landmarks(body, 100);
  CHECK(lms.size() == 100);
  for (const auto& lm : lms) {
    CHECK(lm.position.cwiseQuotient(body.semi_axes).squaredNorm() == doctest::Approx(1.0));
    CHECK(lm.normal.dot(lm.position) > 0.0);
    CHECK(lm.normal.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("range rate of a purely tangential relative velocity is zero") {
  Case2Config cfg;
  cfg.orbits = 0.05;
  cfg.metric_orbits = 0.05;
  Case2Truth truth = case2_truth(cfg);
  FormationMeasurement m(cfg, truth, 1, false);
  Vec x = Vec::Zero(12);
  x.segment<3>(0) = Vec3(30000, 0, 0);
  x.segment<3>(6) = Vec3(30000, 1000, 0);
  x.segment<3>(9) = Vec3(0, 0, 2.0);
  Vec z = m.measure(x);
  CHECK(z(0) == doctest::Approx(1000.0));
  CHECK(z(1) == doctest::Approx(0.0));
}

TEST_CASE("maneuver size and direction") {
  Case2Config cfg;
  CHECK(cfg.maneuver_accel * cfg.maneuver_duration == doctest::Approx(0.648));
  cfg.maneuver = ManeuverMode::kPerfect;
  TruthPerturbations p = make_perturbations(cfg);
  Maneuver m = plan_maneuver(cfg, p);
  CHECK(m.start > 3.2 * cfg.period());
  CHECK(m.start < 4.2 * cfg.period());
  CHECK(m.accel.norm() == doctest::Approx(720e-6));
  const Vec6 s = propagate_truth(cfg, p, std::nullopt, kepler_to_cartesian(cfg.chief, cfg.gravity.mu),
                                 0.0, m.start);
  CHECK(argument_of_latitude(s, cfg.gravity.mu) == doctest::Approx(M_PI / 2).epsilon(1e-6));
  const Vec3 h = s.head<3>().cross(Vec3(s.tail<3>())).normalized();
  CHECK(m.accel.normalized().dot(h) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(m.active(m.start));
  CHECK_FALSE(m.active(m.start + 900.0));
}

TEST_CASE("imperfect maneuver perturbs magnitude and direction") {
  Case2Config cfg;
  cfg.maneuver = ManeuverMode::kImperfect;
  Case2Truth truth;
  Maneuver nominal;
  nominal.start = 100.0;
  nominal.duration = 900.0;
  nominal.accel = Vec3(0, 0, -720e-6);
  truth.maneuver = nominal;
  double sum = 0.0, sum2 = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    Rng rng(1, i, Stream::kManeuverError);
    auto m = filter_maneuver(cfg, truth, rng);
    REQUIRE(m.has_value());
    const double s = m->accel.norm() / 720e-6 - 1.0;
    sum += s;
    sum2 += s * s;
    CHECK(m->start == 100.0);
  }
  const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  CHECK(sd == doctest::Approx(0.15).epsilon(0.05));

  cfg.maneuver = ManeuverMode::kPerfect;
  Rng rng(2);
  CHECK(filter_maneuver(cfg, truth, rng)->accel == nominal.accel);
}

TEST_CASE("truth is deterministic and measurements carry configured noise") {
  Case2Config cfg;
  cfg.orbits = 0.5;
  cfg.metric_orbits = 0.5;
  Case2Truth a = case2_truth(cfg), b = case2_truth(cfg);
  REQUIRE(a.epochs.size() == b.epochs.size());
  CHECK(a.epochs.back().deputy == b.epochs.back().deputy);
  CHECK(a.epochs.back().chief_visible == b.epochs.back().chief_visible);

  double px = 0.0, rr = 0.0;
  int npx = 0, nrr = 0;
  Rng noise(4);
  for (std::size_t k = 1; k < a.epochs.size(); ++k) {
    Vec truth_state(12);
    truth_state << a.epochs[k].chief, a.epochs[k].deputy;
    FormationMeasurement m(cfg, a, k, false);
    const Vec d = case2_measurement(cfg, a, k, noise) - m.measure(truth_state);
    rr += d(0) * d(0);
    ++nrr;
    for (int i = 2; i < d.size(); ++i) {
      px += d(i) * d(i);
      ++npx;
    }
  }
  REQUIRE(npx > 100);
  CHECK(std::abs(std::sqrt(px / npx) / 0.5 - 1.0) < 3.0 / std::sqrt(2.0 * npx));
  CHECK(std::abs(std::sqrt(rr / nrr) / 0.1 - 1.0) < 3.0 / std::sqrt(2.0 * nrr));
}

TEST_CASE("filter dynamics match truth when the force models agree") {
  Case2Config cfg;
  cfg.gravity.j3 = 0.0;
  cfg.third_body = false;
  cfg.area_to_mass = 0.0;
  TruthPerturbations p = make_perturbations(cfg);
  FormationDynamics dyn(cfg.gravity, 10.0, false, 1e-5, std::nullopt);
  Vec x(12);
  x << kepler_to_cartesian(cfg.chief, cfg.gravity.mu), kepler_to_cartesian(case2_deputy_elements(cfg), cfg.gravity.mu);
  Vec y = dyn.propagate(x, 0.0, 600.0);
  Vec6 t = propagate_truth(cfg, p, std::nullopt, x.head<6>(), 0.0, 600.0);
  CHECK((y.head<3>() - t.head<3>()).norm() < 1e-3);
}

TEST_CASE("configuration validation") {
  Case2Config cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.sigma_pixel = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
