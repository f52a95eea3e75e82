#include "qadapt/case2.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>

#include "qadapt/errors.hpp"

namespace qadapt {

namespace {

constexpr double kAu = 1.495978707e11;          // m
constexpr double kMuSun = 1.32712440018e20;     // m³/s²
constexpr double kSolarPressure1Au = 4.56e-6;   // N/m²

using TruthState = std::array<double, 6>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 18, 1>;

GravityField filter_gravity(const GravityField& g) {
  GravityField f = g;
  f.j3 = 0.0;
  f.c22 = 0.0;
  return f;
}

// Split [t0, t1] at burn boundaries; each piece has constant thrust state.
std::vector<std::pair<double, double>> split_interval(double t0, double t1,
                                                      const std::optional<Maneuver>& burn) {
  std::vector<double> cuts{t0};
  if (burn) {
    for (double c : {burn->start, burn->start + burn->duration}) {
      if (c > t0 && c < t1) cuts.push_back(c);
    }
  }
  cuts.push_back(t1);
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) out.emplace_back(cuts[i], cuts[i + 1]);
  return out;
}

}  // namespace

void Case2Config::validate() const {
  if (!(gravity.mu > 0.0 && gravity.r_ref > 0.0)) throw ConfigError("case2: mu and r_ref must be positive");
  if ((semi_axes.array() <= 0.0).any()) throw ConfigError("case2: semi-axes must be positive");
  if (landmark_count < 1) throw ConfigError("case2: landmark_count must be >= 1");
  if (sun_direction.norm() == 0.0) throw ConfigError("case2: sun direction must be nonzero");
  if (!(chief.a > semi_axes.maxCoeff())) throw ConfigError("case2: chief orbit intersects the body");
  if (!(chief.e >= 0.0 && chief.e < 1.0)) throw ConfigError("case2: chief eccentricity must lie in [0, 1)");
  if (!(interval > 0.0)) throw ConfigError("case2: interval must be positive");
  if (!(orbits * period() >= interval)) throw ConfigError("case2: duration shorter than one interval");
  if (!(sigma_range > 0.0 && sigma_range_rate > 0.0 && sigma_pixel > 0.0)) {
    throw ConfigError("case2: measurement standard deviations must be positive");
  }
  if (!(p0_sigma_pos > 0.0 && p0_sigma_vel > 0.0 && p0_sigma_acc > 0.0)) {
    throw ConfigError("case2: initial standard deviations must be positive");
  }
  if (!(filter_step > 0.0)) throw ConfigError("case2: filter_step must be positive");
  if (!(truth_tolerance > 0.0)) throw ConfigError("case2: truth_tolerance must be positive");
  if (!(qtilde0 >= 0.0)) throw ConfigError("case2: qtilde0 must be nonnegative");
  if (!(qtilde0_gm >= 0.0)) throw ConfigError("case2: qtilde0_gm must be nonnegative");
  if (window == 0) throw ConfigError("case2: window must be >= 1");
  if (adaptation_delay < 0) throw ConfigError("case2: adaptation_delay must be >= 0");
  if (!(beta > 0.0)) throw ConfigError("case2: beta must be positive");
  if (!(admc_alpha > 0.0 && admc_alpha <= 1.0)) throw ConfigError("case2: alpha must lie in (0, 1]");
  if (!(lower_bound >= 0.0)) throw ConfigError("case2: lower bound must be nonnegative");
  if (upper_bound && !(*upper_bound >= lower_bound)) throw ConfigError("case2: upper bound below lower bound");
  if (!(imm_q_low > 0.0 && imm_q_high > imm_q_low)) throw ConfigError("case2: IMM bounds must satisfy 0 < low < high");
  if (!(imm_stay > 0.0 && imm_stay < 1.0)) throw ConfigError("case2: imm_stay must lie in (0, 1)");
  if (!(maneuver_accel >= 0.0 && maneuver_duration >= 0.0)) throw ConfigError("case2: maneuver must be nonnegative");
  if (!(metric_orbits > 0.0 && metric_orbits <= orbits)) throw ConfigError("case2: metric_orbits must lie in (0, orbits]");
}

Vec3 TruthPerturbations::acceleration(const Vec3& r) const {
  Vec3 a = srp;
  if (mu_sun > 0.0) {
    const Vec3 d = sun_position - r;
    a += mu_sun * (d / std::pow(d.norm(), 3) - sun_position / std::pow(sun_position.norm(), 3));
  }
  return a;
}

TruthPerturbations make_perturbations(const Case2Config& cfg) {
  TruthPerturbations p;
  const Vec3 s = cfg.sun_direction.normalized();
  const double dist = cfg.sun_distance_au * kAu;
  const double pressure = kSolarPressure1Au / (cfg.sun_distance_au * cfg.sun_distance_au);
  p.srp = -cfg.srp_cr * pressure * cfg.area_to_mass * s;
  if (cfg.third_body) {
    p.sun_position = dist * s;
    p.mu_sun = kMuSun;
  }
  return p;
}

Vec6 propagate_truth(const Case2Config& cfg, const TruthPerturbations& pert,
                     const std::optional<Maneuver>& burn, const Vec6& rv, double t0, double t1) {
  namespace odeint = boost::numeric::odeint;
  TruthState x;
  for (int i = 0; i < 6; ++i) x[i] = rv(i);
  if (t1 == t0) return rv;
  for (const auto& [a, b] : split_interval(t0, t1, burn)) {
    const bool thrust = burn && burn->active(0.5 * (a + b));
    auto rhs = [&](const TruthState& s, TruthState& ds, double t) {
      const Vec3 r(s[0], s[1], s[2]);
      Vec3 acc = cfg.gravity.acceleration(r, t) + pert.acceleration(r);
      if (thrust) acc += burn->accel;
      ds[0] = s[3];
      ds[1] = s[4];
      ds[2] = s[5];
      ds[3] = acc.x();
      ds[4] = acc.y();
      ds[5] = acc.z();
    };
    auto stepper = odeint::make_controlled(cfg.truth_tolerance * 1e3, cfg.truth_tolerance,
                                           odeint::runge_kutta_fehlberg78<TruthState>());
    try {
      odeint::integrate_adaptive(stepper, rhs, x, a, b, std::min(10.0, b - a));
    } catch (const std::exception& e) {
      throw PropagationError(std::string("truth integration failed: ") + e.what());
    }
  }
  Vec6 out;
  for (int i = 0; i < 6; ++i) out(i) = x[i];
  if (!out.allFinite()) throw PropagationError("truth integration produced non-finite state");
  return out;
}

KeplerElements case2_deputy_elements(const Case2Config& cfg) {
  RelativeOrbitalElements roe;
  const auto v = cfg.roe_scaled / cfg.chief.a;
  roe.da = v(0);
  roe.dlambda = v(1);
  roe.dex = v(2);
  roe.dey = v(3);
  roe.dix = v(4);
  roe.diy = v(5);
  return kepler_from_roe(cfg.chief, roe);
}

Maneuver plan_maneuver(const Case2Config& cfg, const TruthPerturbations& pert) {
  const double mu = cfg.gravity.mu;
  const double t_search = cfg.maneuver_after_periods * cfg.period();
  Vec6 x = propagate_truth(cfg, pert, std::nullopt, kepler_to_cartesian(cfg.chief, mu), 0.0,
                           t_search);
  const double target = cfg.maneuver_latitude;
  auto offset = [&](const Vec6& s) { return wrap_pi(argument_of_latitude(s, mu) - target); };
  const double probe = 10.0;
  double t = t_search;
  double f = offset(x);
  for (int i = 0; i < 100000; ++i) {
    const Vec6 xn = propagate_truth(cfg, pert, std::nullopt, x, t, t + probe);
    const double fn = offset(xn);
    if (f < 0.0 && fn >= 0.0 && fn - f < std::numbers::pi) {
      double lo = t, hi = t + probe;
      Vec6 x_lo = x;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Vec6 xm = propagate_truth(cfg, pert, std::nullopt, x_lo, lo, mid);
        if (offset(xm) < 0.0) {
          lo = mid;
          x_lo = xm;
        } else {
          hi = mid;
        }
      }
      const Vec3 h = x_lo.head<3>().cross(Vec3(x_lo.tail<3>()));
      Maneuver m;
      m.start = hi;
      m.duration = cfg.maneuver_duration;
      m.accel = -cfg.maneuver_accel * h.normalized();
      return m;
    }
    x = xn;
    f = fn;
    t += probe;
  }
  throw ConfigError("case2: maneuver latitude never reached");
}

Case2Truth case2_truth(const Case2Config& cfg) {
  cfg.validate();
  Case2Truth truth;
  truth.body.semi_axes = cfg.semi_axes;
  truth.landmarks = make_landmarks(truth.body, cfg.landmark_count);
  truth.perturbations = make_perturbations(cfg);
  if (cfg.maneuver != ManeuverMode::kNone) truth.maneuver = plan_maneuver(cfg, truth.perturbations);

  const double mu = cfg.gravity.mu;
  const GravityField model = filter_gravity(cfg.gravity);
  const Vec3 sun = cfg.sun_direction.normalized();
  const long steps = static_cast<long>(std::floor(cfg.orbits * cfg.period() / cfg.interval + 1e-9));
  truth.epochs.resize(steps + 1);

  Vec6 chief = kepler_to_cartesian(cfg.chief, mu);
  Vec6 deputy = kepler_to_cartesian(case2_deputy_elements(cfg), mu);
  for (long k = 0; k <= steps; ++k) {
    const double t = k * cfg.interval;
    if (k > 0) {
      const double t_prev = (k - 1) * cfg.interval;
      chief = propagate_truth(cfg, truth.perturbations, truth.maneuver, chief, t_prev, t);
      deputy = propagate_truth(cfg, truth.perturbations, std::nullopt, deputy, t_prev, t);
    }
    Case2Epoch& e = truth.epochs[k];
    e.t = t;
    e.chief = chief;
    e.deputy = deputy;
    auto unmodeled = [&](const Vec6& s) {
      const Vec3 r = s.head<3>();
      return Vec3(cfg.gravity.acceleration(r, t) + truth.perturbations.acceleration(r) -
                  model.acceleration(r, t));
    };
    e.chief_unmodeled = unmodeled(chief);
    e.deputy_unmodeled = unmodeled(deputy);
    e.body_to_inertial = body_to_inertial(cfg.gravity.rotation_rate, t);
    e.chief_camera = nadir_camera_attitude(chief.head<3>(), chief.tail<3>());
    e.deputy_camera = nadir_camera_attitude(deputy.head<3>(), deputy.tail<3>());
    if (k == 0) continue;
    const Mat3 i2b = e.body_to_inertial.transpose();
    const Vec3 sun_body = i2b * sun;
    auto visible = [&](const Vec6& s, const Mat3& cam) {
      std::vector<int> ids;
      const Vec3 pos_body = i2b * s.head<3>();
      for (int i = 0; i < static_cast<int>(truth.landmarks.size()); ++i) {
        if (landmark_visible(truth.landmarks[i], pos_body, sun_body, truth.body, cfg.camera, cam,
                             e.body_to_inertial)) {
          ids.push_back(i);
          if (cfg.max_landmarks_per_camera > 0 &&
              static_cast<int>(ids.size()) >= cfg.max_landmarks_per_camera) {
            break;
          }
        }
      }
      return ids;
    };
    e.chief_visible = visible(chief, e.chief_camera);
    e.deputy_visible = visible(deputy, e.deputy_camera);
  }
  return truth;
}

Vec case2_measurement(const Case2Config& cfg, const Case2Truth& truth, std::size_t k, Rng& noise) {
  const Case2Epoch& e = truth.epochs.at(k);
  const int m = 2 + 2 * static_cast<int>(e.chief_visible.size() + e.deputy_visible.size());
  Vec truth_state(12);
  truth_state << e.chief, e.deputy;
  const FormationMeasurement model(cfg, truth, k, false);
  Vec z = model.measure(truth_state);
  const Mat r = model.noise();
  for (int i = 0; i < m; ++i) z(i) += std::sqrt(r(i, i)) * noise.normal();
  return z;
}

std::optional<Maneuver> filter_maneuver(const Case2Config& cfg, const Case2Truth& truth,
                                        Rng& rng) {
  if (!truth.maneuver) return std::nullopt;
  Maneuver m = *truth.maneuver;
  if (cfg.maneuver == ManeuverMode::kImperfect) {
    const double scale = 1.0 + cfg.maneuver_magnitude_sigma * rng.normal();
    const double yaw = cfg.maneuver_angle_sigma * rng.normal();
    const double pitch = cfg.maneuver_angle_sigma * rng.normal();
    const double roll = cfg.maneuver_angle_sigma * rng.normal();
    m.accel = scale * (euler_321(yaw, pitch, roll) * m.accel);
  }
  return m;
}

FormationDynamics::FormationDynamics(const GravityField& gravity, double step, bool empirical,
                                     double beta, std::optional<Maneuver> burn)
    : gravity_(filter_gravity(gravity)),
      step_(step),
      empirical_(empirical),
      beta_(beta),
      burn_(std::move(burn)) {}

void FormationDynamics::rk4(Vec& x, double t0, double t1) const {
  const int block = formation_block(empirical_);
  const int n = state_dim();
  const bool thrust = burn_ && burn_->active(0.5 * (t0 + t1));
  auto f = [&](const SmallVec& s, double t, SmallVec& ds) {
    for (int sc = 0; sc < 2; ++sc) {
      const int b = sc * block;
      const Vec3 r = s.segment<3>(b);
      Vec3 acc = gravity_.acceleration(r, t);
      if (empirical_) acc += s.segment<3>(b + 6);
      if (sc == 0 && thrust) acc += burn_->accel;
      ds.segment<3>(b) = s.segment<3>(b + 3);
      ds.segment<3>(b + 3) = acc;
      if (empirical_) ds.segment<3>(b + 6) = -beta_ * s.segment<3>(b + 6);
    }
  };
  const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step_ - 1e-9)));
  const double h = (t1 - t0) / steps;
  SmallVec s = x;
  SmallVec k1(n), k2(n), k3(n), k4(n), tmp(n);
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    f(s, t, k1);
    tmp = s + 0.5 * h * k1;
    f(tmp, t + 0.5 * h, k2);
    tmp = s + 0.5 * h * k2;
    f(tmp, t + 0.5 * h, k3);
    tmp = s + h * k3;
    f(tmp, t + h, k4);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t0 + (i + 1) * h;
  }
  x = s;
}

Vec FormationDynamics::propagate(const Vec& x, double t0, double t1) const {
  if (x.size() != state_dim()) throw DimensionError("FormationDynamics: state size mismatch");
  Vec out = x;
  if (t1 == t0) return out;
  for (const auto& [a, b] : split_interval(t0, t1, burn_)) rk4(out, a, b);
  if (!out.allFinite()) throw PropagationError("filter propagation produced non-finite state");
  return out;
}

Mat FormationDynamics::noise_map(double) const {
  const int block = formation_block(empirical_);
  Mat g = Mat::Zero(state_dim(), 6);
  const int offset = empirical_ ? 6 : 3;
  for (int sc = 0; sc < 2; ++sc) {
    g.block(sc * block + offset, 3 * sc, 3, 3).setIdentity();
  }
  return g;
}

FormationMeasurement::FormationMeasurement(const Case2Config& cfg, const Case2Truth& truth,
                                           std::size_t k, bool empirical)
    : truth_(&truth), epoch_(&truth.epochs.at(k)), camera_(cfg.camera),
      block_(formation_block(empirical)) {
  dim_ = 2 + 2 * static_cast<int>(epoch_->chief_visible.size() + epoch_->deputy_visible.size());
  Vec d(dim_);
  d(0) = cfg.sigma_range * cfg.sigma_range;
  d(1) = cfg.sigma_range_rate * cfg.sigma_range_rate;
  d.tail(dim_ - 2).setConstant(cfg.sigma_pixel * cfg.sigma_pixel);
  r_ = d.asDiagonal();
}

Vec FormationMeasurement::measure(const Vec& x) const {
  Vec z(dim_);
  const Vec3 rc = x.segment<3>(0), vc = x.segment<3>(3);
  const Vec3 rd = x.segment<3>(block_), vd = x.segment<3>(block_ + 3);
  const Vec3 rho = rd - rc;
  const double range = rho.norm();
  z(0) = range;
  z(1) = rho.dot(vd - vc) / range;
  int i = 2;
  for (int id : epoch_->chief_visible) {
    z.segment<2>(i) = pixel_measurement(camera_, epoch_->chief_camera, epoch_->body_to_inertial,
                                        rc, truth_->landmarks[id].position);
    i += 2;
  }
  for (int id : epoch_->deputy_visible) {
    z.segment<2>(i) = pixel_measurement(camera_, epoch_->deputy_camera, epoch_->body_to_inertial,
                                        rd, truth_->landmarks[id].position);
    i += 2;
  }
  return z;
}

}  // namespace qadapt
