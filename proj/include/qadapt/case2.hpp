#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "qadapt/adaptive.hpp"
#include "qadapt/camera.hpp"
#include "qadapt/filter_core.hpp"
#include "qadapt/orbital.hpp"
#include "qadapt/rng.hpp"

namespace qadapt {

enum class ManeuverMode { kNone, kPerfect, kImperfect };

/// Two spacecraft in formation about a small rotating body, ranging to each
/// other and imaging surface landmarks.
struct Case2Config {
  // Body (Eros-like magnitudes)
  GravityField gravity{4.463e5, 16000.0, 0.1176, 0.01, 0.0, 3.3118e-4};
  Vec3 semi_axes{17000.0, 5500.0, 5500.0};
  int landmark_count = 100;

  // Sun and radiation pressure, both held constant over the run
  Vec3 sun_direction{1.0, 1.0, 0.2};  // inertial, normalized on use
  double sun_distance_au = 1.46;
  double srp_cr = 1.2;
  double area_to_mass = 0.01;  // m²/kg
  bool third_body = true;

  // Formation geometry: chief elements (angles in degrees in files) and
  // a_c-scaled relative elements in metres.
  KeplerElements chief{40000.0, 0.01, 95.0 * 0.017453292519943295, 0.0, 0.0, 0.0};
  Eigen::Matrix<double, 6, 1> roe_scaled = (Eigen::Matrix<double, 6, 1>() << 0, 5000, 0, 2000, 0, 2000).finished();

  // Schedule and measurements
  double interval = 300.0;  // s
  double orbits = 4.0;
  double sigma_range = 0.1;         // m
  double sigma_range_rate = 1e-3;   // m/s
  double sigma_pixel = 0.5;         // px
  PinholeCamera camera;
  int max_landmarks_per_camera = 0;  // 0 keeps every visible landmark

  // Filter
  double p0_sigma_pos = 1000.0;  // m
  double p0_sigma_vel = 0.05;    // m/s
  double p0_sigma_acc = 1e-5;    // m/s², empirical accelerations
  double filter_step = 60.0;     // s, RK4
  double truth_tolerance = 1e-12;

  double qtilde0 = 1e-7;       // m²/s³, white-noise compensation
  double qtilde0_gm = 1e-12;   // m²/s⁵, Gauss–Markov compensation
  std::size_t window = 30;
  int adaptation_delay = 10;
  double beta = 1e-5;
  double admc_alpha = 0.02;
  double lower_bound = 0.0;
  std::optional<double> upper_bound;
  WeightingMode weighting = WeightingMode::kWindowed;
  double imm_q_low = 1e-8;
  double imm_q_high = 1e-6;
  double imm_stay = 0.99;

  // Maneuver
  ManeuverMode maneuver = ManeuverMode::kNone;
  double maneuver_accel = 720e-6;  // m/s²
  double maneuver_duration = 900.0;
  double maneuver_after_periods = 3.2;
  double maneuver_latitude = 90.0 * 0.017453292519943295;  // rad
  double maneuver_magnitude_sigma = 0.15;                  // fraction
  double maneuver_angle_sigma = 0.5 * 0.017453292519943295;  // rad

  double metric_orbits = 2.0;  // trailing orbits used for metrics
  double outage_factor = 3.0;
  double divergence_factor = 100.0;
  int divergence_steps = 10;

  void validate() const;
  double period() const { return orbit_period(chief.a, gravity.mu); }
};

struct Maneuver {
  double start = 0.0;
  double duration = 0.0;
  Vec3 accel = Vec3::Zero();  // inertial, constant during the burn

  bool active(double t) const { return t >= start && t < start + duration; }
};

/// Non-gravitational and third-body accelerations of the truth model.
struct TruthPerturbations {
  Vec3 srp = Vec3::Zero();
  Vec3 sun_position = Vec3::Zero();  // m, inertial
  double mu_sun = 0.0;

  Vec3 acceleration(const Vec3& r) const;
};

/// Per-epoch geometry shared by every Monte-Carlo run of a configuration.
struct Case2Epoch {
  double t = 0.0;
  Vec6 chief = Vec6::Zero();
  Vec6 deputy = Vec6::Zero();
  Vec3 chief_unmodeled = Vec3::Zero();   // truth minus filter-model acceleration
  Vec3 deputy_unmodeled = Vec3::Zero();
  Mat3 body_to_inertial = Mat3::Identity();
  Mat3 chief_camera = Mat3::Identity();   // inertial → camera
  Mat3 deputy_camera = Mat3::Identity();
  std::vector<int> chief_visible;
  std::vector<int> deputy_visible;
};

struct Case2Truth {
  std::vector<Case2Epoch> epochs;  // epochs[0] is the initial state, no measurement
  std::vector<Landmark> landmarks;
  std::optional<Maneuver> maneuver;
  Ellipsoid body;
  TruthPerturbations perturbations;
};

/// Integrates both spacecraft with the high-accuracy adaptive integrator and
/// records the geometry needed for measurements. Deterministic in the config.
Case2Truth case2_truth(const Case2Config& cfg);

/// Noisy measurement vector for one epoch: range, range-rate, then chief
/// pixel pairs and deputy pixel pairs in landmark order.
Vec case2_measurement(const Case2Config& cfg, const Case2Truth& truth, std::size_t k, Rng& noise);

/// Integrates a single Cartesian state with the truth force model.
Vec6 propagate_truth(const Case2Config& cfg, const TruthPerturbations& pert,
                     const std::optional<Maneuver>& burn, const Vec6& rv, double t0, double t1);

TruthPerturbations make_perturbations(const Case2Config& cfg);

/// Filter dynamics: point mass + J2 for both spacecraft, optional empirical
/// Gauss–Markov accelerations and an optional chief maneuver, integrated with
/// fixed-step RK4 that splits at maneuver boundaries.
class FormationDynamics : public DynamicsModel {
 public:
  FormationDynamics(const GravityField& gravity, double step, bool empirical, double beta,
                    std::optional<Maneuver> burn);

  int state_dim() const override { return empirical_ ? 18 : 12; }
  Vec propagate(const Vec& x, double t0, double t1) const override;
  Mat noise_map(double t) const override;

 private:
  // One constant-thrust piece of an interval.
  void rk4(Vec& x, double t0, double t1) const;

  GravityField gravity_;
  double step_;
  bool empirical_;
  double beta_;
  std::optional<Maneuver> burn_;
};

/// Range, range-rate and pixel measurements for one epoch's visible landmarks.
class FormationMeasurement : public MeasurementModel {
 public:
  FormationMeasurement(const Case2Config& cfg, const Case2Truth& truth, std::size_t k,
                       bool empirical);

  int meas_dim() const override { return dim_; }
  Vec measure(const Vec& x) const override;
  Mat noise() const override { return r_; }

 private:
  const Case2Truth* truth_;
  const Case2Epoch* epoch_;
  PinholeCamera camera_;
  int block_;  // per-spacecraft state block length
  int dim_;
  Mat r_;
};

/// Index ranges of each spacecraft block inside the filter state.
inline int formation_block(bool empirical) { return empirical ? 9 : 6; }

/// The deputy initial state from the configured relative elements.
KeplerElements case2_deputy_elements(const Case2Config& cfg);

/// Nominal maneuver: the first crossing of the target argument of latitude
/// after the configured number of periods, thrusting against the chief's
/// orbit normal at that instant.
Maneuver plan_maneuver(const Case2Config& cfg, const TruthPerturbations& pert);

/// Filter-side maneuver for one run: exact for the perfect mode, magnitude
/// and 3-2-1 direction errors for the imperfect mode.
std::optional<Maneuver> filter_maneuver(const Case2Config& cfg, const Case2Truth& truth,
                                        Rng& rng);

}  // namespace qadapt
