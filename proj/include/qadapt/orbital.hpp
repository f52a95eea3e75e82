#pragma once

#include <Eigen/Dense>

namespace qadapt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Osculating Keplerian elements. Angles in radians, a in metres.
struct KeplerElements {
  double a = 0.0;
  double e = 0.0;
  double i = 0.0;
  double raan = 0.0;
  double argp = 0.0;
  double mean_anomaly = 0.0;
};

/// Quasi-nonsingular relative orbital elements (dimensionless).
struct RelativeOrbitalElements {
  double da = 0.0;
  double dlambda = 0.0;
  double dex = 0.0;
  double dey = 0.0;
  double dix = 0.0;
  double diy = 0.0;

  Eigen::Matrix<double, 6, 1> as_vector() const;
};

double wrap_pi(double angle);
double solve_kepler(double mean_anomaly, double e);
double true_to_mean_anomaly(double nu, double e);

Vec6 kepler_to_cartesian(const KeplerElements& el, double mu);
KeplerElements cartesian_to_kepler(const Vec6& rv, double mu);

/// True argument of latitude ω + ν of a Cartesian state, in [0, 2π).
double argument_of_latitude(const Vec6& rv, double mu);

RelativeOrbitalElements roe_from_kepler(const KeplerElements& chief,
                                        const KeplerElements& deputy);

/// Deputy elements reproducing the given ROE exactly (inverse of the map above).
KeplerElements kepler_from_roe(const KeplerElements& chief, const RelativeOrbitalElements& roe);

double orbit_period(double a, double mu);

/// Gravity of a slowly rotating small body: point mass, zonal J2 and J3 and an
/// optional body-fixed sectoral C22 term. The body spins about the inertial z
/// axis at `rotation_rate` from zero longitude at t = 0.
struct GravityField {
  double mu = 0.0;
  double r_ref = 1.0;
  double j2 = 0.0;
  double j3 = 0.0;
  double c22 = 0.0;
  double rotation_rate = 0.0;

  Vec3 acceleration(const Vec3& r_inertial, double t) const;
  double potential(const Vec3& r_inertial, double t) const;
};

/// Rotation taking body-fixed vectors to the inertial frame at time t.
Mat3 body_to_inertial(double rotation_rate, double t);

/// Elementary rotations used for attitude perturbations.
Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);
/// 3-2-1 sequence: R = R1(roll) R2(pitch) R3(yaw).
Mat3 euler_321(double yaw, double pitch, double roll);

}  // namespace qadapt
