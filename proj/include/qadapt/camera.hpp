#pragma once

#include <vector>

#include "qadapt/orbital.hpp"

namespace qadapt {

struct Landmark {
  Vec3 position;  // body-fixed, m
  Vec3 normal;    // body-fixed outward unit normal
};

/// Triaxial ellipsoid x²/a² + y²/b² + z²/c² = 1 in the body-fixed frame.
struct Ellipsoid {
  Vec3 semi_axes{1.0, 1.0, 1.0};

  Vec3 normal_at(const Vec3& p) const;
};

/// `count` landmarks on the ellipsoid from a Fibonacci lattice on the unit
/// sphere, scaled onto the surface, with outward ellipsoid normals.
std::vector<Landmark> make_landmarks(const Ellipsoid& body, int count);

struct PinholeCamera {
  double fx = 3455.0;  // focal length over pixel pitch, px
  double fy = 3455.0;
  double cx = 1296.0;  // principal point, px
  double cy = 972.0;
  double width = 2592.0;  // detector size, px
  double height = 1944.0;

  /// Pixel coordinates of a point already expressed in the camera frame.
  Eigen::Vector2d project(const Vec3& p_cam) const;
  bool in_view(const Vec3& p_cam) const;
};

/// ACI→CF rotation for a camera at inertial position r that points its +z axis
/// at the body centre. +x is the velocity direction projected off the
/// boresight (falls back to inertial z when v is parallel to r).
Mat3 nadir_camera_attitude(const Vec3& r, const Vec3& v);

/// Pixel measurement of a body-fixed point:
/// [uw, vw, w]ᵀ = K R_cf (R_body→inertial L − r).
Eigen::Vector2d pixel_measurement(const PinholeCamera& cam, const Mat3& r_inertial_to_cam,
                                  const Mat3& r_body_to_inertial, const Vec3& r_spacecraft,
                                  const Vec3& landmark);

/// Lit (normal·sun > 0), inside the detector and not hidden behind the
/// ellipsoid along the line of sight. All vectors in the body-fixed frame
/// except `r_inertial_to_cam`, which maps inertial to camera axes, and
/// `body_to_inertial`.
bool landmark_visible(const Landmark& lm, const Vec3& camera_pos_body, const Vec3& sun_dir_body,
                      const Ellipsoid& body, const PinholeCamera& cam,
                      const Mat3& r_inertial_to_cam, const Mat3& body_to_inertial);

/// Parameter t ∈ [0, 1] at which the segment from `from` to `to` first
/// enters the ellipsoid, or a value > 1 when it does not.
double first_ellipsoid_hit(const Ellipsoid& body, const Vec3& from, const Vec3& to);

}  // namespace qadapt
