#include "qadapt/camera.hpp"

#include <cmath>
#include <numbers>

namespace qadapt {

Vec3 Ellipsoid::normal_at(const Vec3& p) const {
  return p.cwiseQuotient(semi_axes.cwiseProduct(semi_axes)).normalized();
}

std::vector<Landmark> make_landmarks(const Ellipsoid& body, int count) {
  std::vector<Landmark> out;
  out.reserve(count);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    const Vec3 unit(rho * std::cos(phi), rho * std::sin(phi), z);
    Landmark lm;
    lm.position = unit.cwiseProduct(body.semi_axes);
    lm.normal = body.normal_at(lm.position);
    out.push_back(lm);
  }
  return out;
}

Eigen::Vector2d PinholeCamera::project(const Vec3& p) const {
  return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
}

bool PinholeCamera::in_view(const Vec3& p) const {
  if (!(p.z() > 0.0)) return false;
  const Eigen::Vector2d uv = project(p);
  return uv.x() >= 0.0 && uv.x() <= width && uv.y() >= 0.0 && uv.y() <= height;
}

Mat3 nadir_camera_attitude(const Vec3& r, const Vec3& v) {
  const Vec3 z = -r.normalized();
  Vec3 x = v - v.dot(z) * z;
  if (x.norm() < 1e-9 * v.norm() || x.norm() == 0.0) {
    x = Vec3::UnitZ() - z.z() * z;
    if (x.norm() < 1e-9) x = Vec3::UnitX() - z.x() * z;
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 m;
  m.row(0) = x.transpose();
  m.row(1) = y.transpose();
  m.row(2) = z.transpose();
  return m;
}

Eigen::Vector2d pixel_measurement(const PinholeCamera& cam, const Mat3& r_inertial_to_cam,
                                  const Mat3& r_body_to_inertial, const Vec3& r_spacecraft,
                                  const Vec3& landmark) {
  return cam.project(r_inertial_to_cam * (r_body_to_inertial * landmark - r_spacecraft));
}

double first_ellipsoid_hit(const Ellipsoid& body, const Vec3& from, const Vec3& to) {
  const Vec3 inv = body.semi_axes.cwiseInverse();
  const Vec3 p = from.cwiseProduct(inv);
  const Vec3 d = (to - from).cwiseProduct(inv);
  const double a = d.squaredNorm();
  const double b = 2.0 * p.dot(d);
  const double c = p.squaredNorm() - 1.0;
  const double disc = b * b - 4.0 * a * c;
  if (a == 0.0 || disc < 0.0) return 2.0;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots
  const double qv = -0.5 * (b + std::copysign(sq, b));
  double t1 = qv / a;
  double t2 = qv != 0.0 ? c / qv : t1;
  if (t1 > t2) std::swap(t1, t2);
  if (t2 < 0.0) return 2.0;
  return t1 >= 0.0 ? t1 : 0.0;
}

bool landmark_visible(const Landmark& lm, const Vec3& camera_pos_body, const Vec3& sun_dir_body,
                      const Ellipsoid& body, const PinholeCamera& cam,
                      const Mat3& r_inertial_to_cam, const Mat3& body_to_inertial) {
  if (!(lm.normal.dot(sun_dir_body) > 0.0)) return false;
  // Facing the camera is implied by the occlusion test but cheap to check first.
  if (!(lm.normal.dot(camera_pos_body - lm.position) > 0.0)) return false;
  const Vec3 p_cam = r_inertial_to_cam * (body_to_inertial * (lm.position - camera_pos_body));
  if (!cam.in_view(p_cam)) return false;
  return first_ellipsoid_hit(body, camera_pos_body, lm.position) >= 1.0 - 1e-6;
}

}  // namespace qadapt
