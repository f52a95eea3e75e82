#include "qadapt/orbital.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qadapt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Eigen::Matrix<double, 6, 1> RelativeOrbitalElements::as_vector() const {
  Eigen::Matrix<double, 6, 1> v;
  v << da, dlambda, dex, dey, dix, diy;
  return v;
}

double wrap_pi(double angle) {
  double a = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - std::numbers::pi;
}

double solve_kepler(double mean_anomaly, double e) {
  if (!(e >= 0.0 && e < 1.0)) throw std::invalid_argument("solve_kepler: e must lie in [0, 1)");
  const double m = wrap_pi(mean_anomaly);
  double ea = e < 0.8 ? m : std::numbers::pi * (m < 0 ? -1.0 : 1.0);
  for (int it = 0; it < 50; ++it) {
    const double f = ea - e * std::sin(ea) - m;
    const double step = f / (1.0 - e * std::cos(ea));
    ea -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return ea;
}

double true_to_mean_anomaly(double nu, double e) {
  const double ea = 2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(nu / 2.0),
                                     std::sqrt(1.0 + e) * std::cos(nu / 2.0));
  return ea - e * std::sin(ea);
}

Vec6 kepler_to_cartesian(const KeplerElements& el, double mu) {
  const double ea = solve_kepler(el.mean_anomaly, el.e);
  const double nu = 2.0 * std::atan2(std::sqrt(1.0 + el.e) * std::sin(ea / 2.0),
                                     std::sqrt(1.0 - el.e) * std::cos(ea / 2.0));
  const double p = el.a * (1.0 - el.e * el.e);
  const double r = p / (1.0 + el.e * std::cos(nu));
  const Vec3 r_pf(r * std::cos(nu), r * std::sin(nu), 0.0);
  const double k = std::sqrt(mu / p);
  const Vec3 v_pf(-k * std::sin(nu), k * (el.e + std::cos(nu)), 0.0);
  const Mat3 rot = rot_z(el.raan) * rot_x(el.i) * rot_z(el.argp);
  Vec6 out;
  out << rot * r_pf, rot * v_pf;
  return out;
}

KeplerElements cartesian_to_kepler(const Vec6& rv, double mu) {
  const Vec3 r = rv.head<3>();
  const Vec3 v = rv.tail<3>();
  const double rn = r.norm();
  const Vec3 h = r.cross(v);
  const double hn = h.norm();
  const Vec3 node = Vec3::UnitZ().cross(h);
  const double nn = node.norm();
  const Vec3 ev = v.cross(h) / mu - r / rn;
  KeplerElements el;
  el.e = ev.norm();
  const double energy = 0.5 * v.squaredNorm() - mu / rn;
  el.a = -mu / (2.0 * energy);
  el.i = std::acos(std::clamp(h.z() / hn, -1.0, 1.0));
  el.raan = nn > 0.0 ? std::atan2(node.y(), node.x()) : 0.0;
  if (el.raan < 0.0) el.raan += kTwoPi;
  // Argument of latitude measured from the node inside the orbit plane.
  const Vec3 n_hat = nn > 0.0 ? Vec3(node / nn) : Vec3::UnitX();
  const Vec3 m_hat = h.normalized().cross(n_hat);
  const double u = std::atan2(r.dot(m_hat), r.dot(n_hat));
  double argp = el.e > 0.0 ? std::atan2(ev.dot(m_hat), ev.dot(n_hat)) : 0.0;
  if (argp < 0.0) argp += kTwoPi;
  el.argp = argp;
  const double nu = u - argp;
  double m = true_to_mean_anomaly(nu, el.e);
  m = std::fmod(m, kTwoPi);
  if (m < 0.0) m += kTwoPi;
  el.mean_anomaly = m;
  return el;
}

double argument_of_latitude(const Vec6& rv, double /*mu*/) {
  const Vec3 r = rv.head<3>();
  const Vec3 h = r.cross(Vec3(rv.tail<3>()));
  const Vec3 node = Vec3::UnitZ().cross(h);
  const Vec3 n_hat = node.norm() > 0.0 ? Vec3(node.normalized()) : Vec3::UnitX();
  const Vec3 m_hat = h.normalized().cross(n_hat);
  double u = std::atan2(r.dot(m_hat), r.dot(n_hat));
  if (u < 0.0) u += kTwoPi;
  return u;
}

RelativeOrbitalElements roe_from_kepler(const KeplerElements& c, const KeplerElements& d) {
  RelativeOrbitalElements roe;
  const double d_raan = wrap_pi(d.raan - c.raan);
  roe.da = (d.a - c.a) / c.a;
  roe.dlambda = wrap_pi((d.mean_anomaly + d.argp) - (c.mean_anomaly + c.argp) +
                        d_raan * std::cos(c.i));
  roe.dex = d.e * std::cos(d.argp) - c.e * std::cos(c.argp);
  roe.dey = d.e * std::sin(d.argp) - c.e * std::sin(c.argp);
  roe.dix = d.i - c.i;
  roe.diy = d_raan * std::sin(c.i);
  return roe;
}

KeplerElements kepler_from_roe(const KeplerElements& c, const RelativeOrbitalElements& roe) {
  KeplerElements d;
  d.a = c.a * (1.0 + roe.da);
  d.i = c.i + roe.dix;
  const double d_raan = roe.diy / std::sin(c.i);
  d.raan = c.raan + d_raan;
  const double ex = roe.dex + c.e * std::cos(c.argp);
  const double ey = roe.dey + c.e * std::sin(c.argp);
  d.e = std::hypot(ex, ey);
  d.argp = d.e > 0.0 ? std::atan2(ey, ex) : 0.0;
  const double u_d = c.mean_anomaly + c.argp + roe.dlambda - d_raan * std::cos(c.i);
  d.mean_anomaly = u_d - d.argp;
  return d;
}

double orbit_period(double a, double mu) { return kTwoPi * std::sqrt(a * a * a / mu); }

Mat3 rot_x(double t) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t);
  return m;
}

Mat3 rot_y(double t) {
  Mat3 m;
  m << std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t);
  return m;
}

Mat3 rot_z(double t) {
  Mat3 m;
  m << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
  return m;
}

Mat3 euler_321(double yaw, double pitch, double roll) {
  return rot_x(roll) * rot_y(pitch) * rot_z(yaw);
}

Mat3 body_to_inertial(double rotation_rate, double t) { return rot_z(rotation_rate * t); }

Vec3 GravityField::acceleration(const Vec3& r, double t) const {
  const double r2 = r.squaredNorm();
  const double rn = std::sqrt(r2);
  const double r3 = r2 * rn;
  Vec3 a = -mu / r3 * r;
  const double x = r.x(), y = r.y(), z = r.z();
  const double z2r2 = z * z / r2;
  if (j2 != 0.0) {
    const double k = -1.5 * j2 * mu * r_ref * r_ref / (r3 * r2);
    a += k * Vec3(x * (1.0 - 5.0 * z2r2), y * (1.0 - 5.0 * z2r2), z * (3.0 - 5.0 * z2r2));
  }
  if (j3 != 0.0) {
    const double k = -2.5 * j3 * mu * std::pow(r_ref, 3) / (r3 * r2 * r2);
    const double lateral = 3.0 * z - 7.0 * z * z2r2;
    a += k * Vec3(x * lateral, y * lateral, 6.0 * z * z - 7.0 * z * z * z2r2 - 0.6 * r2);
  }
  if (c22 != 0.0) {
    const Mat3 b2i = body_to_inertial(rotation_rate, t);
    const Vec3 rb = b2i.transpose() * r;
    const double xb = rb.x(), yb = rb.y(), zb = rb.z();
    const double k = 3.0 * mu * r_ref * r_ref * c22;
    const double r5 = r3 * r2, r7 = r5 * r2;
    const double d = xb * xb - yb * yb;
    const Vec3 ab(k * (2.0 * xb / r5 - 5.0 * xb * d / r7), k * (-2.0 * yb / r5 - 5.0 * yb * d / r7),
                  k * (-5.0 * zb * d / r7));
    a += b2i * ab;
  }
  return a;
}

double GravityField::potential(const Vec3& r, double t) const {
  const double rn = r.norm();
  const double s = r.z() / rn;
  const double p2 = 0.5 * (3.0 * s * s - 1.0);
  const double p3 = 0.5 * (5.0 * s * s * s - 3.0 * s);
  const double q = r_ref / rn;
  double u = mu / rn * (1.0 - j2 * q * q * p2 - j3 * q * q * q * p3);
  if (c22 != 0.0) {
    const Vec3 rb = body_to_inertial(rotation_rate, t).transpose() * r;
    u += 3.0 * mu * r_ref * r_ref * c22 * (rb.x() * rb.x() - rb.y() * rb.y()) / std::pow(rn, 5);
  }
  return u;
}

}  // namespace qadapt
