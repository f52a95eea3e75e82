#include "qadapt/filter_core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "qadapt/errors.hpp"

namespace qadapt {

namespace {

constexpr double kMaxCondition = 1e12;

double fd_step(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

void check_dims(const StateEstimate& est, int n, const char* who) {
  if (est.mean.size() != n || est.covariance.rows() != n || est.covariance.cols() != n) {
    std::ostringstream os;
    os << who << ": estimate dimension (" << est.mean.size() << ", " << est.covariance.rows()
       << "x" << est.covariance.cols() << ") does not match model state_dim " << n;
    throw DimensionError(os.str());
  }
}

}  // namespace

Mat DynamicsModel::stm(const Vec& x, double t0, double t1) const {
  const int n = state_dim();
  Mat phi(n, n);
  for (int j = 0; j < n; ++j) {
    const double h = fd_step(x(j));
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    phi.col(j) = (propagate(xp, t0, t1) - propagate(xm, t0, t1)) / (2.0 * h);
  }
  return phi;
}

Mat MeasurementModel::jacobian(const Vec& x) const {
  const int n = static_cast<int>(x.size());
  Mat h(meas_dim(), n);
  for (int j = 0; j < n; ++j) {
    const double step = fd_step(x(j));
    Vec xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    h.col(j) = (measure(xp) - measure(xm)) / (2.0 * step);
  }
  return h;
}

LinearDynamics::LinearDynamics(Mat a, Mat gamma) : a_(std::move(a)), gamma_(std::move(gamma)) {
  if (a_.rows() != a_.cols()) throw DimensionError("LinearDynamics: plant matrix must be square");
  if (gamma_.rows() != a_.rows()) throw DimensionError("LinearDynamics: noise map row mismatch");
}

Vec LinearDynamics::propagate(const Vec& x, double t0, double t1) const {
  return stm(x, t0, t1) * x;
}

Mat LinearDynamics::stm(const Vec&, double t0, double t1) const {
  const double dt = t1 - t0;
  if (dt == 0.0) return Mat::Identity(a_.rows(), a_.cols());
  Mat scaled = a_ * dt;
  return scaled.exp();
}

LinearMeasurement::LinearMeasurement(Mat h, Mat r) : h_(std::move(h)), r_(std::move(r)) {
  if (r_.rows() != h_.rows() || r_.cols() != h_.rows()) {
    throw DimensionError("LinearMeasurement: R must be square with one row per measurement");
  }
  if ((r_ - r_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * r_.cwiseAbs().maxCoeff()) {
    throw std::invalid_argument("LinearMeasurement: R is not symmetric");
  }
  Eigen::LLT<Mat> llt(r_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("LinearMeasurement: R is not positive definite");
  }
}

SigmaPoints make_sigma_points(const Vec& mean, const Mat& cov) {
  const int n = static_cast<int>(mean.size());
  const double kappa = 0.5 * n;
  const double lambda = kappa;  // α = 1 ⇒ λ = κ
  const Mat l = covariance_factor((n + lambda) * cov);
  SigmaPoints sp;
  sp.points.resize(n, 2 * n + 1);
  sp.weights.resize(2 * n + 1);
  sp.points.col(0) = mean;
  sp.weights(0) = lambda / (n + lambda);
  for (int i = 0; i < n; ++i) {
    sp.points.col(1 + i) = mean + l.col(i);
    sp.points.col(1 + n + i) = mean - l.col(i);
    sp.weights(1 + i) = sp.weights(1 + n + i) = 0.5 / (n + lambda);
  }
  return sp;
}

Prediction time_update(const StateEstimate& est, const DynamicsModel& model, const Mat& q,
                       double t_next, FilterKind kind) {
  const int n = model.state_dim();
  check_dims(est, n, "time_update");
  if (q.rows() != n || q.cols() != n) {
    throw DimensionError("time_update: Q dimension does not match state_dim");
  }
  if (t_next < est.epoch) {
    throw std::invalid_argument("time_update: t_next precedes the estimate epoch");
  }
  require_psd(symmetrize(q), "process noise Q");

  Prediction out;
  out.estimate.epoch = t_next;
  if (t_next == est.epoch) {
    out.estimate.mean = est.mean;
    out.propagated_cov = est.covariance;
  } else if (kind == FilterKind::kKalman) {
    const Mat phi = model.stm(est.mean, est.epoch, t_next);
    out.estimate.mean = model.propagate(est.mean, est.epoch, t_next);
    out.propagated_cov = symmetrize(phi * est.covariance * phi.transpose());
  } else {
    const SigmaPoints sp = make_sigma_points(est.mean, est.covariance);
    Mat prop(n, sp.points.cols());
    for (int i = 0; i < sp.points.cols(); ++i) {
      prop.col(i) = model.propagate(sp.points.col(i), est.epoch, t_next);
    }
    Vec mean = prop * sp.weights;
    Mat dev = prop.colwise() - mean;
    out.estimate.mean = mean;
    out.propagated_cov = symmetrize(dev * sp.weights.asDiagonal() * dev.transpose());
  }
  out.estimate.covariance = symmetrize(out.propagated_cov + q);
  require_psd(out.estimate.covariance, "propagated covariance");
  return out;
}

double innovation_log_likelihood(const Vec& dz, const Mat& s) {
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Mat& l = llt.matrixLLT();
  double log_det = 0.0;
  for (int i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  const Vec y = llt.matrixL().solve(dz);
  return -0.5 * (y.squaredNorm() + log_det + dz.size() * std::log(2.0 * std::numbers::pi));
}

Correction measurement_update(const StateEstimate& est, const Vec& z,
                              const MeasurementModel& model, FilterKind kind) {
  const int n = static_cast<int>(est.mean.size());
  check_dims(est, n, "measurement_update");
  const int m = model.meas_dim();
  if (z.size() != m) {
    std::ostringstream os;
    os << "measurement_update: z has " << z.size() << " entries, model expects " << m;
    throw DimensionError(os.str());
  }
  const Mat r = model.noise();

  Vec z_pred;
  Mat s, pxz;
  Mat h;  // only for the Kalman path
  if (kind == FilterKind::kKalman) {
    h = model.jacobian(est.mean);
    z_pred = model.measure(est.mean);
    pxz = est.covariance * h.transpose();
    s = h * pxz + r;
  } else {
    const SigmaPoints sp = make_sigma_points(est.mean, est.covariance);
    const int k = static_cast<int>(sp.points.cols());
    Mat zs(m, k);
    for (int i = 0; i < k; ++i) zs.col(i) = model.measure(sp.points.col(i));
    z_pred = zs * sp.weights;
    const Mat dz = zs.colwise() - z_pred;
    const Mat dx = sp.points.colwise() - est.mean;
    s = dz * sp.weights.asDiagonal() * dz.transpose() + r;
    pxz = dx * sp.weights.asDiagonal() * dz.transpose();
  }
  s = symmetrize(s);

  // Conditioning is judged on the unit-diagonal form of S so that mixing
  // measurement types with very different units is not mistaken for
  // ill-conditioning.
  Eigen::LLT<Mat> llt(s);
  double rcond = 0.0;
  if (llt.info() == Eigen::Success && (s.diagonal().array() > 0.0).all()) {
    const Vec d = s.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::LLT<Mat> scaled(d.asDiagonal() * s * d.asDiagonal());
    if (scaled.info() == Eigen::Success) rcond = scaled.rcond();
  }
  if (rcond < 1.0 / kMaxCondition) {
    std::ostringstream os;
    os << "measurement_update: innovation covariance is singular or ill-conditioned (rcond "
       << rcond << ")";
    throw IllConditionedError(os.str());
  }

  Correction out;
  InnovationRecord& rec = out.record;
  rec.innovation = z - z_pred;
  rec.innovation_cov = s;
  rec.gain = llt.solve(pxz.transpose()).transpose();
  rec.state_correction = rec.gain * rec.innovation;
  rec.correction_cov = symmetrize(rec.gain * s * rec.gain.transpose());

  out.estimate.epoch = est.epoch;
  out.estimate.mean = est.mean + rec.state_correction;
  if (kind == FilterKind::kKalman) {
    const Mat ikh = Mat::Identity(n, n) - rec.gain * h;
    out.estimate.covariance = symmetrize(ikh * est.covariance * ikh.transpose() +
                                         rec.gain * r * rec.gain.transpose());
  } else {
    // The Joseph form with sigma-point substitutes for P Hᵀ and H P Hᵀ
    // collapses algebraically to P − K S Kᵀ.
    out.estimate.covariance = symmetrize(est.covariance - rec.correction_cov);
  }
  require_psd(out.estimate.covariance, "posterior covariance");

  const Vec y = llt.matrixL().solve(rec.innovation);
  double log_det = 0.0;
  const Mat& l = llt.matrixLLT();
  for (int i = 0; i < m; ++i) log_det += 2.0 * std::log(l(i, i));
  out.log_likelihood = -0.5 * (y.squaredNorm() + log_det + m * std::log(2.0 * std::numbers::pi));
  return out;
}

}  // namespace qadapt
