#pragma once

#include <memory>

#include "qadapt/linalg.hpp"

namespace qadapt {

struct StateEstimate {
  Vec mean;
  Mat covariance;
  double epoch = 0.0;
};

/// Deterministic flow map and its linearization over [t0, t1].
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;
  virtual Vec propagate(const Vec& x, double t0, double t1) const = 0;
  /// Φ(t1, t0) about the trajectory through x at t0. The default uses central
  /// differences of propagate().
  virtual Mat stm(const Vec& x, double t0, double t1) const;
  /// Γ(t), mapping the white-noise input into the state derivative.
  virtual Mat noise_map(double t) const = 0;
};

class MeasurementModel {
 public:
  virtual ~MeasurementModel() = default;

  virtual int meas_dim() const = 0;
  virtual Vec measure(const Vec& x) const = 0;
  /// Default: central differences of measure().
  virtual Mat jacobian(const Vec& x) const;
  virtual Mat noise() const = 0;
};

/// ẋ = A x + Γ w with constant A and Γ. Φ = exp(A Δt).
class LinearDynamics : public DynamicsModel {
 public:
  LinearDynamics(Mat a, Mat gamma);

  int state_dim() const override { return static_cast<int>(a_.rows()); }
  Vec propagate(const Vec& x, double t0, double t1) const override;
  Mat stm(const Vec& x, double t0, double t1) const override;
  Mat noise_map(double) const override { return gamma_; }

  const Mat& plant() const { return a_; }

 private:
  Mat a_;
  Mat gamma_;
};

class LinearMeasurement : public MeasurementModel {
 public:
  LinearMeasurement(Mat h, Mat r);

  int meas_dim() const override { return static_cast<int>(h_.rows()); }
  Vec measure(const Vec& x) const override { return h_ * x; }
  Mat jacobian(const Vec&) const override { return h_; }
  Mat noise() const override { return r_; }

 private:
  Mat h_;
  Mat r_;
};

enum class FilterKind { kKalman, kUnscented };

/// Scaled unscented transform with α = 1, β = 0 and κ = n/2, which puts
/// weight 1/3 on the center point.
struct SigmaPoints {
  Mat points;  // n × (2n+1)
  Vec weights;
};
SigmaPoints make_sigma_points(const Vec& mean, const Mat& cov);

struct Prediction {
  StateEstimate estimate;
  /// Propagated covariance before Q was added (Φ P Φᵀ or its sigma-point
  /// equivalent). The full covariance-matching estimate needs it.
  Mat propagated_cov;
};

/// Throws DimensionError, std::invalid_argument (t_next before epoch) or
/// NonPsdError (Q, or the propagated covariance).
Prediction time_update(const StateEstimate& est, const DynamicsModel& model, const Mat& q,
                       double t_next, FilterKind kind = FilterKind::kKalman);

struct InnovationRecord {
  Vec innovation;
  Mat innovation_cov;
  Mat gain;
  Vec state_correction;
  Mat correction_cov;
  double dt = 0.0;
  bool outage = false;
};

struct Correction {
  StateEstimate estimate;
  InnovationRecord record;
  double log_likelihood = 0.0;
};

/// Kalman (Joseph form) or unscented measurement update. Throws
/// DimensionError, IllConditionedError when the unit-diagonal form of S has
/// condition number above 1e12, NonPsdError when
/// the posterior covariance is not PSD.
Correction measurement_update(const StateEstimate& est, const Vec& z,
                              const MeasurementModel& model,
                              FilterKind kind = FilterKind::kKalman);

/// Gaussian log density of an innovation with covariance S.
double innovation_log_likelihood(const Vec& dz, const Mat& s);

}  // namespace qadapt
