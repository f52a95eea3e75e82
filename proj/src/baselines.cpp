#include "qadapt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qadapt/errors.hpp"

namespace qadapt {

Mat imm_transition(double stay_probability) {
  if (!(stay_probability >= 0.0 && stay_probability <= 1.0)) {
    throw std::invalid_argument("imm_transition: probability outside [0, 1]");
  }
  Mat pi(2, 2);
  pi << stay_probability, 1.0 - stay_probability, 1.0 - stay_probability, stay_probability;
  return pi;
}

Mat combine_q_sqrt(const Mat& q1, const Mat& q2, double mu1, double mu2) {
  if (q1.rows() != q2.rows() || q1.cols() != q2.cols()) {
    throw DimensionError("combine_q_sqrt: mode Q sizes differ");
  }
  const Mat root = mu1 * sqrtm_psd(q1) + mu2 * sqrtm_psd(q2);
  return root * root.transpose();
}

double imm_initial_probability(double q_low, double q_high, double q0) {
  const double a = std::sqrt(q_low), b = std::sqrt(q_high), c = std::sqrt(q0);
  if (a == b) return 0.5;
  return std::clamp((b - c) / (b - a), 0.0, 1.0);
}

ImmBank::ImmBank(const StateEstimate& initial, const Mat& transition, const Vec& mu,
                 FilterKind kind)
    : modes_{initial, initial}, pi_(transition), mu_(mu), kind_(kind) {
  if (pi_.rows() != 2 || pi_.cols() != 2 || mu_.size() != 2) {
    throw DimensionError("ImmBank: two modes expected");
  }
  for (int r = 0; r < 2; ++r) {
    if (std::abs(pi_.row(r).sum() - 1.0) > 1e-12 || pi_.row(r).minCoeff() < 0.0) {
      throw std::invalid_argument("ImmBank: transition rows must be probability vectors");
    }
  }
  if (mu_.minCoeff() < 0.0 || std::abs(mu_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("ImmBank: mode probabilities must sum to one");
  }
}

Vec ImmBank::predicted_probabilities() const { return pi_.transpose() * mu_; }

StateEstimate ImmBank::combined() const {
  StateEstimate out;
  out.epoch = modes_[0].epoch;
  out.mean = mu_(0) * modes_[0].mean + mu_(1) * modes_[1].mean;
  out.covariance = Mat::Zero(out.mean.size(), out.mean.size());
  for (int i = 0; i < 2; ++i) {
    const Vec d = modes_[i].mean - out.mean;
    out.covariance += mu_(i) * (modes_[i].covariance + d * d.transpose());
  }
  out.covariance = symmetrize(out.covariance);
  return out;
}

ImmBank::StepResult ImmBank::step(const DynamicsModel& dynamics, const MeasurementModel& meas,
                                  const Vec& z, const Mat& q1, const Mat& q2, double t_next) {
  if (modes_[0].epoch != modes_[1].epoch) {
    throw std::logic_error("ImmBank: mode filters are not time-synchronized");
  }
  // Mixing
  const Vec c = predicted_probabilities();
  std::array<StateEstimate, 2> mixed;
  for (int j = 0; j < 2; ++j) {
    Vec w(2);
    for (int i = 0; i < 2; ++i) w(i) = c(j) > 0.0 ? pi_(i, j) * mu_(i) / c(j) : 0.5;
    mixed[j].epoch = modes_[0].epoch;
    mixed[j].mean = w(0) * modes_[0].mean + w(1) * modes_[1].mean;
    mixed[j].covariance = Mat::Zero(mixed[j].mean.size(), mixed[j].mean.size());
    for (int i = 0; i < 2; ++i) {
      const Vec d = modes_[i].mean - mixed[j].mean;
      mixed[j].covariance += w(i) * (modes_[i].covariance + d * d.transpose());
    }
    mixed[j].covariance = symmetrize(mixed[j].covariance);
  }

  StepResult res;
  const Mat* qs[2] = {&q1, &q2};
  for (int j = 0; j < 2; ++j) {
    const Prediction pred = time_update(mixed[j], dynamics, *qs[j], t_next, kind_);
    const Correction corr = measurement_update(pred.estimate, z, meas, kind_);
    modes_[j] = corr.estimate;
    res.log_likelihood[j] = corr.log_likelihood;
  }

  // Mode probabilities in the log domain: μ_j ∝ Λ_j c_j
  double logw[2];
  for (int j = 0; j < 2; ++j) {
    logw[j] = c(j) > 0.0 ? res.log_likelihood[j] + std::log(c(j))
                         : -std::numeric_limits<double>::infinity();
  }
  const double top = std::max(logw[0], logw[1]);
  if (!std::isfinite(top)) {
    res.underflow = true;
    ++underflows_;
  } else {
    const double e0 = std::exp(logw[0] - top), e1 = std::exp(logw[1] - top);
    mu_(0) = e0 / (e0 + e1);
    mu_(1) = 1.0 - mu_(0);
  }

  res.combined = combined();
  res.combined_q = combine_q_sqrt(q1, q2, mu_(0), mu_(1));
  return res;
}

}  // namespace qadapt
