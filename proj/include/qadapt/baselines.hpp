#pragma once

#include <array>

#include "qadapt/filter_core.hpp"

namespace qadapt {

/// Symmetric transition matrix [[p, 1−p], [1−p, p]].
Mat imm_transition(double stay_probability = 0.99);

/// Combined Q = (Σ μᵢ Qᵢ^{1/2})(Σ μᵢ Qᵢ^{1/2})ᵀ with symmetric PSD roots.
Mat combine_q_sqrt(const Mat& q1, const Mat& q2, double mu1, double mu2);

/// μ₁ such that (μ₁√q₁ + (1−μ₁)√q₂)² = q₀ for scalar intensities, clamped to
/// [0, 1]. Gives the mode mixture whose combined Q matches an initial Q̃.
double imm_initial_probability(double q_low, double q_high, double q0);

/// Two-mode interacting multiple model bank. The modes share dynamics and
/// measurement models and differ only in their process noise.
class ImmBank {
 public:
  ImmBank(const StateEstimate& initial, const Mat& transition, const Vec& mu,
          FilterKind kind = FilterKind::kKalman);

  struct StepResult {
    StateEstimate combined;
    Mat combined_q;
    double log_likelihood[2] = {0.0, 0.0};
    bool underflow = false;
  };

  /// Mix, predict each mode with its own Q over [epoch, t_next], update both
  /// with z and refresh the mode probabilities. q1/q2 are the mode Q for this
  /// interval.
  StepResult step(const DynamicsModel& dynamics, const MeasurementModel& meas, const Vec& z,
                  const Mat& q1, const Mat& q2, double t_next);

  const Vec& mode_probabilities() const { return mu_; }
  const StateEstimate& mode(int i) const { return modes_[i]; }
  StateEstimate combined() const;
  int underflow_count() const { return underflows_; }
  const Mat& transition() const { return pi_; }

  /// c_j = Σᵢ π_ij μᵢ.
  Vec predicted_probabilities() const;

 private:
  std::array<StateEstimate, 2> modes_;
  Mat pi_;
  Vec mu_;
  FilterKind kind_;
  int underflows_ = 0;
};

}  // namespace qadapt
