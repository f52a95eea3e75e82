#pragma once

#include <optional>
#include <vector>

#include "qadapt/adaptive.hpp"
#include "qadapt/linalg.hpp"
#include "qadapt/rng.hpp"

namespace qadapt {

/// Particle on a line, observed with range and range-rate from the origin.
enum class Case1Mode { kStochastic, kDeterministic };

struct Case1Config {
  Case1Mode mode = Case1Mode::kStochastic;
  double dt = 0.1;          // s
  double duration = 240.0;  // s
  double sigma_range = 2.0;       // m
  double sigma_range_rate = 0.1;  // m/s
  double true_qtilde = 0.5;       // m²/s³, stochastic mode
  double accel_amplitude = 1.0;   // m/s², deterministic mode
  double accel_omega = 0.6283185307179586;  // rad/s (π/5)

  double p0_sigma_pos = 1.8;   // m
  double p0_sigma_vel = 0.15;  // m/s
  double p0_sigma_acc = 1.0;   // m/s², empirical acceleration

  double qtilde0 = 1.0;
  std::size_t window = 30;
  int adaptation_delay = 0;  // intervals
  double beta = 0.005;       // 1/s
  double admc_alpha = 0.02;
  double lower_bound = 0.0;
  std::optional<double> upper_bound;
  WeightingMode weighting = WeightingMode::kSteadyState;

  double imm_q_low = 1e-3;
  double imm_q_high = 100.0;
  double imm_stay = 0.99;

  double metric_window = 45.0;  // s at the end of the run
  double outage_factor = 3.0;
  double divergence_factor = 100.0;
  int divergence_steps = 10;

  /// Optional measurement gap: the first measurement at or after gap_start is
  /// followed by a single interval gap_intervals times the nominal length.
  double gap_start = -1.0;
  int gap_intervals = 10;

  void validate() const;
};

struct Case1Truth {
  std::vector<double> t;      // measurement epochs, t[0] = 0 is the initial epoch
  std::vector<Vec> state;     // [x, v]
  std::vector<double> accel;  // perturbing acceleration at t
  std::vector<Vec> z;         // z[0] unused
};

/// Deterministic acceleration a(t) = A cos(ω t) and its closed-form response
/// from rest at the origin.
double case1_accel(const Case1Config& cfg, double t);
Vec case1_deterministic_state(const Case1Config& cfg, double t);

/// Truth trajectory and measurements. Process noise draws come from
/// `process`, measurement noise from `measurement`.
Case1Truth case1_truth(const Case1Config& cfg, Rng& process, Rng& measurement);

/// Measurement epochs including the optional gap.
std::vector<double> case1_epochs(const Case1Config& cfg);

}  // namespace qadapt
