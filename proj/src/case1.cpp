#include "qadapt/case1.hpp"

#include <cmath>

#include "qadapt/errors.hpp"
#include "qadapt/process_noise.hpp"

namespace qadapt {

void Case1Config::validate() const {
  if (!(dt > 0.0)) throw ConfigError("case1: dt must be positive");
  if (!(duration >= dt)) throw ConfigError("case1: duration must be at least one interval");
  if (!(sigma_range > 0.0 && sigma_range_rate > 0.0)) {
    throw ConfigError("case1: measurement standard deviations must be positive");
  }
  if (!(p0_sigma_pos > 0.0 && p0_sigma_vel > 0.0 && p0_sigma_acc > 0.0)) {
    throw ConfigError("case1: initial standard deviations must be positive");
  }
  if (!(true_qtilde >= 0.0)) throw ConfigError("case1: true_qtilde must be nonnegative");
  if (!(qtilde0 >= 0.0)) throw ConfigError("case1: qtilde0 must be nonnegative");
  if (window == 0) throw ConfigError("case1: window must be >= 1");
  if (!(beta > 0.0)) throw ConfigError("case1: beta must be positive");
  if (!(admc_alpha > 0.0 && admc_alpha <= 1.0)) throw ConfigError("case1: alpha must lie in (0, 1]");
  if (!(lower_bound >= 0.0)) throw ConfigError("case1: lower bound must be nonnegative");
  if (upper_bound && !(*upper_bound >= lower_bound)) {
    throw ConfigError("case1: upper bound below lower bound");
  }
  if (!(imm_q_low > 0.0 && imm_q_high > imm_q_low)) {
    throw ConfigError("case1: IMM bounds must satisfy 0 < low < high");
  }
  if (!(imm_stay > 0.0 && imm_stay < 1.0)) throw ConfigError("case1: imm_stay must lie in (0, 1)");
  if (!(metric_window > 0.0 && metric_window <= duration)) {
    throw ConfigError("case1: metric window must lie in (0, duration]");
  }
  if (gap_start >= 0.0 && gap_intervals < 2) throw ConfigError("case1: gap_intervals must be >= 2");
}

double case1_accel(const Case1Config& cfg, double t) {
  return cfg.accel_amplitude * std::cos(cfg.accel_omega * t);
}

Vec case1_deterministic_state(const Case1Config& cfg, double t) {
  const double w = cfg.accel_omega;
  Vec s(2);
  s(0) = cfg.accel_amplitude / (w * w) * (1.0 - std::cos(w * t));
  s(1) = cfg.accel_amplitude / w * std::sin(w * t);
  return s;
}

std::vector<double> case1_epochs(const Case1Config& cfg) {
  const long steps = std::lround(cfg.duration / cfg.dt);
  std::vector<double> t;
  t.reserve(steps + 1);
  t.push_back(0.0);
  // Measurements strictly between the gap's first epoch and its end are dropped.
  const double tol = 1e-9 * cfg.dt;
  const double gap_first =
      cfg.gap_start < 0.0 ? HUGE_VAL : std::ceil(cfg.gap_start / cfg.dt - 1e-9) * cfg.dt;
  const double gap_end = gap_first + cfg.gap_intervals * cfg.dt;
  for (long k = 1; k <= steps; ++k) {
    const double tk = static_cast<double>(k) * cfg.dt;
    if (tk > gap_first + tol && tk < gap_end - tol) continue;
    t.push_back(tk);
  }
  return t;
}

Case1Truth case1_truth(const Case1Config& cfg, Rng& process, Rng& measurement) {
  Case1Truth truth;
  truth.t = case1_epochs(cfg);
  const std::size_t n = truth.t.size();
  truth.state.resize(n);
  truth.accel.resize(n, 0.0);
  truth.z.resize(n);
  truth.state[0] = Vec::Zero(2);
  truth.z[0] = Vec::Zero(2);

  // Exact discrete sampling of the white-acceleration truth at the nominal
  // step so gapped and ungapped runs share the same trajectory.
  const long steps = std::lround(cfg.duration / cfg.dt);
  std::vector<Vec> fine;
  if (cfg.mode == Case1Mode::kStochastic) {
    Mat phi(2, 2);
    phi << 1.0, cfg.dt, 0.0, 1.0;
    Vec q1(1);
    q1 << cfg.true_qtilde;
    const Mat l = covariance_factor(snc_q_analytic(q1, cfg.dt));
    fine.reserve(steps + 1);
    fine.push_back(Vec::Zero(2));
    for (long k = 1; k <= steps; ++k) {
      const Vec w = process.normal_vector(2);
      fine.push_back(phi * fine.back() + l * w);
    }
  }

  for (std::size_t i = 1; i < n; ++i) {
    const double t = truth.t[i];
    if (cfg.mode == Case1Mode::kStochastic) {
      truth.state[i] = fine[std::lround(t / cfg.dt)];
    } else {
      truth.state[i] = case1_deterministic_state(cfg, t);
      truth.accel[i] = case1_accel(cfg, t);
    }
    Vec z(2);
    z(0) = truth.state[i](0) + cfg.sigma_range * measurement.normal();
    z(1) = truth.state[i](1) + cfg.sigma_range_rate * measurement.normal();
    truth.z[i] = z;
  }
  if (cfg.mode == Case1Mode::kDeterministic) truth.accel[0] = case1_accel(cfg, 0.0);
  return truth;
}

}  // namespace qadapt
