#include "qadapt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qadapt/baselines.hpp"
#include "qadapt/errors.hpp"
#include "qadapt/scenario_io.hpp"

namespace qadapt {

std::string technique_name(Technique t) {
  switch (t) {
    case Technique::kNone: return "none";
    case Technique::kIdeal: return "ideal";
    case Technique::kSnc: return "snc";
    case Technique::kDmc: return "dmc";
    case Technique::kCm: return "cm";
    case Technique::kImm: return "imm";
    case Technique::kAsnc: return "asnc";
    case Technique::kAdmc: return "admc";
  }
  return "none";
}

Technique parse_technique(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Technique t : {Technique::kNone, Technique::kIdeal, Technique::kSnc, Technique::kDmc,
                      Technique::kCm, Technique::kImm, Technique::kAsnc, Technique::kAdmc}) {
    if (technique_name(t) == lower) return t;
  }
  throw ConfigError("unknown technique '" + name +
                    "' (expected none, ideal, snc, dmc, cm, imm, asnc or admc)");
}

bool uses_empirical_acceleration(Technique t) {
  return t == Technique::kDmc || t == Technique::kAdmc;
}

void ScenarioConfig::validate() const {
  if (kind == Kind::kCase1) {
    case1.validate();
  } else {
    case2.validate();
  }
}

const Metric* RunResult::find(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

const Aggregate* CampaignResult::find(const std::string& metric) const {
  for (const auto& a : aggregates) {
    if (a.metric == metric) return &a;
  }
  return nullptr;
}

double CampaignResult::value(const std::string& metric) const {
  const Aggregate* a = find(metric);
  return a ? a->value : std::numeric_limits<double>::quiet_NaN();
}

int CampaignResult::diverged() const {
  int n = 0;
  for (const auto& r : runs) n += r.diverged ? 1 : 0;
  return n;
}

int CampaignResult::nonpsd_q() const {
  int n = 0;
  for (const auto& r : runs) n += r.nonpsd_q;
  return n;
}

double CampaignResult::mean_seconds_per_call() const {
  double s = 0.0;
  long calls = 0;
  for (const auto& r : runs) {
    s += r.seconds;
    calls += r.filter_calls;
  }
  return calls > 0 ? s / static_cast<double>(calls) : 0.0;
}

Vec compute_mae(const std::vector<double>& t, const std::vector<Vec>& errors, double t_begin,
                double t_end) {
  if (t.size() != errors.size()) throw std::invalid_argument("compute_mae: size mismatch");
  Vec sum;
  int count = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_begin || t[i] > t_end) continue;
    if (count == 0) sum = Vec::Zero(errors[i].size());
    sum += errors[i].cwiseAbs();
    ++count;
  }
  if (count == 0) throw std::invalid_argument("compute_mae: no samples inside the window");
  return sum / count;
}

namespace {

using Clock = std::chrono::steady_clock;

// Q selection and adaptation for every single-filter technique.
struct PolicySettings {
  Technique technique = Technique::kNone;
  CompensationModel model = CompensationModel::kSnc;
  NoiseLayout layout;
  NoiseSpec spec;
  std::size_t window = 30;
  int delay = 0;
  bool require_full = true;
  WeightingMode weighting = WeightingMode::kSteadyState;
  double nominal_dt = 1.0;
  double outage_factor = 3.0;
};

class NoisePolicy {
 public:
  explicit NoisePolicy(PolicySettings s) : s_(std::move(s)), window_(s_.window), spec_(s_.spec) {}

  Mat q(double dt) const {
    if (cm_q_) return *cm_q_;
    if (s_.technique == Technique::kNone) {
      return Mat::Zero(s_.layout.state_dim, s_.layout.state_dim);
    }
    return assemble_q(s_.layout, s_.model, spec_.qtilde, spec_.beta, dt);
  }

  bool adaptive() const {
    return s_.technique == Technique::kCm || s_.technique == Technique::kAsnc ||
           s_.technique == Technique::kAdmc;
  }

  bool is_outage(double dt) const { return dt > s_.outage_factor * s_.nominal_dt; }

  void observe(const Prediction& pred, const Correction& corr, double dt, double dt_next,
               RunResult& result) {
    if (!adaptive()) return;
    WindowEntry entry{corr.record, corr.estimate.covariance, pred.propagated_cov};
    entry.record.dt = dt;
    entry.record.outage = is_outage(dt);
    ++calls_;
    if (!window_.push(std::move(entry))) {
      ++result.excluded_outages;
      return;
    }
    if (calls_ < s_.delay || window_.empty()) return;
    if (s_.require_full && !window_.full()) return;
    if (s_.technique == Technique::kCm) {
      cm_q_ = cm_estimate_ss(window_);
      return;
    }
    const AdaptiveStep step =
        adaptive_step(window_, spec_, {s_.model, s_.layout, s_.weighting}, dt_next);
    spec_ = step.spec;
    result.floored_weights += step.floored_weights;
    result.degenerate_axes += step.degenerate_axes;
  }

  // Mean white-noise-equivalent intensity for reporting.
  double qtilde(double dt) const {
    if (s_.technique == Technique::kNone) return 0.0;
    if (cm_q_) {
      const int p = s_.layout.axes.front().position;
      return 3.0 * (*cm_q_)(p, p) / (dt * dt * dt);
    }
    return spec_.qtilde.mean();
  }

 private:
  PolicySettings s_;
  SlidingWindow window_;
  NoiseSpec spec_;
  std::optional<Mat> cm_q_;
  int calls_ = 0;
};

struct ImmSettings {
  NoiseLayout layout;  // white-noise layout
  double q_low = 0.0;
  double q_high = 0.0;
  double stay = 0.99;
  double mu_low = 0.5;
};

// One filter (or IMM bank) advancing from measurement to measurement.
class Estimator {
 public:
  Estimator(Technique technique, const StateEstimate& initial, PolicySettings policy,
            const ImmSettings& imm, FilterKind kind)
      : technique_(technique), est_(initial), policy_(std::move(policy)), imm_(imm), kind_(kind) {
    if (technique_ == Technique::kImm) {
      Vec mu(2);
      mu << imm.mu_low, 1.0 - imm.mu_low;
      bank_.emplace(initial, imm_transition(imm.stay), mu, kind);
    }
  }

  // Returns the Q used for the interval.
  Mat step(const DynamicsModel& dyn, const MeasurementModel& meas, const Vec& z, double t_next,
           double dt_next, RunResult& result) {
    const double dt = t_next - est_.epoch;
    if (bank_) {
      const int axes = imm_.layout.axis_count();
      const Vec none;
      const Mat q1 = assemble_q(imm_.layout, CompensationModel::kSnc,
                                Vec::Constant(axes, imm_.q_low), none, dt);
      const Mat q2 = assemble_q(imm_.layout, CompensationModel::kSnc,
                                Vec::Constant(axes, imm_.q_high), none, dt);
      const auto res = bank_->step(dyn, meas, z, q1, q2, t_next);
      if (!is_psd(res.combined_q)) ++result.nonpsd_q;
      if (res.underflow) ++result.imm_underflows;
      est_ = res.combined;
      const Vec& mu = bank_->mode_probabilities();
      const double s = mu(0) * std::sqrt(imm_.q_low) + mu(1) * std::sqrt(imm_.q_high);
      qtilde_ = s * s;
      return res.combined_q;
    }
    const Mat q = policy_.q(dt);
    if (!is_psd(q)) ++result.nonpsd_q;
    const Prediction pred = time_update(est_, dyn, q, t_next, kind_);
    const Correction corr = measurement_update(pred.estimate, z, meas, kind_);
    est_ = corr.estimate;
    policy_.observe(pred, corr, dt, dt_next, result);
    qtilde_ = policy_.qtilde(dt_next > 0.0 ? dt_next : dt);
    return q;
  }

  const StateEstimate& estimate() const { return est_; }
  double qtilde() const { return qtilde_; }

 private:
  Technique technique_;
  StateEstimate est_;
  NoisePolicy policy_;
  ImmSettings imm_;
  FilterKind kind_;
  std::optional<ImmBank> bank_;
  double qtilde_ = 0.0;
};

NoiseSpec make_spec(int axes, double qtilde, double lower, const std::optional<double>& upper,
                    CompensationModel model, double beta, double alpha) {
  NoiseSpec spec;
  spec.qtilde = Vec::Constant(axes, qtilde);
  spec.lower = Vec::Constant(axes, lower);
  if (upper) spec.upper = Vec::Constant(axes, *upper);
  if (model == CompensationModel::kDmc) spec.beta = Vec::Constant(axes, beta);
  spec.alpha = alpha;
  if (spec.upper) spec.qtilde = spec.qtilde.cwiseMin(*spec.upper);
  spec.qtilde = spec.qtilde.cwiseMax(spec.lower);
  return spec;
}

// Tracks the consecutive-step divergence rule.
class DivergenceMonitor {
 public:
  DivergenceMonitor(double threshold, int steps) : threshold_(threshold), steps_(steps) {}
  bool update(double error) {
    streak_ = error > threshold_ ? streak_ + 1 : 0;
    return streak_ >= steps_;
  }

 private:
  double threshold_;
  int steps_;
  int streak_ = 0;
};

void mark_failure(RunResult& r, const std::string& why) {
  r.diverged = true;
  r.failure = why;
  r.metrics.clear();
}

// ---------------------------------------------------------------- Case I

RunResult run_case1(const Case1Config& cfg, Technique technique, std::uint64_t seed,
                    std::uint64_t run, bool keep_series) {
  if (technique == Technique::kIdeal && cfg.mode != Case1Mode::kStochastic) {
    throw ConfigError("technique 'ideal' needs a stochastic scenario");
  }
  RunResult result;
  result.run = run;

  Rng process(seed, run, Stream::kProcessNoise);
  Rng meas_noise(seed, run, Stream::kMeasurementNoise);
  Rng init_rng(seed, run, Stream::kInitialError);
  const Case1Truth truth = case1_truth(cfg, process, meas_noise);

  const bool empirical = uses_empirical_acceleration(technique);
  const CompensationModel model = empirical ? CompensationModel::kDmc : CompensationModel::kSnc;
  const Vec beta = Vec::Constant(1, cfg.beta);
  const LinearDynamics dyn = empirical ? dmc_linear_model(beta) : snc_linear_model(1);
  const int n = dyn.state_dim();

  Mat h = Mat::Zero(2, n);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  Mat r = Mat::Zero(2, 2);
  r(0, 0) = cfg.sigma_range * cfg.sigma_range;
  r(1, 1) = cfg.sigma_range_rate * cfg.sigma_range_rate;
  const LinearMeasurement meas(h, r);

  StateEstimate init;
  init.epoch = truth.t.front();
  Vec sig(n);
  sig(0) = cfg.p0_sigma_pos;
  sig(1) = cfg.p0_sigma_vel;
  if (empirical) sig(2) = cfg.p0_sigma_acc;
  init.covariance = sig.cwiseAbs2().asDiagonal();
  init.mean = Vec::Zero(n);
  init.mean.head(2) = truth.state.front();
  init.mean.head(2) += init_rng.gaussian(init.covariance.topLeftCorner(2, 2));

  PolicySettings ps;
  ps.technique = technique;
  ps.model = model;
  ps.layout = NoiseLayout::stacked(1, 1, model);
  const double q0 = technique == Technique::kIdeal ? cfg.true_qtilde : cfg.qtilde0;
  ps.spec = make_spec(1, q0, cfg.lower_bound, cfg.upper_bound, model, cfg.beta,
                      technique == Technique::kAdmc ? cfg.admc_alpha : 1.0);
  if (technique == Technique::kIdeal) {
    ps.spec.lower = Vec::Zero(1);
    ps.spec.upper.reset();
  }
  ps.window = cfg.window;
  ps.delay = cfg.adaptation_delay;
  ps.require_full = true;
  ps.weighting = cfg.weighting;
  ps.nominal_dt = cfg.dt;
  ps.outage_factor = cfg.outage_factor;

  ImmSettings imm;
  imm.layout = NoiseLayout::stacked(1, 1, CompensationModel::kSnc);
  imm.q_low = cfg.imm_q_low;
  imm.q_high = cfg.imm_q_high;
  imm.stay = cfg.imm_stay;
  imm.mu_low = imm_initial_probability(cfg.imm_q_low, cfg.imm_q_high, cfg.qtilde0);

  Estimator filter(technique, init, ps, imm, FilterKind::kKalman);
  DivergenceMonitor monitor(cfg.divergence_factor * cfg.p0_sigma_pos, cfg.divergence_steps);

  const double t_end = truth.t.back();
  const double t_begin = t_end - cfg.metric_window;
  const bool stochastic = cfg.mode == Case1Mode::kStochastic;
  double sum_x = 0, sum_v = 0, sum_q11 = 0, sum_q22 = 0, sum_acc = 0, in_x = 0, in_v = 0,
         sum_qt = 0;
  int count = 0;

  if (keep_series) {
    result.series = RunSeries{};
    result.series->names = {"err_x", "err_v", "sigma_x", "sigma_v", "q11", "q22", "qtilde", "dt"};
    if (empirical) result.series->names.push_back("accel_err");
  }

  const std::size_t steps = truth.t.size();
  Clock::duration elapsed{};
  try {
    for (std::size_t k = 1; k < steps; ++k) {
      const double t = truth.t[k];
      const double dt = t - truth.t[k - 1];
      const double dt_next = k + 1 < steps ? truth.t[k + 1] - t : dt;
      const auto start = Clock::now();
      const Mat q = filter.step(dyn, meas, truth.z[k], t, dt_next, result);
      elapsed += Clock::now() - start;
      ++result.filter_calls;

      const StateEstimate& est = filter.estimate();
      const double ex = est.mean(0) - truth.state[k](0);
      const double ev = est.mean(1) - truth.state[k](1);
      const double sx = std::sqrt(est.covariance(0, 0));
      const double sv = std::sqrt(est.covariance(1, 1));
      const double acc_err = empirical ? est.mean(2) - truth.accel[k] : -truth.accel[k];
      if (monitor.update(std::abs(ex))) {
        result.seconds = std::chrono::duration<double>(elapsed).count();
        mark_failure(result, "position error beyond divergence threshold");
        return result;
      }
      if (result.series) {
        std::vector<double> row = {ex, ev, sx, sv, q(0, 0), q(1, 1), filter.qtilde(), dt};
        if (empirical) row.push_back(acc_err);
        result.series->t.push_back(t);
        result.series->values.push_back(std::move(row));
      }
      if (t < t_begin) continue;
      ++count;
      sum_x += std::abs(ex);
      sum_v += std::abs(ev);
      in_x += std::abs(ex) <= 3.0 * sx ? 1.0 : 0.0;
      in_v += std::abs(ev) <= 3.0 * sv ? 1.0 : 0.0;
      sum_acc += std::abs(acc_err);
      sum_qt += filter.qtilde();
      if (stochastic) {
        const Mat q_true = snc_q_analytic(Vec::Constant(1, cfg.true_qtilde), dt);
        sum_q11 += std::abs(q(0, 0) - q_true(0, 0));
        sum_q22 += std::abs(q(1, 1) - q_true(1, 1));
      }
    }
  } catch (const NonPsdError& e) {
    mark_failure(result, e.what());
  } catch (const IllConditionedError& e) {
    mark_failure(result, e.what());
  }
  result.seconds = std::chrono::duration<double>(elapsed).count();
  if (result.diverged) return result;
  if (count == 0) throw ConfigError("metric window contains no measurements");

  const double c = count;
  result.metrics.push_back({"mae_x", sum_x / c});
  result.metrics.push_back({"mae_v", sum_v / c});
  if (stochastic) {
    result.metrics.push_back({"mae_q11", sum_q11 / c});
    result.metrics.push_back({"mae_q22", sum_q22 / c});
  } else {
    // For white-noise filters this is the mean |a|, the residual they leave
    // unmodeled; for empirical-acceleration filters it is the tracking error.
    result.metrics.push_back({"accel_mae", sum_acc / c});
  }
  result.metrics.push_back({"containment_x", in_x / c});
  result.metrics.push_back({"containment_v", in_v / c});
  result.metrics.push_back({"qtilde_mean", sum_qt / c});
  return result;
}

// ---------------------------------------------------------------- Case II

RunResult run_case2(const Case2Config& cfg, const Case2Truth& truth, Technique technique,
                    std::uint64_t seed, std::uint64_t run, bool keep_series) {
  if (technique == Technique::kIdeal) {
    throw ConfigError("technique 'ideal' is only defined for the stochastic 1D scenario");
  }
  RunResult result;
  result.run = run;

  Rng meas_noise(seed, run, Stream::kMeasurementNoise);
  Rng init_rng(seed, run, Stream::kInitialError);
  Rng maneuver_rng(seed, run, Stream::kManeuverError);

  const bool empirical = uses_empirical_acceleration(technique);
  const CompensationModel model = empirical ? CompensationModel::kDmc : CompensationModel::kSnc;
  const int block = formation_block(empirical);
  const int n = 2 * block;
  const FormationDynamics dyn(cfg.gravity, cfg.filter_step, empirical, cfg.beta,
                              filter_maneuver(cfg, truth, maneuver_rng));

  StateEstimate init;
  init.epoch = truth.epochs.front().t;
  Vec sig = Vec::Zero(n);
  for (int sc = 0; sc < 2; ++sc) {
    sig.segment(sc * block, 3).setConstant(cfg.p0_sigma_pos);
    sig.segment(sc * block + 3, 3).setConstant(cfg.p0_sigma_vel);
    if (empirical) sig.segment(sc * block + 6, 3).setConstant(cfg.p0_sigma_acc);
  }
  init.covariance = sig.cwiseAbs2().asDiagonal();
  init.mean = Vec::Zero(n);
  const Case2Epoch& first = truth.epochs.front();
  for (int sc = 0; sc < 2; ++sc) {
    const Vec6& rv = sc == 0 ? first.chief : first.deputy;
    const Mat p6 = init.covariance.block(sc * block, sc * block, 6, 6);
    init.mean.segment(sc * block, 6) = rv + init_rng.gaussian(p6);
  }

  PolicySettings ps;
  ps.technique = technique;
  ps.model = model;
  ps.layout = NoiseLayout::stacked(2, 3, model);
  ps.spec = make_spec(6, empirical ? cfg.qtilde0_gm : cfg.qtilde0, cfg.lower_bound, cfg.upper_bound, model, cfg.beta,
                      technique == Technique::kAdmc ? cfg.admc_alpha : 1.0);
  ps.window = cfg.window;
  ps.delay = cfg.adaptation_delay;
  ps.require_full = false;
  ps.weighting = cfg.weighting;
  ps.nominal_dt = cfg.interval;
  ps.outage_factor = cfg.outage_factor;

  ImmSettings imm;
  imm.layout = NoiseLayout::stacked(2, 3, CompensationModel::kSnc);
  imm.q_low = cfg.imm_q_low;
  imm.q_high = cfg.imm_q_high;
  imm.stay = cfg.imm_stay;
  imm.mu_low = 0.5;

  Estimator filter(technique, init, ps, imm, FilterKind::kUnscented);
  DivergenceMonitor monitor(cfg.divergence_factor * cfg.p0_sigma_pos, cfg.divergence_steps);

  const double t_end = truth.epochs.back().t;
  const double t_begin = t_end - cfg.metric_orbits * cfg.period();
  double sum_pos = 0, sum_vel = 0, in_pos = 0, in_vel = 0, sum_qt = 0;
  int count = 0;

  if (keep_series) {
    result.series = RunSeries{};
    result.series->names = {"err_pos_chief", "err_pos_deputy", "err_vel_chief",
                            "err_vel_deputy", "sigma_pos_chief", "sigma_pos_deputy",
                            "qtilde", "meas_dim"};
  }

  const std::size_t steps = truth.epochs.size();
  Clock::duration elapsed{};
  try {
    for (std::size_t k = 1; k < steps; ++k) {
      const Case2Epoch& e = truth.epochs[k];
      const double dt_next = k + 1 < steps ? truth.epochs[k + 1].t - e.t : e.t - truth.epochs[k - 1].t;
      const FormationMeasurement meas(cfg, truth, k, empirical);
      const Vec z = case2_measurement(cfg, truth, k, meas_noise);
      const auto start = Clock::now();
      filter.step(dyn, meas, z, e.t, dt_next, result);
      elapsed += Clock::now() - start;
      ++result.filter_calls;

      const StateEstimate& est = filter.estimate();
      double pos_err[2], vel_err[2], sigma[2];
      int contained_pos = 0, contained_vel = 0;
      for (int sc = 0; sc < 2; ++sc) {
        const Vec6& rv = sc == 0 ? e.chief : e.deputy;
        const Vec d = est.mean.segment(sc * block, 6) - rv;
        pos_err[sc] = d.head(3).norm();
        vel_err[sc] = d.tail(3).norm();
        double trace = 0.0;
        for (int i = 0; i < 6; ++i) {
          const int idx = sc * block + i;
          const bool inside = std::abs(d(i)) <= 3.0 * std::sqrt(est.covariance(idx, idx));
          if (i < 3) {
            contained_pos += inside ? 1 : 0;
            trace += est.covariance(idx, idx);
          } else {
            contained_vel += inside ? 1 : 0;
          }
        }
        sigma[sc] = std::sqrt(trace);
      }
      const double worst = (est.mean.segment(0, 3) - e.chief.head(3))
                               .cwiseAbs()
                               .maxCoeff();
      const double worst_dep =
          (est.mean.segment(block, 3) - e.deputy.head(3)).cwiseAbs().maxCoeff();
      if (monitor.update(std::max(worst, worst_dep))) {
        result.seconds = std::chrono::duration<double>(elapsed).count();
        mark_failure(result, "position error beyond divergence threshold");
        return result;
      }
      if (result.series) {
        result.series->t.push_back(e.t);
        result.series->values.push_back({pos_err[0], pos_err[1], vel_err[0], vel_err[1],
                                         sigma[0], sigma[1], filter.qtilde(),
                                         static_cast<double>(z.size())});
      }
      if (e.t < t_begin) continue;
      ++count;
      sum_pos += 0.5 * (pos_err[0] + pos_err[1]);
      sum_vel += 0.5 * (vel_err[0] + vel_err[1]);
      in_pos += contained_pos / 6.0;
      in_vel += contained_vel / 6.0;
      sum_qt += filter.qtilde();
    }
  } catch (const NonPsdError& e) {
    mark_failure(result, e.what());
  } catch (const IllConditionedError& e) {
    mark_failure(result, e.what());
  } catch (const PropagationError& e) {
    mark_failure(result, e.what());
  }
  result.seconds = std::chrono::duration<double>(elapsed).count();
  if (result.diverged) return result;
  if (count == 0) throw ConfigError("metric window contains no measurements");

  const double c = count;
  result.metrics.push_back({"pos3d", sum_pos / c});
  result.metrics.push_back({"vel3d", sum_vel / c});
  result.metrics.push_back({"containment_pos", in_pos / c});
  result.metrics.push_back({"containment_vel", in_vel / c});
  result.metrics.push_back({"qtilde_mean", sum_qt / c});
  return result;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<Aggregate> aggregate_runs(const std::vector<RunResult>& runs,
                                      const std::string& technique, std::uint64_t seed) {
  std::vector<std::string> names;
  for (const auto& r : runs) {
    for (const auto& m : r.metrics) {
      if (std::find(names.begin(), names.end(), m.name) == names.end()) names.push_back(m.name);
    }
  }
  std::vector<Aggregate> out;
  for (const auto& name : names) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : runs) {
      if (r.diverged) continue;
      if (const Metric* m = r.find(name)) {
        sum += m->value;
        ++n;
      }
    }
    Aggregate a{technique, name, std::numeric_limits<double>::quiet_NaN(), 0.0, n, seed};
    if (n > 0) {
      a.value = sum / n;
      if (n > 1) {
        double ss = 0.0;
        for (const auto& r : runs) {
          if (r.diverged) continue;
          if (const Metric* m = r.find(name)) ss += (m->value - a.value) * (m->value - a.value);
        }
        a.std_error = std::sqrt(ss / (n - 1) / n);
      }
    }
    out.push_back(a);
  }
  auto count_row = [&](const std::string& name, double value) {
    out.push_back({technique, name, value, 0.0, static_cast<int>(runs.size()), seed});
  };
  double diverged = 0, nonpsd = 0, floored = 0, degenerate = 0, underflow = 0, outages = 0;
  for (const auto& r : runs) {
    diverged += r.diverged ? 1 : 0;
    nonpsd += r.nonpsd_q;
    floored += r.floored_weights;
    degenerate += r.degenerate_axes;
    underflow += r.imm_underflows;
    outages += r.excluded_outages;
  }
  count_row("diverged_runs", diverged);
  count_row("nonpsd_q", nonpsd);
  count_row("floored_weights", floored);
  count_row("degenerate_axes", degenerate);
  count_row("imm_underflows", underflow);
  count_row("excluded_outages", outages);
  return out;
}

CampaignResult run_campaign(const ScenarioConfig& config, Technique technique,
                            const CampaignOptions& options) {
  std::shared_ptr<const Case2Truth> truth;
  if (config.kind == ScenarioConfig::Kind::kCase2) {
    config.validate();
    truth = std::make_shared<const Case2Truth>(case2_truth(config.case2));
  }
  return run_campaign(config, technique, options, truth);
}

CampaignResult run_campaign(const ScenarioConfig& config, Technique technique,
                            const CampaignOptions& options,
                            std::shared_ptr<const Case2Truth> truth) {
  config.validate();
  if (options.runs < 1) throw ConfigError("runs must be at least 1");
  if (options.threads < 1) throw ConfigError("threads must be at least 1");
  if (config.kind == ScenarioConfig::Kind::kCase2 && !truth) {
    truth = std::make_shared<const Case2Truth>(case2_truth(config.case2));
  }

  CampaignResult out;
  out.scenario = config.name;
  out.technique = options.label.empty() ? technique_name(technique) : options.label;
  out.seed = options.seed;
  out.runs_requested = options.runs;
  out.runs.resize(static_cast<std::size_t>(options.runs));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= options.runs) return;
      try {
        const bool keep = i < options.series_runs;
        const auto run = static_cast<std::uint64_t>(i);
        out.runs[i] = config.kind == ScenarioConfig::Kind::kCase1
                          ? run_case1(config.case1, technique, options.seed, run, keep)
                          : run_case2(config.case2, *truth, technique, options.seed, run, keep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(options.runs);
        return;
      }
    }
  };
  const int threads = std::min(options.threads, options.runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  out.aggregates = aggregate_runs(out.runs, out.technique, options.seed);

  nlohmann::json m;
  m["scenario"] = nlohmann::json::parse(scenario_to_json(config));
  m["technique"] = out.technique;
  m["seed"] = options.seed;
  m["runs"] = options.runs;
  m["threads"] = options.threads;
  m["series_runs"] = options.series_runs;
  m["diverged_runs"] = out.diverged();
  out.manifest_json = m.dump(2);
  return out;
}

void emit_results(const std::vector<CampaignResult>& results, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
    return f;
  };

  std::ofstream agg = open("aggregates.csv");
  agg << "technique,metric,value,std_error,runs,seed\n";
  std::ofstream runs = open("runs.csv");
  runs << "technique,run,diverged,metric,value\n";
  std::ofstream series = open("series.csv");
  series << "technique,run,t,name,value\n";
  std::ofstream timing = open("timing.csv");
  timing << "technique,runs,filter_calls,seconds,seconds_per_call\n";

  nlohmann::json manifests = nlohmann::json::array();
  for (const auto& c : results) {
    for (const auto& a : c.aggregates) {
      agg << a.technique << ',' << a.metric << ',' << fmt(a.value) << ',' << fmt(a.std_error)
          << ',' << a.runs << ',' << a.seed << '\n';
    }
    long calls = 0;
    double seconds = 0.0;
    for (const auto& r : c.runs) {
      calls += r.filter_calls;
      seconds += r.seconds;
      for (const auto& m : r.metrics) {
        runs << c.technique << ',' << r.run << ',' << (r.diverged ? 1 : 0) << ',' << m.name
             << ',' << fmt(m.value) << '\n';
      }
      if (r.metrics.empty()) {
        runs << c.technique << ',' << r.run << ',' << (r.diverged ? 1 : 0) << ",none,nan\n";
      }
      if (!r.series) continue;
      const RunSeries& s = *r.series;
      for (std::size_t k = 0; k < s.t.size(); ++k) {
        for (std::size_t j = 0; j < s.names.size(); ++j) {
          series << c.technique << ',' << r.run << ',' << fmt(s.t[k]) << ',' << s.names[j] << ','
                 << fmt(s.values[k][j]) << '\n';
        }
      }
    }
    timing << c.technique << ',' << c.runs.size() << ',' << calls << ',' << fmt(seconds) << ','
           << fmt(c.mean_seconds_per_call()) << '\n';
    if (!c.manifest_json.empty()) manifests.push_back(nlohmann::json::parse(c.manifest_json));
  }
  std::ofstream man = open("manifest.json");
  man << manifests.dump(2) << '\n';
  for (std::ofstream* f : {&agg, &runs, &series, &timing, &man}) {
    f->flush();
    if (!*f) throw std::runtime_error("write failure in '" + dir.string() + "'");
  }
}

std::vector<Aggregate> read_aggregates(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open '" + file.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != "technique,metric,value,std_error,runs,seed") {
    throw std::runtime_error("'" + file.string() + "' is not an aggregates file");
  }
  std::vector<Aggregate> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::runtime_error("malformed aggregate row: " + line);
    Aggregate a;
    a.technique = f[0];
    a.metric = f[1];
    a.value = std::strtod(f[2].c_str(), nullptr);
    a.std_error = std::strtod(f[3].c_str(), nullptr);
    a.runs = std::stoi(f[4]);
    a.seed = std::stoull(f[5]);
    out.push_back(a);
  }
  return out;
}

}  // namespace qadapt
