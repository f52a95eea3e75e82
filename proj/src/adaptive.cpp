#include "qadapt/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qadapt/errors.hpp"

namespace qadapt {

namespace {

constexpr double kWeightFloor = 1e-300;

int ss_position(const std::vector<int>& ss, int state_index) {
  auto it = std::find(ss.begin(), ss.end(), state_index);
  if (it == ss.end()) throw DimensionError("state index is not part of the spacecraft-state block");
  return static_cast<int>(it - ss.begin());
}

void check_wls_shapes(const Mat& x, const Vec& b, const Vec& w, const Vec& lb,
                      const std::optional<Vec>& ub) {
  if (b.size() != x.rows() || w.size() != x.rows()) {
    throw DimensionError("solve_wls_boxed: b and W must have one entry per row of X");
  }
  if (lb.size() != x.cols() || (ub && ub->size() != x.cols())) {
    throw DimensionError("solve_wls_boxed: bounds must have one entry per column of X");
  }
  for (int i = 0; i < lb.size(); ++i) {
    if (!(lb(i) >= 0.0)) throw std::invalid_argument("solve_wls_boxed: lower bound must be >= 0");
    if (ub && !((*ub)(i) >= lb(i))) {
      throw std::invalid_argument("solve_wls_boxed: upper bound below lower bound");
    }
  }
  for (int i = 0; i < w.size(); ++i) {
    if (!(w(i) > 0.0)) throw std::invalid_argument("solve_wls_boxed: W must be positive");
  }
}

double clamp_to(double v, int i, const Vec& lb, const std::optional<Vec>& ub) {
  v = std::max(v, lb(i));
  if (ub) v = std::min(v, (*ub)(i));
  return v;
}

Vec project(const Vec& q, const Vec& lb, const std::optional<Vec>& ub) {
  Vec out(q.size());
  for (int i = 0; i < q.size(); ++i) out(i) = clamp_to(q(i), i, lb, ub);
  return out;
}

bool columns_decoupled(const Mat& x) {
  for (int r = 0; r < x.rows(); ++r) {
    int nonzero = 0;
    for (int c = 0; c < x.cols(); ++c) nonzero += x(r, c) != 0.0;
    if (nonzero > 1) return false;
  }
  return true;
}

}  // namespace

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("SlidingWindow: capacity must be >= 1");
}

bool SlidingWindow::push(WindowEntry entry) {
  if (entry.record.outage) {
    ++excluded_;
    return false;
  }
  entries_.push_back(std::move(entry));
  if (entries_.size() > capacity_) entries_.pop_front();
  return true;
}

Mat cm_estimate_full(const SlidingWindow& window) {
  if (window.empty()) throw std::invalid_argument("cm_estimate_full: window is empty");
  const auto& first = window.entries().front();
  const int n = static_cast<int>(first.posterior_cov.rows());
  Mat sum = Mat::Zero(n, n);
  for (const auto& e : window.entries()) {
    const Vec& dx = e.record.state_correction;
    sum += e.posterior_cov - e.propagated_cov + dx * dx.transpose();
  }
  return symmetrize(sum / static_cast<double>(window.size()));
}

Mat cm_estimate_ss(const SlidingWindow& window) {
  if (window.empty()) throw std::invalid_argument("cm_estimate_ss: window is empty");
  const int n = static_cast<int>(window.entries().front().record.state_correction.size());
  Mat sum = Mat::Zero(n, n);
  for (const auto& e : window.entries()) {
    const Vec& dx = e.record.state_correction;
    sum.noalias() += dx * dx.transpose();
  }
  return symmetrize(sum / static_cast<double>(window.size()));
}

Weighting weighting_matrix(const SlidingWindow& window, const std::vector<int>& ss_indices,
                           WeightingMode mode) {
  if (window.empty()) throw std::invalid_argument("weighting_matrix: window is empty");
  const double n = static_cast<double>(window.size());
  auto sigma_bar = [&](const WindowEntry& e) {
    const Mat s = submatrix(e.record.correction_cov, ss_indices);
    const Vec d = s.diagonal();
    return vech(s.cwiseProduct(s) + d * d.transpose());
  };
  Weighting w;
  if (mode == WeightingMode::kSteadyState) {
    w.diag = sigma_bar(window.newest()) / n;
  } else {
    w.diag = Vec::Zero(vech_size(static_cast<int>(ss_indices.size())));
    for (const auto& e : window.entries()) w.diag += sigma_bar(e);
    w.diag /= n * n;
  }
  for (int i = 0; i < w.diag.size(); ++i) {
    if (!(w.diag(i) >= kWeightFloor)) {
      w.diag(i) = kWeightFloor;
      ++w.floored;
    }
  }
  return w;
}

DesignMatrix build_design_matrix(CompensationModel model, const NoiseLayout& layout,
                                 const Vec& beta, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("build_design_matrix: dt must be positive");
  const int m = static_cast<int>(layout.ss_indices.size());
  DesignMatrix dm;
  dm.x = Mat::Zero(vech_size(m), layout.axis_count());
  for (int i = 0; i < layout.axis_count(); ++i) {
    const int p = ss_position(layout.ss_indices, layout.axes[i].position);
    const int v = ss_position(layout.ss_indices, layout.axes[i].velocity);
    double rr, vr, vv;
    if (model == CompensationModel::kSnc) {
      rr = dt * dt * dt / 3.0;
      vr = dt * dt / 2.0;
      vv = dt;
    } else {
      if (beta.size() != layout.axis_count()) {
        throw DimensionError("build_design_matrix: beta needs one entry per axis");
      }
      const DmcCoefficients c = dmc_coefficients(beta(i), dt);
      rr = c.c11;
      vr = c.c21;
      vv = c.c22;
    }
    dm.x(vech_index(m, p, p), i) = rr;
    dm.x(vech_index(m, v, p), i) = vr;
    dm.x(vech_index(m, v, v), i) = vv;
  }
  return dm;
}

DesignMatrix build_design_matrix_numeric(const DynamicsModel& model, const NoiseLayout& layout,
                                         double t0, double t1, const Vec& x0) {
  const int k = layout.axis_count();
  const int m = static_cast<int>(layout.ss_indices.size());
  DesignMatrix dm;
  dm.x.resize(vech_size(m), k);
  for (int i = 0; i < k; ++i) {
    Vec e = Vec::Zero(k);
    e(i) = 1.0;
    dm.x.col(i) = vech(submatrix(q_numeric(model, e, t0, t1, x0), layout.ss_indices));
  }
  return dm;
}

WlsSolution solve_wls_decoupled(const Mat& x, const Vec& b, const Vec& w_diag, const Vec& lb,
                                const std::optional<Vec>& ub) {
  check_wls_shapes(x, b, w_diag, lb, ub);
  if (!columns_decoupled(x)) {
    throw std::invalid_argument("solve_wls_decoupled: columns of X share rows");
  }
  WlsSolution sol;
  sol.fast_path = true;
  sol.q.resize(x.cols());
  for (int i = 0; i < x.cols(); ++i) {
    double num = 0.0, den = 0.0;
    for (int r = 0; r < x.rows(); ++r) {
      const double xr = x(r, i);
      if (xr == 0.0) continue;
      num += xr * b(r) / w_diag(r);
      den += xr * xr / w_diag(r);
    }
    if (!(den > 0.0) || !std::isfinite(num / den)) {
      sol.q(i) = lb(i);
      ++sol.degenerate_axes;
      continue;
    }
    sol.q(i) = clamp_to(num / den, i, lb, ub);
  }
  return sol;
}

WlsSolution solve_wls_projected_gradient(const Mat& x, const Vec& b, const Vec& w_diag,
                                         const Vec& lb, const std::optional<Vec>& ub,
                                         int max_iterations) {
  check_wls_shapes(x, b, w_diag, lb, ub);
  const int k = static_cast<int>(x.cols());
  const Vec inv_sqrt_w = w_diag.cwiseSqrt().cwiseInverse();
  const Mat a = inv_sqrt_w.asDiagonal() * x;
  const Vec c = inv_sqrt_w.asDiagonal() * b;

  WlsSolution sol;
  // Degenerate columns cannot influence the objective; pin them at lb.
  Vec d = a.colwise().squaredNorm().transpose();
  std::vector<int> active;
  for (int i = 0; i < k; ++i) {
    if (d(i) > 0.0 && std::isfinite(d(i))) {
      active.push_back(i);
    } else {
      ++sol.degenerate_axes;
    }
  }
  sol.q = lb;
  if (active.empty()) return sol;

  // Work in Jacobi-scaled variables y = sqrt(d) q so the Hessian has unit diagonal.
  const int na = static_cast<int>(active.size());
  Mat as(a.rows(), na);
  Vec scale(na), ylb(na);
  std::optional<Vec> yub;
  if (ub) yub = Vec(na);
  for (int j = 0; j < na; ++j) {
    const int i = active[j];
    scale(j) = std::sqrt(d(i));
    as.col(j) = a.col(i) / scale(j);
    ylb(j) = lb(i) * scale(j);
    if (ub) (*yub)(j) = (*ub)(i) * scale(j);
  }
  const Mat hess = as.transpose() * as;
  const Vec lin = as.transpose() * c;
  const double lip = std::max(Eigen::SelfAdjointEigenSolver<Mat>(hess, Eigen::EigenvaluesOnly)
                                  .eigenvalues()
                                  .maxCoeff(),
                              1e-300);
  auto objective = [&](const Vec& y) { return (as * y - c).squaredNorm(); };

  Vec y = project(Vec::Zero(na), ylb, yub);
  Vec y_prev = y, z = y;
  double t = 1.0;
  double f_prev = objective(y);
  int it = 0;
  int small_steps = 0;
  for (; it < max_iterations; ++it) {
    const Vec grad = hess * z - lin;
    y = project(z - grad / lip, ylb, yub);
    double f = objective(y);
    if (f > f_prev) {  // restart momentum
      t = 1.0;
      z = y_prev;
      y = project(z - (hess * z - lin) / lip, ylb, yub);
      f = objective(y);
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = y + ((t - 1.0) / t_next) * (y - y_prev);
    t = t_next;
    const double change = std::abs(f_prev - f);
    small_steps = change <= 1e-12 * std::max(std::abs(f), 1e-300) ? small_steps + 1 : 0;
    y_prev = y;
    f_prev = f;
    if (small_steps >= 3) break;
  }

  // Polish: solve exactly on the free set implied by the converged iterate and
  // accept it when it stays feasible and lowers the objective.
  for (int pass = 0; pass < 8; ++pass) {
    const Vec grad = hess * y - lin;
    std::vector<int> free_set;
    for (int j = 0; j < na; ++j) {
      const bool at_lb = y(j) <= ylb(j) && grad(j) >= 0.0;
      const bool at_ub = yub && y(j) >= (*yub)(j) && grad(j) <= 0.0;
      if (!at_lb && !at_ub) free_set.push_back(j);
    }
    if (free_set.empty()) break;
    const int nf = static_cast<int>(free_set.size());
    Mat hf(nf, nf);
    Vec rhs(nf);
    for (int r = 0; r < nf; ++r) {
      rhs(r) = lin(free_set[r]);
      for (int j = 0; j < na; ++j) {
        if (std::find(free_set.begin(), free_set.end(), j) == free_set.end()) {
          rhs(r) -= hess(free_set[r], j) * y(j);
        }
      }
      for (int s = 0; s < nf; ++s) hf(r, s) = hess(free_set[r], free_set[s]);
    }
    const Vec yf = hf.ldlt().solve(rhs);
    Vec candidate = y;
    for (int r = 0; r < nf; ++r) candidate(free_set[r]) = yf(r);
    const Vec projected = project(candidate, ylb, yub);
    const bool feasible = (projected - candidate).cwiseAbs().maxCoeff() == 0.0;
    if (objective(projected) <= objective(y)) y = projected;
    if (feasible) break;
  }

  for (int j = 0; j < na; ++j) {
    const int i = active[j];
    sol.q(i) = clamp_to(y(j) / scale(j), i, lb, ub);
  }
  sol.iterations = it;
  return sol;
}

WlsSolution solve_wls_boxed(const Mat& x, const Vec& b, const Vec& w_diag, const Vec& lb,
                            const std::optional<Vec>& ub) {
  if (columns_decoupled(x)) return solve_wls_decoupled(x, b, w_diag, lb, ub);
  return solve_wls_projected_gradient(x, b, w_diag, lb, ub);
}

Vec forgetting_update(const Vec& prev, const Vec& star, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("forgetting_update: alpha must lie in (0, 1]");
  }
  if (prev.size() != star.size()) throw DimensionError("forgetting_update: size mismatch");
  if (alpha == 1.0) return star;
  return (1.0 - alpha) * prev + alpha * star;
}

AdaptiveStep adaptive_step(const SlidingWindow& window, const NoiseSpec& spec,
                           const AdaptiveConfig& config, double dt_next) {
  if (window.empty()) throw std::invalid_argument("adaptive_step: window is empty");
  const NoiseLayout& layout = config.layout;
  AdaptiveStep out;
  out.cm_estimate = cm_estimate_full(window);
  const Vec b = vech(submatrix(out.cm_estimate, layout.ss_indices));
  const Weighting w = weighting_matrix(window, layout.ss_indices, config.weighting);
  out.floored_weights = w.floored;
  const DesignMatrix x =
      build_design_matrix(config.model, layout, spec.beta, window.newest().record.dt);
  const WlsSolution sol = solve_wls_boxed(x.x, b, w.diag, spec.lower, spec.upper);
  out.degenerate_axes = sol.degenerate_axes;
  out.qtilde_star = sol.q;

  out.spec = spec;
  out.spec.qtilde = project(forgetting_update(spec.qtilde, sol.q, spec.alpha), spec.lower,
                            spec.upper);
  out.q_next = assemble_q(layout, config.model, out.spec.qtilde, spec.beta, dt_next);
  return out;
}

AdaptiveStep asnc_step(const SlidingWindow& window, const NoiseSpec& spec,
                       const NoiseLayout& layout, double dt_next, WeightingMode weighting) {
  return adaptive_step(window, spec, {CompensationModel::kSnc, layout, weighting}, dt_next);
}

AdaptiveStep admc_step(const SlidingWindow& window, const NoiseSpec& spec,
                       const NoiseLayout& layout, double dt_next, WeightingMode weighting) {
  return adaptive_step(window, spec, {CompensationModel::kDmc, layout, weighting}, dt_next);
}

}  // namespace qadapt
