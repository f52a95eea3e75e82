#include "qadapt/process_noise.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qadapt/errors.hpp"

namespace qadapt {

namespace {

void require_nonnegative(const Vec& q, const char* who) {
  for (int i = 0; i < q.size(); ++i) {
    if (!(q(i) >= 0.0)) {
      std::ostringstream os;
      os << who << ": qtilde entry " << i << " is negative or NaN (" << q(i) << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

// Integral over u ∈ [0, 1] of two series Σ a_j u^(j+ma) and Σ b_k u^(k+mb).
template <std::size_t K>
double series_product_integral(const std::array<double, K>& a, int ma,
                               const std::array<double, K>& b, int mb) {
  double sum = 0.0;
  for (int j = static_cast<int>(K) - 1; j >= 0; --j) {
    for (int k = static_cast<int>(K) - 1; k >= 0; --k) {
      sum += a[j] * b[k] / static_cast<double>(j + k + ma + mb + 1);
    }
  }
  return sum;
}

DmcCoefficients dmc_series(double beta, double dt) {
  // With s = Δt·u and x = βΔt the impulse responses are
  //   ã: e^{-xu},  v: Δt (1 − e^{-xu})/x,  r: Δt² (xu − 1 + e^{-xu})/x²
  // i.e. Δt^p Σ_k (−x)^k u^(k+p) / (k+p)!  with p = 0, 1, 2.
  constexpr std::size_t kTerms = 24;
  const double x = beta * dt;
  std::array<double, kTerms> ca{}, cv{}, cr{};
  double pow_x = 1.0;
  for (std::size_t k = 0; k < kTerms; ++k) {
    const double kk = static_cast<double>(k);
    const double fact_k = std::tgamma(kk + 1.0);
    ca[k] = pow_x / fact_k;
    cv[k] = pow_x / (fact_k * (kk + 1.0));
    cr[k] = pow_x / (fact_k * (kk + 1.0) * (kk + 2.0));
    pow_x *= -x;
  }
  DmcCoefficients c;
  c.c33 = dt * series_product_integral(ca, 0, ca, 0);
  c.c32 = dt * dt * series_product_integral(cv, 1, ca, 0);
  c.c31 = std::pow(dt, 3) * series_product_integral(cr, 2, ca, 0);
  c.c22 = std::pow(dt, 3) * series_product_integral(cv, 1, cv, 1);
  c.c21 = std::pow(dt, 4) * series_product_integral(cr, 2, cv, 1);
  c.c11 = std::pow(dt, 5) * series_product_integral(cr, 2, cr, 2);
  return c;
}

DmcCoefficients dmc_closed_form(double beta, double dt) {
  const double x = beta * dt;
  const double e1 = x > 700.0 ? 0.0 : std::exp(-x);
  const double e2 = x > 350.0 ? 0.0 : std::exp(-2.0 * x);
  const double b = beta, b2 = b * b, b3 = b2 * b, b4 = b2 * b2;
  const double t = dt;
  // Building blocks: ∫ e^{-βs}, ∫ e^{-2βs}, ∫ s e^{-βs} over [0, Δt]
  const double i_e1 = (1.0 - e1) / b;
  const double i_e2 = (1.0 - e2) / (2.0 * b);
  const double i_se1 = (1.0 - e1 * (1.0 + x)) / b2;
  const double i_one_minus_e_sq = t - 2.0 * i_e1 + i_e2;  // ∫ (1 − e^{-βs})²
  const double i_s_one_minus_e = t * t / 2.0 - i_se1;     // ∫ s (1 − e^{-βs})

  DmcCoefficients c;
  c.c33 = i_e2;
  c.c32 = (i_e1 - i_e2) / b;
  c.c31 = (i_se1) / b - (i_e1 - i_e2) / b2;
  c.c22 = i_one_minus_e_sq / b2;
  c.c21 = i_s_one_minus_e / b2 - i_one_minus_e_sq / b3;
  c.c11 = t * t * t / (3.0 * b2) - 2.0 * i_s_one_minus_e / b3 + i_one_minus_e_sq / b4;
  return c;
}

}  // namespace

void NoiseSpec::validate() const {
  const auto n = qtilde.size();
  if (lower.size() != n) throw ConfigError("NoiseSpec: lower bound size does not match qtilde");
  if (upper && upper->size() != n) {
    throw ConfigError("NoiseSpec: upper bound size does not match qtilde");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("NoiseSpec: alpha must lie in (0, 1]");
  for (int i = 0; i < n; ++i) {
    if (!(lower(i) >= 0.0)) throw ConfigError("NoiseSpec: lower bound must be nonnegative");
    if (!(qtilde(i) >= 0.0)) throw ConfigError("NoiseSpec: qtilde must be nonnegative");
    if (upper && !((*upper)(i) >= lower(i))) {
      throw ConfigError("NoiseSpec: upper bound below lower bound");
    }
  }
  for (int i = 0; i < beta.size(); ++i) {
    if (!(beta(i) > 0.0)) throw ConfigError("NoiseSpec: beta must be strictly positive");
  }
}

NoiseLayout NoiseLayout::stacked(int bodies, int axes_per_body, CompensationModel model) {
  const int per_axis = model == CompensationModel::kDmc ? 3 : 2;
  const int block = per_axis * axes_per_body;
  NoiseLayout layout;
  layout.state_dim = bodies * block;
  for (int b = 0; b < bodies; ++b) {
    const int base = b * block;
    for (int a = 0; a < axes_per_body; ++a) {
      AxisIndices ax;
      ax.position = base + a;
      ax.velocity = base + axes_per_body + a;
      if (model == CompensationModel::kDmc) ax.acceleration = base + 2 * axes_per_body + a;
      layout.axes.push_back(ax);
    }
    for (int i = 0; i < 2 * axes_per_body; ++i) layout.ss_indices.push_back(base + i);
  }
  return layout;
}

DmcCoefficients dmc_coefficients(double beta, double dt) {
  if (!(beta > 0.0)) throw std::invalid_argument("dmc_coefficients: beta must be positive");
  if (dt < 0.0) throw std::invalid_argument("dmc_coefficients: dt must be nonnegative");
  if (beta * dt < 0.5) return dmc_series(beta, dt);
  return dmc_closed_form(beta, dt);
}

Mat assemble_q(const NoiseLayout& layout, CompensationModel model, const Vec& qtilde,
               const Vec& beta, double dt) {
  if (qtilde.size() != layout.axis_count()) {
    throw DimensionError("assemble_q: qtilde needs one entry per layout axis");
  }
  require_nonnegative(qtilde, "assemble_q");
  if (dt < 0.0) throw std::invalid_argument("assemble_q: dt must be nonnegative");
  Mat q = Mat::Zero(layout.state_dim, layout.state_dim);
  for (int i = 0; i < layout.axis_count(); ++i) {
    const AxisIndices& ax = layout.axes[i];
    const double s = qtilde(i);
    if (model == CompensationModel::kSnc) {
      q(ax.position, ax.position) = s * dt * dt * dt / 3.0;
      q(ax.position, ax.velocity) = q(ax.velocity, ax.position) = s * dt * dt / 2.0;
      q(ax.velocity, ax.velocity) = s * dt;
    } else {
      if (beta.size() != layout.axis_count()) {
        throw DimensionError("assemble_q: beta needs one entry per layout axis");
      }
      if (ax.acceleration < 0) throw DimensionError("assemble_q: layout has no acceleration index");
      const DmcCoefficients c = dmc_coefficients(beta(i), dt);
      const int idx[3] = {ax.position, ax.velocity, ax.acceleration};
      const double m[3][3] = {{c.c11, c.c21, c.c31}, {c.c21, c.c22, c.c32}, {c.c31, c.c32, c.c33}};
      for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) q(idx[r], idx[k]) = s * m[r][k];
      }
    }
  }
  return q;
}

Mat snc_q_analytic(const Vec& qtilde, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("snc_q_analytic: dt must be positive");
  const int n = static_cast<int>(qtilde.size());
  return assemble_q(NoiseLayout::stacked(1, n, CompensationModel::kSnc),
                    CompensationModel::kSnc, qtilde, Vec(), dt);
}

Mat dmc_q_analytic(const Vec& qtilde, const Vec& beta, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dmc_q_analytic: dt must be positive");
  const int n = static_cast<int>(qtilde.size());
  return assemble_q(NoiseLayout::stacked(1, n, CompensationModel::kDmc),
                    CompensationModel::kDmc, qtilde, beta, dt);
}

Mat q_numeric(const DynamicsModel& model, const Vec& qtilde, double t0, double t1,
              const Vec& x0) {
  if (!(t1 > t0)) throw std::invalid_argument("q_numeric: t1 must exceed t0");
  require_nonnegative(qtilde, "q_numeric");
  const int n = model.state_dim();
  const bool nonlinear = x0.size() == n;

  auto integrand = [&](double tau) -> Mat {
    Vec x_tau = nonlinear ? (tau == t0 ? x0 : model.propagate(x0, t0, tau)) : Vec::Zero(n);
    if (!x_tau.allFinite()) {
      throw PropagationError("q_numeric: propagation failed inside the interval");
    }
    const Mat phi = model.stm(x_tau, tau, t1);
    const Mat g = model.noise_map(tau);
    if (g.cols() != qtilde.size()) {
      throw DimensionError("q_numeric: qtilde size does not match noise map columns");
    }
    const Mat pg = phi * g;
    return pg * qtilde.asDiagonal() * pg.transpose();
  };

  constexpr int kStartPanels = 64;
  constexpr int kMaxPanels = 1 << 17;
  const double span = t1 - t0;

  Mat ends = integrand(t0) + integrand(t1);
  Mat odd = Mat::Zero(n, n);
  Mat even = Mat::Zero(n, n);
  int panels = kStartPanels;
  {
    const double h = span / panels;
    for (int i = 1; i < panels; ++i) {
      (i % 2 ? odd : even) += integrand(t0 + i * h);
    }
  }
  auto simpson = [&](int p) { return (span / p / 3.0) * (ends + 4.0 * odd + 2.0 * even); };
  Mat current = simpson(panels);
  while (panels < kMaxPanels) {
    even += odd;
    odd.setZero();
    panels *= 2;
    const double h = span / panels;
    for (int i = 1; i < panels; i += 2) odd += integrand(t0 + i * h);
    const Mat next = simpson(panels);
    const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
    const double change = (next - current).cwiseAbs().maxCoeff();
    const Mat prev = current;
    current = next;
    if (change <= 1e-11 * scale) {
      current = next + (next - prev) / 15.0;
      break;
    }
  }
  return symmetrize(current);
}

Vec gauss_markov_propagate(const Vec& a, const Vec& beta, double dt) {
  if (dt < 0.0) throw std::invalid_argument("gauss_markov_propagate: dt must be nonnegative");
  if (a.size() != beta.size()) throw DimensionError("gauss_markov_propagate: size mismatch");
  return (a.array() * (-beta.array() * dt).exp()).matrix();
}

LinearDynamics snc_linear_model(int axes) {
  Mat a = Mat::Zero(2 * axes, 2 * axes);
  a.topRightCorner(axes, axes).setIdentity();
  Mat g = Mat::Zero(2 * axes, axes);
  g.bottomRows(axes).setIdentity();
  return LinearDynamics(a, g);
}

LinearDynamics dmc_linear_model(const Vec& beta) {
  const int k = static_cast<int>(beta.size());
  Mat a = Mat::Zero(3 * k, 3 * k);
  a.block(0, k, k, k).setIdentity();
  a.block(k, 2 * k, k, k).setIdentity();
  a.block(2 * k, 2 * k, k, k) = -beta.asDiagonal().toDenseMatrix();
  Mat g = Mat::Zero(3 * k, k);
  g.bottomRows(k).setIdentity();
  return LinearDynamics(a, g);
}

}  // namespace qadapt
