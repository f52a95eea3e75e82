#pragma once

#include <optional>
#include <vector>

#include "qadapt/filter_core.hpp"
#include "qadapt/linalg.hpp"

namespace qadapt {

/// Diagonal continuous-time noise intensity plus the knobs the adaptive
/// estimators tune or hold fixed. Units: m²/s³ (white acceleration) or
/// m²/s⁵ (Gauss–Markov acceleration).
struct NoiseSpec {
  Vec qtilde;
  Vec lower;
  std::optional<Vec> upper;
  Vec beta;  // 1/s, empty for white-noise compensation
  double alpha = 1.0;

  /// Checks sizes, signs, bound ordering and α ∈ (0, 1]. Throws ConfigError.
  void validate() const;
};

enum class CompensationModel { kSnc, kDmc };

/// One Cartesian axis of one spacecraft inside a larger state vector.
struct AxisIndices {
  int position = 0;
  int velocity = 0;
  int acceleration = -1;  // empirical acceleration, DMC only
};

/// Where the compensated axes live inside the filter state and which state
/// entries form the "spacecraft state" block whose Q is fitted.
struct NoiseLayout {
  int state_dim = 0;
  std::vector<AxisIndices> axes;
  std::vector<int> ss_indices;

  /// `bodies` stacked blocks of [r (axes), v (axes), ã (axes, DMC only)].
  static NoiseLayout stacked(int bodies, int axes_per_body, CompensationModel model);
  int axis_count() const { return static_cast<int>(axes.size()); }
};

/// Cruickshank coefficients for one Gauss–Markov axis with unit intensity:
/// position, velocity and acceleration second moments of the noise response.
struct DmcCoefficients {
  double c11 = 0, c21 = 0, c31 = 0, c22 = 0, c32 = 0, c33 = 0;
};

/// Evaluated with a power series for small βΔt (the printed closed form
/// cancels catastrophically there) and with large-β limits when βΔt > 700.
DmcCoefficients dmc_coefficients(double beta, double dt);

/// Per-axis SNC block [[Δt³/3, Δt²/2], [Δt²/2, Δt]] · q.
Mat snc_q_analytic(const Vec& qtilde, double dt);

/// Per-axis DMC block scaled by q, state ordering [r; v; ã] per body
/// (axes grouped: r for all axes, then v, then ã).
Mat dmc_q_analytic(const Vec& qtilde, const Vec& beta, double dt);

/// Places the analytic per-axis Q into a full state-sized matrix according
/// to the layout. qtilde and beta carry one entry per layout axis.
Mat assemble_q(const NoiseLayout& layout, CompensationModel model, const Vec& qtilde,
               const Vec& beta, double dt);

/// ∫ Φ(t1,τ) Γ Q̃ Γᵀ Φ(t1,τ)ᵀ dτ over [t0, t1] by composite Simpson
/// quadrature. Starts at 64 panels and doubles until successive results
/// agree to 1e-11 relative. `x0` seeds the stm of nonlinear models.
Mat q_numeric(const DynamicsModel& model, const Vec& qtilde, double t0, double t1,
              const Vec& x0 = Vec());

/// Deterministic part of the first-order Gauss–Markov solution.
Vec gauss_markov_propagate(const Vec& a, const Vec& beta, double dt);

/// Linear models used by the Case I filters and by the quadrature tests:
/// per-axis double integrator or Gauss–Markov augmented triple.
LinearDynamics snc_linear_model(int axes);
LinearDynamics dmc_linear_model(const Vec& beta);

}  // namespace qadapt
