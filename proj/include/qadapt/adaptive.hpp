#pragma once

#include <cstddef>
#include <deque>
#include <optional>

#include "qadapt/filter_core.hpp"
#include "qadapt/process_noise.hpp"

namespace qadapt {

/// One filter cycle's contribution to the covariance-matching window.
struct WindowEntry {
  InnovationRecord record;
  Mat posterior_cov;   // P_{p|p}
  Mat propagated_cov;  // Φ_p P_{p−1|p−1} Φ_pᵀ (sigma-point equivalent for the UKF)
};

/// Bounded FIFO of filter cycles. Outage cycles are dropped on insert.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity);

  /// Returns false (and leaves the window untouched) for outage records.
  bool push(WindowEntry entry);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return entries_.size() == capacity_; }
  bool empty() const { return entries_.empty(); }
  std::size_t excluded() const { return excluded_; }
  const std::deque<WindowEntry>& entries() const { return entries_; }
  const WindowEntry& newest() const { return entries_.back(); }

 private:
  std::size_t capacity_;
  std::size_t excluded_ = 0;
  std::deque<WindowEntry> entries_;
};

/// (1/N) Σ (P_{p|p} − Φ P_{p−1|p−1} Φᵀ + Δx Δxᵀ). Symmetric, not necessarily
/// PSD. Throws std::invalid_argument on an empty window.
Mat cm_estimate_full(const SlidingWindow& window);

/// (1/N) Σ Δx Δxᵀ. PSD by construction.
Mat cm_estimate_ss(const SlidingWindow& window);

enum class WeightingMode { kSteadyState, kWindowed };

struct Weighting {
  Vec diag;  // over vech of the spacecraft-state block
  int floored = 0;
};

/// Diagonal of W from the Isserlis fourth-moment identity,
/// Σ̄ = Σ∘Σ + diag(Σ) diag(Σ)ᵀ, restricted to `ss_indices`. The windowed mode
/// averages (1/N²) Σ_p vech(Σ̄_p); the steady-state mode uses (1/N) vech(Σ̄)
/// of the newest record. Entries below 1e-300 are floored and counted.
Weighting weighting_matrix(const SlidingWindow& window, const std::vector<int>& ss_indices,
                           WeightingMode mode);

/// Maps the per-axis Q̃ to vech(Q_ss), Q_ss = submatrix(Q, layout.ss_indices).
struct DesignMatrix {
  Mat x;
};

/// Analytic columns: [Δt³/3, Δt²/2, Δt] per axis for SNC, [C11, C21, C22]
/// for DMC.
DesignMatrix build_design_matrix(CompensationModel model, const NoiseLayout& layout,
                                 const Vec& beta, double dt);

/// Column i is vech(Q_ss) of q_numeric with Q̃ = e_i. For state layouts where
/// the analytic forms do not apply.
DesignMatrix build_design_matrix_numeric(const DynamicsModel& model, const NoiseLayout& layout,
                                         double t0, double t1, const Vec& x0 = Vec());

struct WlsSolution {
  Vec q;
  bool fast_path = false;
  int degenerate_axes = 0;
  int iterations = 0;
};

/// min (Xq − b)ᵀ W⁻¹ (Xq − b) subject to lb ≤ q ≤ ub, with W diagonal.
/// Uses the per-axis closed form when every row of X touches at most one
/// column, the projected-gradient QP otherwise.
WlsSolution solve_wls_boxed(const Mat& x, const Vec& b, const Vec& w_diag, const Vec& lb,
                            const std::optional<Vec>& ub);

/// Closed form: q̄ᵢ = Xᵢᵀ W⁻¹ b / Xᵢᵀ W⁻¹ Xᵢ clamped to the box. Throws
/// std::invalid_argument if the columns share rows.
WlsSolution solve_wls_decoupled(const Mat& x, const Vec& b, const Vec& w_diag, const Vec& lb,
                                const std::optional<Vec>& ub);

/// Accelerated projected gradient with diagonal preconditioning. Stops when
/// the objective changes by less than 1e-12 relative.
WlsSolution solve_wls_projected_gradient(const Mat& x, const Vec& b, const Vec& w_diag,
                                         const Vec& lb, const std::optional<Vec>& ub,
                                         int max_iterations = 200000);

/// (1 − α) prev + α star.
Vec forgetting_update(const Vec& prev, const Vec& star, double alpha);

struct AdaptiveStep {
  NoiseSpec spec;      // Q̃ after forgetting and clamping
  Vec qtilde_star;     // raw WLS solution
  Mat q_next;          // Q for the interval dt_next
  Mat cm_estimate;     // windowed CM estimate (full state)
  int floored_weights = 0;
  int degenerate_axes = 0;
};

struct AdaptiveConfig {
  CompensationModel model = CompensationModel::kSnc;
  NoiseLayout layout;
  WeightingMode weighting = WeightingMode::kSteadyState;
};

/// One pass of the adaptive algorithm: CM estimate, Σ, W, WLS fit, forgetting
/// blend, then analytic Q for the upcoming interval. The design matrix is
/// built for the newest record's interval.
AdaptiveStep adaptive_step(const SlidingWindow& window, const NoiseSpec& spec,
                           const AdaptiveConfig& config, double dt_next);

/// White-noise variant (α taken from the NoiseSpec, normally 1).
AdaptiveStep asnc_step(const SlidingWindow& window, const NoiseSpec& spec,
                       const NoiseLayout& layout, double dt_next,
                       WeightingMode weighting = WeightingMode::kSteadyState);

/// Gauss–Markov variant.
AdaptiveStep admc_step(const SlidingWindow& window, const NoiseSpec& spec,
                       const NoiseLayout& layout, double dt_next,
                       WeightingMode weighting = WeightingMode::kSteadyState);

}  // namespace qadapt
