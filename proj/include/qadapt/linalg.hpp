#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qadapt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// (M + Mᵀ) / 2
Mat symmetrize(const Mat& m);

/// Column-wise stacking of the lower triangle: [M00, M10, ..., M(n-1)0, M11, ...].
Vec vech(const Mat& m);

/// Inverse of vech for a symmetric n×n matrix.
Mat unvech(const Vec& v, int n);

/// Position of element (row, col), row >= col, inside vech of an n×n matrix.
int vech_index(int n, int row, int col);

/// Length of vech for an n×n matrix.
constexpr int vech_size(int n) { return n * (n + 1) / 2; }

/// Square submatrix picking the given rows/columns in order.
Mat submatrix(const Mat& m, const std::vector<int>& indices);

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

EigenRange eigen_range(const Mat& symmetric);

/// True when the smallest eigenvalue is >= -rel_tol * max(|largest|, tiny).
bool is_psd(const Mat& symmetric, double rel_tol = 1e-10);

/// Throws NonPsdError naming `what` and the offending eigenvalue when the
/// matrix is not PSD to the given relative tolerance.
void require_psd(const Mat& symmetric, std::string_view what, double rel_tol = 1e-10);

/// Symmetric PSD square root via eigendecomposition; eigenvalues below zero
/// (roundoff) are clipped to zero.
Mat sqrtm_psd(const Mat& symmetric);

/// Lower Cholesky-like factor L with L Lᵀ = P. Falls back to the symmetric
/// square root when P is only semi-definite.
Mat covariance_factor(const Mat& p);

}  // namespace qadapt
