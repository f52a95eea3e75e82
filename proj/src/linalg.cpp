#include "qadapt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qadapt/errors.hpp"

namespace qadapt {

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

Vec vech(const Mat& m) {
  const int n = static_cast<int>(m.rows());
  Vec out(vech_size(n));
  int k = 0;
  for (int c = 0; c < n; ++c) {
    for (int r = c; r < n; ++r) out(k++) = m(r, c);
  }
  return out;
}

Mat unvech(const Vec& v, int n) {
  if (v.size() != vech_size(n)) throw DimensionError("unvech: length does not match n(n+1)/2");
  Mat m(n, n);
  int k = 0;
  for (int c = 0; c < n; ++c) {
    for (int r = c; r < n; ++r) {
      m(r, c) = v(k);
      m(c, r) = v(k);
      ++k;
    }
  }
  return m;
}

int vech_index(int n, int row, int col) {
  if (row < col) std::swap(row, col);
  // columns before `col` contribute n, n-1, ..., n-col+1 entries
  return col * n - col * (col - 1) / 2 + (row - col);
}

Mat submatrix(const Mat& m, const std::vector<int>& indices) {
  const int k = static_cast<int>(indices.size());
  Mat out(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) out(i, j) = m(indices[i], indices[j]);
  }
  return out;
}

EigenRange eigen_range(const Mat& symmetric) {
  if (symmetric.size() == 0) return {};
  if (symmetric.rows() == 1) return {symmetric(0, 0), symmetric(0, 0)};
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

bool is_psd(const Mat& symmetric, double rel_tol) {
  if (!symmetric.allFinite()) return false;
  const EigenRange r = eigen_range(symmetric);
  const double scale = std::max(std::abs(r.max), std::numeric_limits<double>::min());
  return r.min >= -rel_tol * scale;
}

void require_psd(const Mat& symmetric, std::string_view what, double rel_tol) {
  if (!symmetric.allFinite()) {
    throw NonPsdError(std::string(what) + " contains non-finite entries",
                      std::numeric_limits<double>::quiet_NaN());
  }
  const EigenRange r = eigen_range(symmetric);
  const double scale = std::max(std::abs(r.max), std::numeric_limits<double>::min());
  if (r.min < -rel_tol * scale) {
    std::ostringstream os;
    os << what << " is not positive semi-definite: eigenvalue " << r.min
       << " (largest " << r.max << ")";
    throw NonPsdError(os.str(), r.min);
  }
}

Mat sqrtm_psd(const Mat& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(symmetric));
  Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Mat covariance_factor(const Mat& p) {
  Eigen::LLT<Mat> llt(p);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  return sqrtm_psd(p);
}

}  // namespace qadapt
