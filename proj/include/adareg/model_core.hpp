#pragma once

// Linear-model data types and the least-squares / projection kernels shared
// by every estimator. Rows of a design matrix are time steps, columns are
// coordinates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace adareg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Zero-based, ordered column indices.
using IndexSet = std::vector<std::size_t>;

// ---------------------------------------------------------------------------
// Errors

class RankDeficient : public std::runtime_error {
 public:
  RankDeficient(std::size_t rank, std::size_t needed)
      : std::runtime_error("rank deficient design: numerical rank " + std::to_string(rank) +
                           " < " + std::to_string(needed)),
        rank_(rank),
        needed_(needed) {}

  std::size_t rank() const noexcept { return rank_; }
  std::size_t needed() const noexcept { return needed_; }

 private:
  std::size_t rank_;
  std::size_t needed_;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Domain types

struct ModelSpec {
  Vector theta_star;
  double sigma = 1.0;
  std::size_t n = 1;
  std::size_t d = 1;
  std::size_t k = 0;

  void validate() const {
    if (d == 0) throw InvalidArgument("ModelSpec: d must be positive");
    if (n == 0) throw InvalidArgument("ModelSpec: n must be positive");
    if (k > d) throw InvalidArgument("ModelSpec: k must lie in [0, d]");
    if (static_cast<std::size_t>(theta_star.size()) != d)
      throw InvalidArgument("ModelSpec: theta_star has length " +
                            std::to_string(theta_star.size()) + ", expected d = " +
                            std::to_string(d));
    // sigma == 0 is accepted so noiseless datasets can be produced in tests.
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw InvalidArgument("ModelSpec: sigma must be finite and non-negative");
  }
};

struct DatasetMeta {
  std::string generator;
  std::map<std::string, std::string> params;
  std::uint64_t seed = 0;
};

struct AdaptiveDataset {
  Matrix X;
  Vector y;
  IndexSet adaptive_idx;
  DatasetMeta meta;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t k() const { return adaptive_idx.size(); }

  void validate() const {
    if (X.rows() != y.size())
      throw InvalidArgument("AdaptiveDataset: rows(X) != length(y)");
    std::vector<bool> seen(d(), false);
    for (std::size_t j : adaptive_idx) {
      if (j >= d()) throw InvalidArgument("AdaptiveDataset: adaptive index out of range");
      if (seen[j]) throw InvalidArgument("AdaptiveDataset: duplicate adaptive index");
      seen[j] = true;
    }
  }

  /// Columns not in adaptive_idx, ascending.
  IndexSet nonadaptive_idx() const {
    std::vector<bool> ad(d(), false);
    for (std::size_t j : adaptive_idx) ad[j] = true;
    IndexSet out;
    for (std::size_t j = 0; j < d(); ++j)
      if (!ad[j]) out.push_back(j);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Index helpers

inline IndexSet complement(const IndexSet& idx, std::size_t d) {
  std::vector<bool> in(d, false);
  for (std::size_t j : idx) in.at(j) = true;
  IndexSet out;
  for (std::size_t j = 0; j < d; ++j)
    if (!in[j]) out.push_back(j);
  return out;
}

inline Matrix select_columns(const Matrix& M, const IndexSet& idx) {
  Matrix out(M.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = M.col(static_cast<Eigen::Index>(idx[c]));
  return out;
}

inline Vector select_entries(const Vector& v, const IndexSet& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c)
    out(static_cast<Eigen::Index>(c)) = v(static_cast<Eigen::Index>(idx[c]));
  return out;
}

inline IndexSet iota_set(std::size_t begin, std::size_t end) {
  IndexSet out(end > begin ? end - begin : 0);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

// ---------------------------------------------------------------------------
// Least squares

/// Relative tolerance applied to the largest |R_ii| of the pivoted QR.
inline constexpr double kRankTolerance = 1e-10;

/// Pivoted Householder QR of a tall matrix with an explicit rank check.
class OrthogonalFactorization {
 public:
  explicit OrthogonalFactorization(const Matrix& A) : qr_(A) {
    const auto cols = static_cast<std::size_t>(A.cols());
    if (static_cast<std::size_t>(A.rows()) < cols) {
      throw RankDeficient(static_cast<std::size_t>(A.rows()), cols);
    }
    if (cols == 0) return;
    const auto R = qr_.matrixQR().diagonal().cwiseAbs();
    const double scale = R.maxCoeff();
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < R.size(); ++i)
      if (R(i) > kRankTolerance * scale) ++rank;
    if (scale == 0.0) rank = 0;
    if (rank < cols) throw RankDeficient(rank, cols);
  }

  Eigen::Index rows() const { return qr_.rows(); }
  Eigen::Index cols() const { return qr_.cols(); }

  Vector solve(const Vector& b) const { return qr_.solve(b); }

  /// (A^T A)^{-1} = P R^{-1} R^{-T} P^T.
  Matrix gram_inverse() const {
    const Eigen::Index p = cols();
    const auto R = qr_.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    Matrix Rinv = R.solve(Matrix::Identity(p, p));
    Matrix inner = Rinv * Rinv.transpose();
    const auto& perm = qr_.colsPermutation();
    return perm * inner * perm.transpose();
  }

  /// Orthogonal projection of v onto col(A).
  Vector project(const Vector& v) const {
    const Eigen::Index p = cols();
    if (p == 0) return Vector::Zero(v.size());
    Vector qtv = qr_.householderQ().transpose() * v;
    qtv.tail(qtv.size() - p).setZero();
    return qr_.householderQ() * qtv;
  }

  /// log det(A^T A) = 2 sum log|R_ii|.
  double log_det_gram() const {
    return 2.0 * qr_.matrixQR().diagonal().cwiseAbs().array().log().sum();
  }

 private:
  Eigen::ColPivHouseholderQR<Matrix> qr_;
};

struct LeastSquaresFit {
  Vector coefficients;
  Matrix gram_inverse;
};

inline LeastSquaresFit solve_least_squares(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) throw InvalidArgument("solve_least_squares: rows(X) != length(y)");
  const OrthogonalFactorization qr(X);
  return {qr.solve(y), qr.gram_inverse()};
}

/// P_M v for P_M = M (M^T M)^{-1} M^T.
inline Vector projection_onto_columns(const Matrix& M, const Vector& v) {
  if (M.rows() != v.size())
    throw InvalidArgument("projection_onto_columns: rows(M) != length(v)");
  return OrthogonalFactorization(M).project(v);
}

/// (I - P_M) applied column-by-column to B.
inline Matrix residualize_columns(const Matrix& B, const Matrix& M) {
  if (M.cols() == 0) return B;
  const OrthogonalFactorization qr(M);
  Matrix out(B.rows(), B.cols());
  for (Eigen::Index c = 0; c < B.cols(); ++c) out.col(c) = B.col(c) - qr.project(B.col(c));
  return out;
}

/// (I_n - P_{1_n}) M. A second pass removes the rounding left by the first.
inline Matrix center_columns(const Matrix& M) {
  if (M.rows() == 0) throw InvalidArgument("center_columns: empty matrix");
  Matrix out = M.rowwise() - M.colwise().mean();
  out.rowwise() -= out.colwise().mean();
  return out;
}

inline Vector center(const Vector& v) {
  Vector out = v.array() - v.mean();
  out.array() -= out.mean();
  return out;
}

}  // namespace adareg
