#pragma once

// Dense symmetric matrices and the update rules the subset searches run on.

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "csskit/errors.hpp"

namespace csskit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative eigenvalue threshold below which a direction counts as null.
inline constexpr double kDefaultRankTol = 1e-10;

/// Ordered set of distinct variable indices. Order is insertion order, which
/// the swap search relies on (it swaps by position).
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::initializer_list<int> idx);
  explicit IndexSet(std::vector<int> idx);

  static IndexSet range(int begin, int end);
  /// Every index in [0, p) not in `s`, ascending.
  static IndexSet complement(const IndexSet& s, int p);

  int size() const noexcept { return static_cast<int>(idx_.size()); }
  bool empty() const noexcept { return idx_.empty(); }
  int operator[](int pos) const { return idx_[static_cast<std::size_t>(pos)]; }
  const std::vector<int>& indices() const noexcept { return idx_; }
  auto begin() const noexcept { return idx_.begin(); }
  auto end() const noexcept { return idx_.end(); }

  bool contains(int i) const noexcept;
  /// Position of `i`, or -1.
  int position_of(int i) const noexcept;

  void push_back(int i);
  void erase_at(int pos);
  void set(int pos, int i);

  /// Throws IndexError if any index is outside [0, p).
  void validate(int p) const;

  /// Copy with indices sorted ascending.
  IndexSet sorted() const;

  friend bool operator==(const IndexSet& a, const IndexSet& b) { return a.idx_ == b.idx_; }

 private:
  std::vector<int> idx_;
};

/// Same elements regardless of order.
bool same_elements(const IndexSet& a, const IndexSet& b);

/// Immutable dense symmetric matrix. Construction checks finiteness and
/// symmetry, then symmetrizes exactly so entries(i,j) == entries(j,i).
/// A 0x0 matrix is allowed and stands for the block of an empty subset.
class SymMatrix {
 public:
  SymMatrix() = default;
  /// Accepts `m` if |m - m^T| <= sym_tol * max(1, max|m|) entrywise.
  explicit SymMatrix(const Matrix& m, double sym_tol = 1e-8);

  static SymMatrix identity(int p);
  static SymMatrix diagonal(const Vector& d);
  static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Skips the symmetry tolerance check; still symmetrizes and checks finiteness.
  static SymMatrix symmetrized(const Matrix& m);

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Matrix& mat() const noexcept { return m_; }
  double trace() const { return m_.trace(); }

  SymMatrix scaled(double c) const;
  /// Principal sub-matrix on `idx` (in the order given).
  SymMatrix block(const IndexSet& idx) const;

 private:
  struct Trusted {};
  SymMatrix(Matrix m, Trusted) : m_(std::move(m)) {}
  Matrix m_;
};

struct EigenDecomp {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns matching `values`
};

EigenDecomp eigen_decompose(const SymMatrix& m);

/// Moore-Penrose inverse of a PSD matrix; eigenvalues at or below
/// rank_tol * lambda_max are treated as zero.
SymMatrix pseudo_inverse(const SymMatrix& m, double rank_tol = kDefaultRankTol);

/// Frobenius-nearest PSD matrix (negative eigenvalues clamped to zero).
/// Returns the input itself when it has no negative eigenvalue.
SymMatrix psd_project(const SymMatrix& m);

/// sigma - sigma[:,U] sigma_U^+ sigma[U,:] as a full p x p matrix; rows and
/// columns in U are exactly zero.
SymMatrix residual_covariance(const SymMatrix& sigma, const IndexSet& subset,
                              double rank_tol = kDefaultRankTol);

/// Incremental updates divide by a Schur-complement pivot. When that pivot is
/// below this fraction of the variable's own variance the update would lose
/// roughly that many digits, so the affected routine recomputes instead.
inline constexpr double kUpdatePivotGuard = 1e-3;

/// Absolute threshold for "residual variance is zero": rank_tol * trace / p.
double zero_tolerance(const SymMatrix& m, double rank_tol = kDefaultRankTol);

/// Rank-one residual update for adding variable i. If res(i,i) <= zero_tol
/// the input is returned unchanged. A negative zero_tol selects the default
/// zero_tolerance(res).
SymMatrix residual_add(const SymMatrix& res, int i, double zero_tol = -1.0);

/// In-place form used by the search loops. `res` must be symmetric.
/// Returns false (and leaves res untouched) when the indicator is inactive.
bool residual_add_inplace(Matrix& res, int i, double zero_tol);

/// Inverse of residual_add: `res` is the residual for `current`, the result
/// is the residual for `current` without the element at `position`.
/// `block_pinv` is pinv(sigma_current).
SymMatrix residual_remove(const SymMatrix& res, const SymMatrix& sigma,
                          const SymMatrix& block_pinv, const IndexSet& current,
                          int position, double zero_tol = -1.0);

/// pinv(sigma_{U+i}) from pinv(sigma_U); the new index goes last.
SymMatrix pinv_add(const SymMatrix& block_pinv, const SymMatrix& sigma,
                   const IndexSet& current, int i, double rank_tol = kDefaultRankTol);

/// pinv(sigma_{U minus position}) from pinv(sigma_U). Falls back to a fresh
/// decomposition when the removed column is linearly dependent on the rest.
SymMatrix pinv_remove(const SymMatrix& block_pinv, const SymMatrix& sigma,
                      const IndexSet& current, int position,
                      double rank_tol = kDefaultRankTol);

/// r x p matrix R with R^T R = X^T X, r the numerical rank of X.
Matrix low_rank_root(const Matrix& x, double rank_tol = kDefaultRankTol);

/// Log-determinant with an explicit singular state instead of -inf.
class LogDet {
 public:
  static LogDet finite(double v) { return LogDet(v, false); }
  static LogDet singular() { return LogDet(0.0, true); }

  bool is_singular() const noexcept { return singular_; }
  /// Throws std::logic_error when singular.
  double value() const;
  /// value() or -infinity.
  double as_double() const noexcept;

 private:
  LogDet(double v, bool s) : value_(v), singular_(s) {}
  double value_;
  bool singular_;
};

/// Eigenvalues at or below max(rank_tol * lambda_max, abs_tol) count as zero.
/// `abs_tol` lets callers judge a residual block against the scale of the
/// matrix it came from; rounding noise there is not a PSD violation.
LogDet log_det(const SymMatrix& m, double rank_tol = kDefaultRankTol, double abs_tol = 0.0);

/// Relative Frobenius distance |a - b|_F / max(1, |b|_F).
double rel_frobenius(const Matrix& a, const Matrix& b);

/// Extracts m[rows, cols].
Matrix submatrix(const Matrix& m, const IndexSet& rows, const IndexSet& cols);

void require_finite(const Matrix& m, const char* what);

/// Copies the lower triangle onto the upper one.
void mirror_lower(Matrix& m);

}  // namespace csskit
