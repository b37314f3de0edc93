#include "csskit/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace csskit {

// ---------------------------------------------------------------- IndexSet

IndexSet::IndexSet(std::initializer_list<int> idx) : IndexSet(std::vector<int>(idx)) {}

IndexSet::IndexSet(std::vector<int> idx) : idx_(std::move(idx)) {
  std::unordered_set<int> seen;
  for (int i : idx_) {
    if (i < 0) throw IndexError("negative index " + std::to_string(i));
    if (!seen.insert(i).second) throw IndexError("duplicate index " + std::to_string(i));
  }
}

IndexSet IndexSet::range(int begin, int end) {
  IndexSet s;
  for (int i = begin; i < end; ++i) s.idx_.push_back(i);
  return s;
}

IndexSet IndexSet::complement(const IndexSet& s, int p) {
  std::vector<char> in(static_cast<std::size_t>(p), 0);
  for (int i : s) {
    if (i >= p) throw IndexError("index " + std::to_string(i) + " out of range for p=" + std::to_string(p));
    in[static_cast<std::size_t>(i)] = 1;
  }
  IndexSet c;
  for (int i = 0; i < p; ++i)
    if (!in[static_cast<std::size_t>(i)]) c.idx_.push_back(i);
  return c;
}

bool IndexSet::contains(int i) const noexcept { return position_of(i) >= 0; }

int IndexSet::position_of(int i) const noexcept {
  auto it = std::find(idx_.begin(), idx_.end(), i);
  return it == idx_.end() ? -1 : static_cast<int>(it - idx_.begin());
}

void IndexSet::push_back(int i) {
  if (i < 0) throw IndexError("negative index " + std::to_string(i));
  if (contains(i)) throw IndexError("index " + std::to_string(i) + " already in subset");
  idx_.push_back(i);
}

void IndexSet::erase_at(int pos) {
  if (pos < 0 || pos >= size()) throw IndexError("position " + std::to_string(pos) + " out of range");
  idx_.erase(idx_.begin() + pos);
}

void IndexSet::set(int pos, int i) {
  if (pos < 0 || pos >= size()) throw IndexError("position " + std::to_string(pos) + " out of range");
  if (idx_[static_cast<std::size_t>(pos)] != i && contains(i))
    throw IndexError("index " + std::to_string(i) + " already in subset");
  idx_[static_cast<std::size_t>(pos)] = i;
}

void IndexSet::validate(int p) const {
  for (int i : idx_)
    if (i < 0 || i >= p)
      throw IndexError("index " + std::to_string(i) + " out of range for p=" + std::to_string(p));
}

IndexSet IndexSet::sorted() const {
  IndexSet s = *this;
  std::sort(s.idx_.begin(), s.idx_.end());
  return s;
}

bool same_elements(const IndexSet& a, const IndexSet& b) { return a.sorted() == b.sorted(); }

// --------------------------------------------------------------- SymMatrix

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NonFinite(std::string(what) + " has non-finite entries");
}

SymMatrix::SymMatrix(const Matrix& m, double sym_tol) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  require_finite(m, "matrix");
  const double scale = std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  if (m.size() && (m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
    throw NotSymmetric("matrix is not symmetric within tolerance");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int p) { return SymMatrix(Matrix::Identity(p, p), Trusted{}); }

SymMatrix SymMatrix::diagonal(const Vector& d) {
  require_finite(d, "diagonal");
  return SymMatrix(Matrix(d.asDiagonal()), Trusted{});
}

SymMatrix SymMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto p = static_cast<Eigen::Index>(rows.size());
  Matrix m(p, p);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != p) throw DimensionMismatch("ragged matrix literal");
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return SymMatrix(m);
}

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("matrix is not square");
  require_finite(m, "matrix");
  return SymMatrix(Matrix(0.5 * (m + m.transpose())), Trusted{});
}

SymMatrix SymMatrix::scaled(double c) const { return SymMatrix(Matrix(c * m_), Trusted{}); }

SymMatrix SymMatrix::block(const IndexSet& idx) const {
  idx.validate(dim());
  return SymMatrix(submatrix(m_, idx, idx), Trusted{});
}

Matrix submatrix(const Matrix& m, const IndexSet& rows, const IndexSet& cols) {
  Matrix out(rows.size(), cols.size());
  for (int r = 0; r < rows.size(); ++r)
    for (int c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  return out;
}

double rel_frobenius(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - b).norm() / std::max(1.0, b.norm());
}

// ---------------------------------------------------------- decompositions

EigenDecomp eigen_decompose(const SymMatrix& m) {
  EigenDecomp out;
  const int p = m.dim();
  if (p == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  if (es.info() != Eigen::Success) throw NonFinite("eigendecomposition failed");
  // Eigen returns ascending order.
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

namespace {

double largest(const Vector& values) { return values.size() ? values(0) : 0.0; }

void require_psd(const Vector& values, double rank_tol, double abs_tol = 0.0) {
  if (values.size() == 0) return;
  const double lmax = largest(values);
  const double lmin = values(values.size() - 1);
  if (lmin < -std::max(rank_tol * std::max(lmax, 0.0), abs_tol) && lmin < 0.0) {
    std::ostringstream os;
    os << "matrix is not positive semi-definite (eigenvalue " << lmin << ", largest " << lmax << ")";
    throw NotPSD(os.str());
  }
}

Matrix reconstruct(const EigenDecomp& ed, const Vector& values) {
  Matrix m = ed.vectors * values.asDiagonal() * ed.vectors.transpose();
  return 0.5 * (m + m.transpose());
}

}  // namespace

SymMatrix pseudo_inverse(const SymMatrix& m, double rank_tol) {
  if (m.dim() == 0) return m;
  EigenDecomp ed = eigen_decompose(m);
  require_psd(ed.values, rank_tol);
  const double cut = rank_tol * std::max(largest(ed.values), 0.0);
  Vector inv(ed.values.size());
  for (Eigen::Index j = 0; j < inv.size(); ++j) inv(j) = ed.values(j) > cut ? 1.0 / ed.values(j) : 0.0;
  return SymMatrix::symmetrized(reconstruct(ed, inv));
}

SymMatrix psd_project(const SymMatrix& m) {
  if (m.dim() == 0) return m;
  EigenDecomp ed = eigen_decompose(m);
  if (ed.values(ed.values.size() - 1) >= 0.0) return m;
  return SymMatrix::symmetrized(reconstruct(ed, ed.values.cwiseMax(0.0)));
}

LogDet log_det(const SymMatrix& m, double rank_tol, double abs_tol) {
  if (m.dim() == 0) return LogDet::finite(0.0);
  EigenDecomp ed = eigen_decompose(m);
  require_psd(ed.values, rank_tol, abs_tol);
  const double cut = std::max(rank_tol * std::max(largest(ed.values), 0.0), abs_tol);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < ed.values.size(); ++j) {
    if (ed.values(j) <= cut || ed.values(j) <= 0.0) return LogDet::singular();
    acc += std::log(ed.values(j));
  }
  return LogDet::finite(acc);
}

double LogDet::value() const {
  if (singular_) throw std::logic_error("log-determinant of a singular matrix");
  return value_;
}

double LogDet::as_double() const noexcept {
  return singular_ ? -std::numeric_limits<double>::infinity() : value_;
}

Matrix low_rank_root(const Matrix& x, double rank_tol) {
  require_finite(x, "data matrix");
  const Eigen::Index p = x.cols();
  if (x.size() == 0) return Matrix(0, p);
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cut = rank_tol * (sv.size() ? sv(0) : 0.0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cut && sv(r) > 0.0) ++r;
  return sv.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
}

// ------------------------------------------------------ residual updates

void mirror_lower(Matrix& m) {
  const Eigen::Index p = m.rows();
  for (Eigen::Index j = 1; j < p; ++j)
    for (Eigen::Index i = 0; i < j; ++i) m(i, j) = m(j, i);
}

double zero_tolerance(const SymMatrix& m, double rank_tol) {
  if (m.dim() == 0) return 0.0;
  return rank_tol * std::max(m.trace(), 0.0) / m.dim();
}

SymMatrix residual_covariance(const SymMatrix& sigma, const IndexSet& subset, double rank_tol) {
  subset.validate(sigma.dim());
  if (subset.empty()) return sigma;
  const IndexSet all = IndexSet::range(0, sigma.dim());
  const Matrix cross = submatrix(sigma.mat(), all, subset);
  const SymMatrix pinv = pseudo_inverse(sigma.block(subset), rank_tol);
  Matrix r = sigma.mat() - cross * pinv.mat() * cross.transpose();
  for (int u : subset) {
    r.row(u).setZero();
    r.col(u).setZero();
  }
  r.diagonal() = r.diagonal().cwiseMax(0.0);
  return SymMatrix::symmetrized(r);
}

bool residual_add_inplace(Matrix& res, int i, double zero_tol) {
  const double bi = res(i, i);
  if (!(bi > zero_tol)) return false;
  const Vector beta = res.col(i);
  res.selfadjointView<Eigen::Lower>().rankUpdate(beta, -1.0 / bi);
  mirror_lower(res);
  res.row(i).setZero();
  res.col(i).setZero();
  res.diagonal() = res.diagonal().cwiseMax(0.0);
  return true;
}

SymMatrix residual_add(const SymMatrix& res, int i, double zero_tol) {
  if (i < 0 || i >= res.dim()) throw IndexError("index " + std::to_string(i) + " out of range");
  if (zero_tol < 0.0) zero_tol = zero_tolerance(res);
  Matrix m = res.mat();
  if (!residual_add_inplace(m, i, zero_tol)) return res;
  require_finite(m, "residual");
  return SymMatrix::symmetrized(m);
}

SymMatrix residual_remove(const SymMatrix& res, const SymMatrix& sigma, const SymMatrix& block_pinv,
                          const IndexSet& current, int position, double zero_tol) {
  if (position < 0 || position >= current.size()) throw IndexError("position out of range");
  if (block_pinv.dim() != current.size()) throw DimensionMismatch("block_pinv does not match subset");
  if (zero_tol < 0.0) zero_tol = zero_tolerance(sigma);
  IndexSet reduced = current;
  const int j = current[position];
  reduced.erase_at(position);
  const SymMatrix reduced_pinv = pinv_remove(block_pinv, sigma, current, position);
  // beta = residual column of j given the reduced subset.
  const IndexSet all = IndexSet::range(0, sigma.dim());
  Vector beta = sigma.mat().col(j);
  if (!reduced.empty()) {
    const Matrix cross = submatrix(sigma.mat(), all, reduced);
    Vector coef = reduced_pinv.mat() * cross.row(j).transpose();
    beta -= cross * coef;
    for (int u : reduced) beta(u) = 0.0;
  }
  if (beta(j) > zero_tol && beta(j) < kUpdatePivotGuard * sigma(j, j))
    return residual_covariance(sigma, reduced);
  Matrix m = res.mat();
  if (beta(j) > zero_tol) {
    m.selfadjointView<Eigen::Lower>().rankUpdate(beta, 1.0 / beta(j));
    mirror_lower(m);
  }
  m.diagonal() = m.diagonal().cwiseMax(0.0);
  return SymMatrix::symmetrized(m);
}

// --------------------------------------------------- pseudo-inverse updates

SymMatrix pinv_add(const SymMatrix& block_pinv, const SymMatrix& sigma, const IndexSet& current, int i,
                   double rank_tol) {
  const int k = current.size();
  if (i < 0 || i >= sigma.dim()) throw IndexError("index " + std::to_string(i) + " out of range");
  if (current.contains(i)) throw IndexError("index " + std::to_string(i) + " already in subset");
  if (block_pinv.dim() != k) throw DimensionMismatch("block_pinv does not match subset");
  current.validate(sigma.dim());
  const double tol = zero_tolerance(sigma, rank_tol);

  Vector b(k);
  for (int r = 0; r < k; ++r) b(r) = sigma(current[r], i);
  const Vector a = block_pinv.mat() * b;
  const double s = sigma(i, i) - b.dot(a);
  if (!(s > tol) || s < kUpdatePivotGuard * sigma(i, i)) {
    // i is (numerically) spanned by the current block, so the block formula
    // does not apply, or it is so nearly spanned that the formula is inaccurate.
    IndexSet next = current;
    next.push_back(i);
    return pseudo_inverse(sigma.block(next), rank_tol);
  }
  Matrix out(k + 1, k + 1);
  out.topLeftCorner(k, k) = block_pinv.mat() + (a * a.transpose()) / s;
  out.topRightCorner(k, 1) = -a / s;
  out.bottomLeftCorner(1, k) = -a.transpose() / s;
  out(k, k) = 1.0 / s;
  return SymMatrix::symmetrized(out);
}

SymMatrix pinv_remove(const SymMatrix& block_pinv, const SymMatrix& sigma, const IndexSet& current,
                      int position, double rank_tol) {
  const int k = current.size();
  if (position < 0 || position >= k) throw IndexError("position " + std::to_string(position) + " out of range");
  if (block_pinv.dim() != k) throw DimensionMismatch("block_pinv does not match subset");
  current.validate(sigma.dim());
  IndexSet reduced = current;
  reduced.erase_at(position);
  if (k == 1) return SymMatrix();

  const Matrix& p = block_pinv.mat();
  const double phh = p(position, position);
  // The downdate is exact only if column `position` is independent of the
  // others, i.e. e_h lies in range(sigma_U); test via the projector P*M.
  bool independent = phh > 0.0;
  if (independent) {
    Vector mcol(k);
    for (int r = 0; r < k; ++r) mcol(r) = sigma(current[r], current[position]);
    Vector proj = p * mcol;
    proj(position) -= 1.0;
    independent = proj.norm() < 1e-6;
  }
  // 1 / phh is the pivot of the removed variable given the others.
  if (!independent || phh * sigma(current[position], current[position]) > 1.0 / kUpdatePivotGuard)
    return pseudo_inverse(sigma.block(reduced), rank_tol);

  Matrix out(k - 1, k - 1);
  Vector ph(k - 1);
  for (int r = 0, rr = 0; r < k; ++r) {
    if (r == position) continue;
    ph(rr) = p(r, position);
    for (int c = 0, cc = 0; c < k; ++c) {
      if (c == position) continue;
      out(rr, cc) = p(r, c);
      ++cc;
    }
    ++rr;
  }
  out -= (ph * ph.transpose()) / phh;
  return SymMatrix::symmetrized(out);
}

}  // namespace csskit
