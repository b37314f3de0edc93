#pragma once

// Reference computations for tests. They deliberately avoid the library's
// eigen-based code paths: pseudo-inverses go through an SVD, determinants
// through an LU factorization, and every formula is written out directly.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "csskit/criteria.hpp"
#include "csskit/symmat.hpp"

namespace oracle {

using csskit::IndexSet;
using csskit::Matrix;
using csskit::SymMatrix;
using csskit::Vector;

inline Matrix pinv(const Matrix& a, double rel_tol = 1e-10) {
  if (a.rows() == 0) return Matrix(0, 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cut = rel_tol * (s.size() ? s(0) : 0.0);
  Vector inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cut && s(i) > 0 ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline int rank(const Matrix& a, double rel_tol = 1e-10) {
  if (a.rows() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > rel_tol * s(0) && s(i) > 0 ? 1 : 0;
  return r;
}

inline Matrix sub(const Matrix& m, const std::vector<int>& r, const std::vector<int>& c) {
  Matrix out(r.size(), c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = m(r[i], c[j]);
  return out;
}

inline std::vector<int> rest(const std::vector<int>& s, int p) {
  std::vector<int> out;
  for (int i = 0; i < p; ++i)
    if (std::find(s.begin(), s.end(), i) == s.end()) out.push_back(i);
  return out;
}

inline std::vector<int> all(int p) { return rest({}, p); }

/// Full p x p residual covariance.
inline Matrix residual(const Matrix& sigma, const std::vector<int>& s) {
  const int p = static_cast<int>(sigma.rows());
  if (s.empty()) return sigma;
  const std::vector<int> every = all(p);
  const Matrix cross = sub(sigma, every, s);
  return sigma - cross * pinv(sub(sigma, s, s)) * cross.transpose();
}

/// log|A| by LU, -inf if the relative pivot size drops below tol.
inline double logdet(const Matrix& a, double rel_tol = 1e-10) {
  if (a.rows() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s(i) > rel_tol * s(0))) return -std::numeric_limits<double>::infinity();
    acc += std::log(s(i));
  }
  return acc;
}

/// Each criterion written out from its definition with SVD pseudo-inverses.
inline double objective(csskit::CriterionKind kind, const Matrix& sigma, const std::vector<int>& s) {
  using csskit::CriterionKind;
  const int p = static_cast<int>(sigma.rows());
  const std::vector<int> r = rest(s, p);
  const Matrix res = residual(sigma, s);
  const Matrix res_rest = sub(res, r, r);
  switch (kind) {
    case CriterionKind::CssTrace:
      return res.trace();
    case CriterionKind::FrobResidual:
      return res.squaredNorm();
    case CriterionKind::DetResidual:
      return logdet(res_rest);
    case CriterionKind::CanonCorr: {
      if (s.empty() || r.empty()) return 0.0;
      const Matrix c = sub(sigma, s, r);
      return -(pinv(sub(sigma, s, s)) * c * pinv(sub(sigma, r, r)) * c.transpose()).trace();
    }
    case CriterionKind::DiagDet: {
      double acc = logdet(sub(sigma, s, s));
      for (Eigen::Index j = 0; j < res_rest.rows(); ++j) acc += std::log(res_rest(j, j));
      return acc;
    }
    case CriterionKind::IsoLrt: {
      const double m = static_cast<double>(r.size());
      if (r.empty()) return logdet(sub(sigma, s, s));
      return logdet(sub(sigma, s, s)) + m * std::log(res_rest.trace() / m);
    }
  }
  return 0.0;
}

/// Random PSD matrix of the given rank (rank = p for full rank), scaled so
/// entries are O(1).
inline Matrix random_psd(int p, int r, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix g(r, p);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = z(rng);
  Matrix out = g.transpose() * g / std::max(1, r);
  return 0.5 * (out + out.transpose());
}

inline Matrix random_data(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = z(rng);
  return x;
}

/// All size-k subsets of [0, p) in lexicographic order.
inline std::vector<std::vector<int>> combinations(int p, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = i;
  if (k == 0) return {{}};
  while (true) {
    out.push_back(c);
    int i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == p - k + i) --i;
    if (i < 0) break;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

}  // namespace oracle
