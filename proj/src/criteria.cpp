#include "csskit/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csskit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PinvWithRank {
  Matrix pinv;
  int rank = 0;
};

PinvWithRank pinv_and_rank(const Matrix& m, double rank_tol) {
  PinvWithRank out;
  if (m.rows() == 0) {
    out.pinv = Matrix(0, 0);
    return out;
  }
  const EigenDecomp ed = eigen_decompose(SymMatrix::symmetrized(m));
  const double cut = rank_tol * std::max(ed.values(0), 0.0);
  Vector inv = Vector::Zero(ed.values.size());
  for (Eigen::Index j = 0; j < inv.size(); ++j) {
    if (ed.values(j) > cut && ed.values(j) > 0.0) {
      inv(j) = 1.0 / ed.values(j);
      ++out.rank;
    } else if (ed.values(j) < -rank_tol * std::max(ed.values(0), 0.0)) {
      throw NotPSD("block is not positive semi-definite");
    }
  }
  out.pinv = ed.vectors * inv.asDiagonal() * ed.vectors.transpose();
  out.pinv = 0.5 * (out.pinv + out.pinv.transpose()).eval();
  return out;
}

// Downdate of the inverse of a positive-definite matrix when row/column h
// is dropped.
Matrix inverse_drop(const Matrix& p, int h) {
  const Eigen::Index k = p.rows();
  Matrix out(k - 1, k - 1);
  Vector ph(k - 1);
  for (Eigen::Index r = 0, rr = 0; r < k; ++r) {
    if (r == h) continue;
    ph(rr) = p(r, h);
    for (Eigen::Index c = 0, cc = 0; c < k; ++c) {
      if (c == h) continue;
      out(rr, cc++) = p(r, c);
    }
    ++rr;
  }
  out.noalias() -= (ph * ph.transpose()) / p(h, h);
  mirror_lower(out);
  return out;
}

// Bordered pseudo-inverse when the new column has Schur complement s > 0.
Matrix pinv_border(const Matrix& p, const Vector& a, double s) {
  const Eigen::Index k = p.rows();
  Matrix out(k + 1, k + 1);
  out.topLeftCorner(k, k) = p + (a * a.transpose()) / s;
  out.topRightCorner(k, 1) = -a / s;
  out.bottomLeftCorner(1, k) = -a.transpose() / s;
  out(k, k) = 1.0 / s;
  mirror_lower(out);
  return out;
}

Vector column_on(const Matrix& sigma, const IndexSet& rows, int col) {
  Vector v(rows.size());
  for (int r = 0; r < rows.size(); ++r) v(r) = sigma(rows[r], col);
  return v;
}

double log_or_minus_inf(double v, double tol) { return v > tol ? std::log(v) : -kInf; }

}  // namespace

std::string_view to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::CssTrace: return "css";
    case CriterionKind::DetResidual: return "det";
    case CriterionKind::FrobResidual: return "frob";
    case CriterionKind::CanonCorr: return "cc";
    case CriterionKind::DiagDet: return "diag-det";
    case CriterionKind::IsoLrt: return "iso-lrt";
  }
  return "?";
}

CriterionKind parse_criterion(std::string_view name) {
  if (name == "css") return CriterionKind::CssTrace;
  if (name == "det") return CriterionKind::DetResidual;
  if (name == "frob") return CriterionKind::FrobResidual;
  if (name == "cc") return CriterionKind::CanonCorr;
  if (name == "diag-det") return CriterionKind::DiagDet;
  if (name == "iso-lrt") return CriterionKind::IsoLrt;
  throw InvalidConfig("unknown criterion '" + std::string(name) + "'");
}

// ----------------------------------------------------------------- evaluate

double evaluate(const Criterion& criterion, const SymMatrix& sigma, const IndexSet& subset) {
  subset.validate(sigma.dim());
  const int p = sigma.dim();
  const int k = subset.size();
  const double tol = zero_tolerance(sigma, criterion.rank_tol);
  const IndexSet rest = IndexSet::complement(subset, p);

  if (criterion.kind == CriterionKind::CanonCorr) {
    if (k == 0 || rest.empty()) return 0.0;
    const Matrix cross = submatrix(sigma.mat(), subset, rest);
    const Matrix ps = pseudo_inverse(sigma.block(subset), criterion.rank_tol).mat();
    const Matrix pr = pseudo_inverse(sigma.block(rest), criterion.rank_tol).mat();
    return -(ps * cross * pr * cross.transpose()).trace();
  }

  const SymMatrix res = residual_covariance(sigma, subset, criterion.rank_tol);
  switch (criterion.kind) {
    case CriterionKind::CssTrace:
      return res.trace();
    case CriterionKind::FrobResidual:
      return res.mat().squaredNorm();
    case CriterionKind::DetResidual:
      return log_det(res.block(rest), criterion.rank_tol, tol).as_double();
    case CriterionKind::DiagDet: {
      double acc = log_det(sigma.block(subset), criterion.rank_tol, tol).as_double();
      for (int j : rest) acc += log_or_minus_inf(res(j, j), tol);
      return acc;
    }
    case CriterionKind::IsoLrt: {
      double acc = log_det(sigma.block(subset), criterion.rank_tol, tol).as_double();
      const int m = p - k;
      if (m > 0) {
        const double t = res.trace();
        acc += t > tol ? m * std::log(t / m) : -kInf;
      }
      return acc;
    }
    case CriterionKind::CanonCorr:
      break;
  }
  return 0.0;
}

// ------------------------------------------------------------- SubsetState

SubsetState::SubsetState(const Criterion& criterion, const SymMatrix& sigma)
    : criterion_(criterion),
      residual_(sigma.mat()),
      block_pinv_(0, 0),
      zero_tol_(zero_tolerance(sigma, criterion.rank_tol)) {
  if (criterion_.kind == CriterionKind::CanonCorr) {
    complement_ = IndexSet::range(0, sigma.dim());
    rebuild_complement(sigma);
    refresh_canon(sigma);
  }
}

SubsetState SubsetState::build(const Criterion& criterion, const SymMatrix& sigma, const IndexSet& subset) {
  subset.validate(sigma.dim());
  SubsetState s(criterion, sigma);
  s.subset_ = subset;
  s.rebuild(sigma);
  return s;
}

void SubsetState::require_candidate(int i) const {
  if (i < 0 || i >= dim()) throw IndexError("candidate " + std::to_string(i) + " out of range");
  if (subset_.contains(i)) throw IndexError("candidate " + std::to_string(i) + " already selected");
}

void SubsetState::rebuild(const SymMatrix& sigma) {
  residual_ = residual_covariance(sigma, subset_, criterion_.rank_tol).mat();
  const PinvWithRank pr = pinv_and_rank(submatrix(sigma.mat(), subset_, subset_), criterion_.rank_tol);
  block_pinv_ = pr.pinv;
  block_rank_ = pr.rank;
  log_det_block_ = block_rank_ == subset_.size()
                       ? log_det(sigma.block(subset_), criterion_.rank_tol, zero_tol_).as_double()
                       : -kInf;
  if (criterion_.kind == CriterionKind::CanonCorr) {
    complement_ = IndexSet::complement(subset_, sigma.dim());
    rebuild_complement(sigma);
    refresh_canon(sigma);
  }
}

void SubsetState::rebuild_complement(const SymMatrix& sigma) {
  const PinvWithRank pr = pinv_and_rank(submatrix(sigma.mat(), complement_, complement_), criterion_.rank_tol);
  complement_pinv_ = pr.pinv;
  complement_full_rank_ = pr.rank == complement_.size();
  modifications_ = 0;
}

void SubsetState::refresh_canon(const SymMatrix& sigma) {
  const Matrix cross = submatrix(sigma.mat(), complement_, subset_);  // m x k
  complement_gain_ = complement_pinv_ * cross;
  reverse_residual_ = submatrix(sigma.mat(), subset_, subset_) - cross.transpose() * complement_gain_;
  reverse_residual_ = 0.5 * (reverse_residual_ + reverse_residual_.transpose()).eval();
}

void SubsetState::advance(const SymMatrix& sigma, int i) {
  require_candidate(i);
  const int k = subset_.size();
  const double bi = residual_(i, i);
  const bool gain = bi > zero_tol_;

  const Vector b = column_on(sigma.mat(), subset_, i);
  const Vector a = block_pinv_ * b;
  const double s = sigma(i, i) - b.dot(a);
  IndexSet next = subset_;
  next.push_back(i);
  if (gain && block_rank_ == k && s > zero_tol_ && s >= kUpdatePivotGuard * sigma(i, i)) {
    block_pinv_ = pinv_border(block_pinv_, a, s);
  } else {
    block_pinv_ = pinv_and_rank(submatrix(sigma.mat(), next, next), criterion_.rank_tol).pinv;
  }
  block_rank_ += gain ? 1 : 0;
  log_det_block_ = (gain && std::isfinite(log_det_block_)) ? log_det_block_ + std::log(bi) : -kInf;
  residual_add_inplace(residual_, i, zero_tol_);
  subset_ = std::move(next);

  if (criterion_.kind == CriterionKind::CanonCorr) {
    const int h = complement_.position_of(i);
    const bool full = complement_full_rank_;
    complement_.erase_at(h);
    if (full && complement_pinv_(h, h) > 0.0) {
      complement_pinv_ = inverse_drop(complement_pinv_, h);
      if (++modifications_ >= std::max(1, sigma.dim() / 2)) rebuild_complement(sigma);
    } else {
      rebuild_complement(sigma);
    }
    refresh_canon(sigma);
  }
}

void SubsetState::retract(const SymMatrix& sigma, int position) {
  const int k = subset_.size();
  if (position < 0 || position >= k) throw IndexError("position " + std::to_string(position) + " out of range");
  const int j = subset_[position];
  IndexSet reduced = subset_;
  reduced.erase_at(position);

  const double pjj = k > 0 ? block_pinv_(position, position) : 0.0;
  if (block_rank_ == k && k > 1 && pjj > 0.0 && pjj * sigma(j, j) <= 1.0 / kUpdatePivotGuard) {
    block_pinv_ = inverse_drop(block_pinv_, position);
  } else {
    block_pinv_ = pinv_and_rank(submatrix(sigma.mat(), reduced, reduced), criterion_.rank_tol).pinv;
  }

  // Residual column of j given the reduced subset.
  Vector beta = sigma.mat().col(j);
  if (!reduced.empty()) {
    const Vector coef = block_pinv_ * column_on(sigma.mat(), reduced, j);
    for (int r = 0; r < reduced.size(); ++r) beta.noalias() -= coef(r) * sigma.mat().col(reduced[r]);
    for (int u : reduced) beta(u) = 0.0;
  }
  const bool gain = beta(j) > zero_tol_;
  if (gain && beta(j) < kUpdatePivotGuard * sigma(j, j)) {
    residual_ = residual_covariance(sigma, reduced, criterion_.rank_tol).mat();
  } else if (gain) {
    residual_.selfadjointView<Eigen::Lower>().rankUpdate(beta, 1.0 / beta(j));
    mirror_lower(residual_);
    residual_.diagonal() = residual_.diagonal().cwiseMax(0.0);
  }
  const bool was_full = block_rank_ == k;
  block_rank_ -= gain ? 1 : 0;
  subset_ = std::move(reduced);
  if (block_rank_ < subset_.size()) {
    log_det_block_ = -kInf;
  } else if (was_full && gain && std::isfinite(log_det_block_)) {
    log_det_block_ -= std::log(beta(j));
  } else {
    log_det_block_ = log_det(sigma.block(subset_), criterion_.rank_tol, zero_tol_).as_double();
  }

  if (criterion_.kind == CriterionKind::CanonCorr) {
    const Vector c = column_on(sigma.mat(), complement_, j);
    const Vector a = complement_pinv_ * c;
    const double s = sigma(j, j) - c.dot(a);
    const bool full = complement_full_rank_;
    complement_.push_back(j);
    if (full && s > zero_tol_) {
      complement_pinv_ = pinv_border(complement_pinv_, a, s);
      if (++modifications_ >= std::max(1, sigma.dim() / 2)) rebuild_complement(sigma);
    } else {
      rebuild_complement(sigma);
    }
    refresh_canon(sigma);
  }
}

double SubsetState::consistency_error(const SymMatrix& sigma) const {
  const Matrix res = residual_covariance(sigma, subset_, criterion_.rank_tol).mat();
  const Matrix pinv = pseudo_inverse(sigma.block(subset_), criterion_.rank_tol).mat();
  double err = std::max(rel_frobenius(residual_, res), rel_frobenius(block_pinv_, pinv));
  if (criterion_.kind == CriterionKind::CanonCorr) {
    const Matrix cp = pseudo_inverse(sigma.block(complement_), criterion_.rank_tol).mat();
    err = std::max(err, rel_frobenius(complement_pinv_, cp));
  }
  return err;
}

double SubsetState::objective(const SymMatrix& sigma) const {
  const int p = dim();
  const int k = subset_.size();
  switch (criterion_.kind) {
    case CriterionKind::CssTrace:
      return residual_.trace();
    case CriterionKind::FrobResidual:
      return residual_.squaredNorm();
    case CriterionKind::DetResidual:
      return log_det(SymMatrix::symmetrized(submatrix(residual_, complement_or_rest(p), complement_or_rest(p))),
                     criterion_.rank_tol, zero_tol_)
          .as_double();
    case CriterionKind::DiagDet: {
      double acc = log_det_block_;
      for (int j = 0; j < p; ++j)
        if (!subset_.contains(j)) acc += log_or_minus_inf(residual_(j, j), zero_tol_);
      return acc;
    }
    case CriterionKind::IsoLrt: {
      const int m = p - k;
      if (m == 0) return log_det_block_;
      const double t = residual_.trace();
      return log_det_block_ + (t > zero_tol_ ? m * std::log(t / m) : -kInf);
    }
    case CriterionKind::CanonCorr:
      if (k == 0 || complement_.empty()) return 0.0;
      if (!complement_full_rank_) return evaluate(criterion_, sigma, subset_);
      return (block_pinv_ * reverse_residual_).trace() - block_rank_;
  }
  return 0.0;
}

IndexSet SubsetState::complement_or_rest(int p) const {
  return criterion_.kind == CriterionKind::CanonCorr ? complement_ : IndexSet::complement(subset_, p);
}

// ----------------------------------------------------------------- scoring

double score_candidate(const Criterion& criterion, const SubsetState& state, const SymMatrix& sigma, int i) {
  state.require_candidate(i);
  const Matrix& r = state.residual_;
  const double tol = state.zero_tol_;
  const double bi = r(i, i);
  const int p = state.dim();
  switch (criterion.kind) {
    case CriterionKind::CssTrace:
      return bi > tol ? -r.col(i).squaredNorm() / bi : 0.0;
    case CriterionKind::DetResidual:
      return -bi;
    case CriterionKind::FrobResidual: {
      if (!(bi > tol)) return 0.0;
      const Vector beta = r.col(i);
      const double n2 = beta.squaredNorm() / bi;
      return n2 * n2 - 2.0 * beta.dot(r * beta) / bi;
    }
    case CriterionKind::DiagDet: {
      if (!(bi > tol)) return -kInf;
      double acc = std::log(bi);
      for (int j = 0; j < p; ++j) {
        if (j == i || state.subset_.contains(j)) continue;
        const double v = r(j, j) - r(i, j) * r(i, j) / bi;
        if (!(v > tol)) return -kInf;
        acc += std::log(v);
      }
      return acc;
    }
    case CriterionKind::IsoLrt: {
      if (!(bi > tol)) return -kInf;
      const int m = p - state.subset_.size() - 1;
      if (m == 0) return std::log(bi);
      const double t = r.trace() - r.col(i).squaredNorm() / bi;
      if (!(t > tol)) return -kInf;
      return std::log(bi) + m * std::log(t);
    }
    case CriterionKind::CanonCorr: {
      const IndexSet& u = state.subset_;
      const int k = u.size();
      const Matrix& pc = state.complement_pinv_;
      const int h = state.complement_.position_of(i);
      IndexSet v = u;
      v.push_back(i);
      if (!state.complement_full_rank_ || state.complement_.size() == 1 || !(pc(h, h) > 0.0))
        return evaluate(criterion, sigma, v);
      // beta: covariance of X_V with X_i after conditioning on X_{-V},
      // read off the complement's inverse.
      const double bi_rev = 1.0 / pc(h, h);
      Vector beta(k + 1);
      beta.head(k) = state.complement_gain_.row(h).transpose() * bi_rev;
      beta(k) = bi_rev;
      // pinv(Sigma_V) from pinv(Sigma_U).
      const Vector b = column_on(sigma.mat(), u, i);
      const Vector a = state.block_pinv_ * b;
      const double s = sigma(i, i) - b.dot(a);
      Matrix pv;
      if (state.block_rank_ == k && s > tol) {
        pv = pinv_border(state.block_pinv_, a, s);
      } else {
        pv = pinv_and_rank(submatrix(sigma.mat(), v, v), criterion.rank_tol).pinv;
      }
      double f = (pv.topLeftCorner(k, k) * state.reverse_residual_).trace();
      if (bi_rev > tol) f += beta.dot(pv * beta) / bi_rev;
      const int rank_v = state.block_rank_ + (bi > tol ? 1 : 0);
      return f - rank_v;
    }
  }
  return 0.0;
}

void score_all(const Criterion& criterion, const SubsetState& state, const SymMatrix& sigma, Vector& scores) {
  const int p = state.dim();
  const Matrix& r = state.residual_;
  const double tol = state.zero_tol_;
  scores.setConstant(p, kInf);
  switch (criterion.kind) {
    case CriterionKind::CssTrace: {
      const Eigen::RowVectorXd norms = r.colwise().squaredNorm();
      for (int i = 0; i < p; ++i) {
        if (state.subset_.contains(i)) continue;
        const double bi = r(i, i);
        scores(i) = bi > tol ? -norms(i) / bi : 0.0;
      }
      return;
    }
    case CriterionKind::FrobResidual: {
      const Matrix r2 = r * r;
      for (int i = 0; i < p; ++i) {
        if (state.subset_.contains(i)) continue;
        const double bi = r(i, i);
        if (!(bi > tol)) {
          scores(i) = 0.0;
          continue;
        }
        const double n2 = r2(i, i) / bi;
        scores(i) = n2 * n2 - 2.0 * r2.col(i).dot(r.col(i)) / bi;
      }
      return;
    }
    default:
      for (int i = 0; i < p; ++i)
        if (!state.subset_.contains(i)) scores(i) = score_candidate(criterion, state, sigma, i);
  }
}

int argmin_lowest_index(const Vector& scores, double margin) {
  int best = -1;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double s = scores(i);
    if (s == kInf || std::isnan(s)) continue;
    if (best < 0 || s < scores(best) - margin) best = static_cast<int>(i);
  }
  return best;
}

SubsetState advance(const Criterion& criterion, const SubsetState& state, const SymMatrix& sigma, int i) {
  if (criterion.kind != state.criterion().kind) throw InvalidConfig("criterion does not match state");
  SubsetState out = state;
  out.advance(sigma, i);
  return out;
}

SubsetState retract(const Criterion& criterion, const SubsetState& state, const SymMatrix& sigma, int position) {
  if (criterion.kind != state.criterion().kind) throw InvalidConfig("criterion does not match state");
  SubsetState out = state;
  out.retract(sigma, position);
  return out;
}

}  // namespace csskit
