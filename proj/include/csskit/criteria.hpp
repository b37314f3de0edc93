#pragma once

#include <string>
#include <string_view>

#include "csskit/symmat.hpp"

namespace csskit {

// All six objectives are minimized. Values may be -infinity when a subset
// reconstructs some variable exactly (log-determinant criteria only).
enum class CriterionKind {
  CssTrace,      // Tr(residual), the CSS / principal-variables objective
  DetResidual,   // log |residual on the unselected block|
  FrobResidual,  // |residual|_F^2
  CanonCorr,     // minus the sum of squared canonical correlations between X_S and X_{-S}
  DiagDet,       // log|Sigma_S| + log|Diag(residual)|, ranks subsets like the T statistic
  IsoLrt,        // log|Sigma_S| + (p-k) log(Tr(residual)/(p-k)), ranks subsets like T-tilde
};

std::string_view to_string(CriterionKind kind);
/// Accepts the CLI spellings: css, det, frob, cc, diag-det, iso-lrt.
CriterionKind parse_criterion(std::string_view name);

struct Criterion {
  CriterionKind kind = CriterionKind::CssTrace;
  double rank_tol = kDefaultRankTol;
};

/// Objective of `subset` computed from scratch.
double evaluate(const Criterion& criterion, const SymMatrix& sigma, const IndexSet& subset);

/// Search state for one subset: the residual covariance of every variable
/// given the selected ones, the pseudo-inverse of the selected block and the
/// running log-determinant of that block. CanonCorr additionally keeps the
/// complement's pseudo-inverse and the residual of X_U given X_{-U}.
///
/// Single owner; copy it to run independent searches.
class SubsetState {
 public:
  SubsetState(const Criterion& criterion, const SymMatrix& sigma);
  static SubsetState build(const Criterion& criterion, const SymMatrix& sigma, const IndexSet& subset);

  const Criterion& criterion() const noexcept { return criterion_; }
  const IndexSet& subset() const noexcept { return subset_; }
  int dim() const noexcept { return static_cast<int>(residual_.rows()); }
  const Matrix& residual() const noexcept { return residual_; }
  const Matrix& block_pinv() const noexcept { return block_pinv_; }
  /// log|Sigma_U|, -infinity if singular.
  double log_det_block() const noexcept { return log_det_block_; }
  int block_rank() const noexcept { return block_rank_; }
  double zero_tol() const noexcept { return zero_tol_; }

  const IndexSet& complement() const noexcept { return complement_; }
  const Matrix& complement_pinv() const noexcept { return complement_pinv_; }
  /// Residual covariance of X_U given X_{-U}, in subset order (CanonCorr only).
  const Matrix& reverse_residual() const noexcept { return reverse_residual_; }

  void advance(const SymMatrix& sigma, int i);
  void retract(const SymMatrix& sigma, int position);
  /// Recomputes every cache from scratch for the current subset.
  void rebuild(const SymMatrix& sigma);

  /// Largest relative Frobenius deviation of the cached residual and block
  /// pseudo-inverse from their from-scratch values.
  double consistency_error(const SymMatrix& sigma) const;

  /// Objective of the current subset read from the caches. Agrees with
  /// evaluate() up to accumulated rounding; DetResidual still factorizes.
  double objective(const SymMatrix& sigma) const;

 private:
  friend double score_candidate(const Criterion&, const SubsetState&, const SymMatrix&, int);
  friend void score_all(const Criterion&, const SubsetState&, const SymMatrix&, Vector&);

  void refresh_canon(const SymMatrix& sigma);
  void rebuild_complement(const SymMatrix& sigma);
  void require_candidate(int i) const;
  IndexSet complement_or_rest(int p) const;

  Criterion criterion_;
  IndexSet subset_;
  Matrix residual_;
  Matrix block_pinv_;
  double log_det_block_ = 0.0;
  int block_rank_ = 0;
  double zero_tol_ = 0.0;

  // CanonCorr extras.
  IndexSet complement_;
  Matrix complement_pinv_;
  bool complement_full_rank_ = true;
  Matrix complement_gain_;  // complement_pinv * Sigma_{-U,U}
  Matrix reverse_residual_;
  int modifications_ = 0;
};

/// Score of adding candidate i to the state's subset. The argmin over
/// candidates equals the argmin of evaluate() over subset + {i}; only the
/// order is meaningful, not the value.
double score_candidate(const Criterion& criterion, const SubsetState& state, const SymMatrix& sigma, int i);

/// Scores for every variable; selected variables get +infinity.
void score_all(const Criterion& criterion, const SubsetState& state, const SymMatrix& sigma, Vector& scores);

/// Lowest-index argmin over finite-or-minus-infinite scores. A later index
/// wins only if it is smaller by more than `margin`. Returns -1 if every
/// score is +infinity.
int argmin_lowest_index(const Vector& scores, double margin = 1e-12);

SubsetState advance(const Criterion& criterion, const SubsetState& state, const SymMatrix& sigma, int i);
SubsetState retract(const Criterion& criterion, const SubsetState& state, const SymMatrix& sigma, int position);

}  // namespace csskit
