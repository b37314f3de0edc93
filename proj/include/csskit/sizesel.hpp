#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "csskit/search.hpp"

namespace csskit {

enum class SizeModel { SubsetFactor, Pcss };

std::string_view to_string(SizeModel model);
/// Accepts subset-factor and pcss.
SizeModel parse_size_model(std::string_view name);

/// Criterion whose minimizer is the model's maximum-likelihood subset.
CriterionKind search_criterion(SizeModel model);

/// Likelihood-ratio statistic for the diagonal-residual model:
/// n log(|Diag R| / |R|), R the residual on the unselected variables.
/// 0 when some residual variance vanishes; +infinity when R is singular
/// with a positive diagonal.
double stat_T(const SymMatrix& sigma_hat, int n, const IndexSet& subset, double rank_tol = kDefaultRankTol);

/// Isotropic-residual statistic: n log((Tr R / m)^m / |R|), m = p - |subset|.
double stat_Ttilde(const SymMatrix& sigma_hat, int n, const IndexSet& subset, double rank_tol = kDefaultRankTol);

inline constexpr int kDefaultMcSamples = 100000;
inline constexpr int kMinMcSamples = 1000;

/// Empirical (1 - alpha) quantile of
///   n * sum_{j=2}^{p-k} log(1 + chi2~_{j-1} / chi2_{n-k-j}).
double mc_quantile_subset_factor(int n, int p, int k, double alpha, int mc_samples, std::uint64_t seed);

/// Empirical (1 - alpha) quantile of
///   n * log(((chi2~_{m(m-1)/2} + sum_j chi2_{n-k-j}) / m)^m / prod_j chi2_{n-k-j}),
/// j = 1..m, m = p - k.
double mc_quantile_pcss(int n, int p, int k, double alpha, int mc_samples, std::uint64_t seed);

/// Raw Monte Carlo draws of either null law (unsorted, deterministic per seed).
std::vector<double> mc_null_draws(SizeModel model, int n, int p, int k, int mc_samples, std::uint64_t seed);

/// Cached critical value; the cache is keyed by every argument.
double critical_value(SizeModel model, int n, int p, int k, double alpha, int mc_samples, std::uint64_t seed);
void clear_critical_value_cache();

/// Inverse empirical CDF: sorted[ceil(q N) - 1], clamped to the sample.
double empirical_quantile(std::vector<double> values, double q);

struct SizeTestRecord {
  int k = 0;
  IndexSet subset;
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
  /// The search criterion reached -infinity (a variable is reconstructed exactly).
  bool perfect_fit = false;
};

struct SizeSelectionReport {
  std::vector<SizeTestRecord> records;
  int chosen_k = 0;
  IndexSet chosen_subset;
  double alpha = 0.05;
  SizeModel model = SizeModel::SubsetFactor;
  int n = 0;
  int mc_samples = kDefaultMcSamples;
  std::uint64_t seed = 0;
  std::uint64_t search_seed = 0;
  int restarts = 1;
  double rank_tol = kDefaultRankTol;
  double swap_margin = 1e-12;
};

struct ChooseKOptions {
  double alpha = 0.05;
  SizeModel model = SizeModel::SubsetFactor;
  /// restarts, max_sweeps, seed and rank_tol are used; k and the
  /// criterion kind are set per step.
  SearchConfig search;
  int mc_samples = kDefaultMcSamples;
  std::uint64_t seed = 0;
  /// Largest k tested; -1 means p - 1.
  int max_k = -1;
};

/// Tests k = 0, 1, ... and returns at the first size whose null is not
/// rejected.
SizeSelectionReport choose_k(const SymMatrix& sigma_hat, int n, const ChooseKOptions& options);

/// Sum of squared canonical correlations between X_a and X_b.
double cc_sum(const SymMatrix& sigma, const IndexSet& a, const IndexSet& b, double rank_tol = kDefaultRankTol);

/// JSON text of the report (records, chosen size and subset, settings).
std::string report_json(const SizeSelectionReport& report, int indent = 2);

}  // namespace csskit
