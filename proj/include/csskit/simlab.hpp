#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "csskit/covest.hpp"
#include "csskit/sizesel.hpp"

namespace csskit {

enum class FactorLaw { Gaussian, Rademacher, StudentT3, CenteredExponential };

std::string_view to_string(FactorLaw law);
/// Accepts gaussian, rademacher, student-t3 and exponential.
FactorLaw parse_factor_law(std::string_view name);

/// Generative model: X_S ~ N(mu_S, sigma_s) and
/// X_{-S} = W (X_S - mu_S) + mu_{-S} + eps with independent unique factors.
/// Pcss uses eps ~ N(0, sigma2 I); SubsetFactor uses eps_j with variance
/// d_diag(j) drawn from laws[j].
struct ScenarioSpec {
  SizeModel model = SizeModel::Pcss;
  int p = 0;
  IndexSet subset_s;   // the true subset S; k_star = subset_s.size()
  Matrix sigma_s;      // k x k covariance of X_S
  Matrix w;            // (p - k) x k, rows follow the ascending complement of S
  Vector mu;           // length p; empty means zero mean
  double sigma2 = 1.0;           // Pcss
  Vector d_diag;                 // SubsetFactor, length p - k
  std::vector<FactorLaw> laws;   // SubsetFactor, empty means all Gaussian
  double mar_prob = 0.0;

  int k_star() const { return subset_s.size(); }
  /// Throws DimMismatch or InvalidConfig.
  void validate() const;
};

/// The 20-variable, k = 4 PCSS scenario used for the missing-data study.
ScenarioSpec preset_a1(double mar_prob = 0.05);

/// The 50-variable, k = 20 subset-factor scenario. D = signal_scale * D~,
/// so a smaller scale means stronger signal. `mixed` selects the
/// exponential / Rademacher / t3 unique-factor assignment.
ScenarioSpec preset_a2(double signal_scale, bool mixed);

/// Signal scales used by the size-selection study, strongest first.
const std::vector<double>& a2_signal_grid();

/// Raw text of an embedded preset file and its FNV-1a 64-bit digest.
const std::string& preset_text(std::string_view name);
std::vector<std::string> preset_names();
std::uint64_t fnv1a64(std::string_view bytes);

SymMatrix population_cov(const ScenarioSpec& spec);

/// n i.i.d. draws in natural variable order, then entry-wise MAR masking.
DataMatrix sample(const ScenarioSpec& spec, int n, std::uint64_t seed);

struct TrialMetrics {
  IndexSet selected;
  bool exact_recovery = false;
  int overlap = 0;
  double pop_css_objective = 0.0;
  double cc_sum_value = 0.0;
  int chosen_k = 0;  // size-selection study only
};

struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
};

Summary summarize(const std::vector<double>& values);

struct MissingStudyResult {
  std::vector<TrialMetrics> method;    // pairwise estimate + swap
  std::vector<TrialMetrics> baseline;  // uniformly random subset
  double recovery_rate = 0.0;
  double baseline_recovery_rate = 0.0;
  Summary overlap, baseline_overlap;
  Summary objective, baseline_objective;
};

/// Per trial: sample with MAR masking, pairwise PSD covariance, swap search
/// with `restarts` random starts, metrics against the population.
MissingStudyResult run_missing_study(int trials, int n, const ScenarioSpec& spec, std::uint64_t seed,
                                     int restarts = 10);

struct SizeselStudyResult {
  std::vector<TrialMetrics> trials;
  std::vector<int> k_hat_counts;  // histogram indexed by k
  double median_overlap = 0.0;
  Summary cc_sum;
  Summary k_hat;
};

struct SizeselStudyOptions {
  double alpha = 0.05;
  int restarts = 10;
  int mc_samples = kDefaultMcSamples;
  /// Defaults to the scenario's own model.
  bool model_from_spec = true;
  SizeModel model = SizeModel::SubsetFactor;
};

/// Per trial: complete-data sample covariance, choose_k, metrics against the
/// population.
SizeselStudyResult run_sizesel_study(int trials, int n, const ScenarioSpec& spec, std::uint64_t seed,
                                     const SizeselStudyOptions& options = {});

double median(std::vector<double> values);

}  // namespace csskit
