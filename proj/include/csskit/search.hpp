#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "csskit/criteria.hpp"

namespace csskit {

struct SearchConfig {
  int k = 1;
  Criterion criterion;
  int restarts = 1;
  int max_sweeps = 100;
  std::uint64_t seed = 0;
  /// Greedy stops as soon as the objective is at or below this value.
  std::optional<double> objective_floor;
  /// A swap is accepted only if it improves the score by more than this.
  double swap_margin = 1e-12;
};

struct SearchResult {
  IndexSet subset;
  double objective = 0.0;
  std::vector<double> trajectory;
  std::vector<IndexSet> nested_subsets;  // greedy only
  int sweeps_used = 0;                   // swap only
  bool hit_sweep_cap = false;            // swap only
  int best_restart = 0;                  // swap only
  /// Objective became -infinity (a variable is reconstructed exactly) and
  /// the search stopped improving early.
  bool perfect_fit = false;
};

/// Forward selection: k argmin steps of score_candidate, lowest index on ties.
SearchResult greedy(const SymMatrix& sigma, const SearchConfig& config);

/// Swap search from a given start. Positions are visited in order; each is
/// replaced only by a strictly better candidate.
SearchResult swap(const SymMatrix& sigma, const SearchConfig& config, const IndexSet& init);

/// Swap search from config.restarts random starts (seed + r for restart r),
/// returning the best; ties go to the lowest restart.
SearchResult swap(const SymMatrix& sigma, const SearchConfig& config);

/// Uniform random size-k subset from a seeded generator.
IndexSet random_subset(int p, int k, std::uint64_t seed);

inline constexpr double kDefaultExhaustiveCap = 2e6;

/// Global optimum by enumeration in lexicographic order; the first subset
/// wins unless a later one is lower by more than 1e-12.
SearchResult exhaustive(const SymMatrix& sigma, int k, const Criterion& criterion,
                        double max_subsets = kDefaultExhaustiveCap);

/// C(n, k) as a double (exact up to 2^53).
double binomial(int n, int k);

/// Throws NotPSD unless every eigenvalue is at least -rank_tol * lambda_max.
void require_psd(const SymMatrix& sigma, double rank_tol = kDefaultRankTol);

}  // namespace csskit
