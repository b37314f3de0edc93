#include "csskit/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "csskit/parallel.hpp"

namespace csskit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const SymMatrix& sigma, const SearchConfig& config) {
  const int p = sigma.dim();
  if (config.k < 1) throw InvalidConfig("k must be at least 1");
  if (config.k > p)
    throw KTooLarge("k = " + std::to_string(config.k) + " exceeds p = " + std::to_string(p));
  if (config.restarts < 1) throw InvalidConfig("restarts must be at least 1");
  if (config.max_sweeps < 1) throw InvalidConfig("max_sweeps must be at least 1");
  require_psd(sigma, config.criterion.rank_tol);
}

SearchResult swap_unchecked(const SymMatrix& sigma, const SearchConfig& config, const IndexSet& init) {
  const Criterion& crit = config.criterion;
  const int k = init.size();
  IndexSet order = init;  // position j holds S_j; the state's own order drifts
  SubsetState state = SubsetState::build(crit, sigma, order);
  Vector scores;

  SearchResult out;
  double current = state.objective(sigma);
  out.trajectory.push_back(current);
  bool changed = true;
  while (changed && out.sweeps_used < config.max_sweeps) {
    changed = false;
    ++out.sweeps_used;
    if (current == -kInf) {
      out.perfect_fit = true;
      break;
    }
    for (int j = 0; j < k; ++j) {
      const int incumbent = order[j];
      state.retract(sigma, state.subset().position_of(incumbent));
      score_all(crit, state, sigma, scores);
      const int best = argmin_lowest_index(scores, config.swap_margin);
      if (best >= 0 && best != incumbent && scores(best) < scores(incumbent) - config.swap_margin) {
        state.advance(sigma, best);
        order.set(j, best);
        current = state.objective(sigma);
        out.trajectory.push_back(current);
        changed = true;
      } else {
        state.advance(sigma, incumbent);
      }
    }
    // Bound drift from long update chains.
    state.rebuild(sigma);
    current = state.objective(sigma);
  }
  out.hit_sweep_cap = changed;
  out.subset = order;
  out.objective = evaluate(crit, sigma, order);
  out.perfect_fit = out.perfect_fit || out.objective == -kInf;
  return out;
}

}  // namespace

void require_psd(const SymMatrix& sigma, double rank_tol) {
  if (sigma.dim() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NotPSD("eigenvalue computation failed");
  const Vector& ev = es.eigenvalues();
  const double top = std::max(ev(ev.size() - 1), 0.0);
  if (ev(0) < -rank_tol * top || (top == 0.0 && ev(0) < 0.0))
    throw NotPSD("matrix has eigenvalue " + std::to_string(ev(0)));
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

SearchResult greedy(const SymMatrix& sigma, const SearchConfig& config) {
  validate(sigma, config);
  const Criterion& crit = config.criterion;
  SubsetState state(crit, sigma);
  Vector scores;
  SearchResult out;
  for (int t = 0; t < config.k; ++t) {
    score_all(crit, state, sigma, scores);
    const int best = argmin_lowest_index(scores);
    if (best < 0) break;
    state.advance(sigma, best);
    const double obj = state.objective(sigma);
    out.trajectory.push_back(obj);
    out.nested_subsets.push_back(state.subset());
    if (obj == -kInf) out.perfect_fit = true;
    if (config.objective_floor && obj <= *config.objective_floor) break;
  }
  out.subset = state.subset();
  out.objective = evaluate(crit, sigma, out.subset);
  return out;
}

SearchResult swap(const SymMatrix& sigma, const SearchConfig& config, const IndexSet& init) {
  validate(sigma, config);
  init.validate(sigma.dim());
  if (init.size() != config.k)
    throw InvalidConfig("initial subset has size " + std::to_string(init.size()) + ", expected " +
                        std::to_string(config.k));
  return swap_unchecked(sigma, config, init);
}

IndexSet random_subset(int p, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates with an explicit bounded draw so the sequence does
  // not depend on the standard library's distribution implementation.
  for (int i = 0; i < k; ++i) {
    const std::uint64_t span = static_cast<std::uint64_t>(p - i);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i + static_cast<int>(r % span))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return IndexSet(std::move(idx));
}

SearchResult swap(const SymMatrix& sigma, const SearchConfig& config) {
  validate(sigma, config);
  std::vector<SearchResult> runs(static_cast<std::size_t>(config.restarts));
  parallel_for(runs.size(), [&](std::size_t r) {
    const IndexSet init = random_subset(sigma.dim(), config.k, config.seed + r);
    runs[r] = swap_unchecked(sigma, config, init);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].objective < runs[best].objective) best = r;
  SearchResult out = std::move(runs[best]);
  out.best_restart = static_cast<int>(best);
  return out;
}

SearchResult exhaustive(const SymMatrix& sigma, int k, const Criterion& criterion, double max_subsets) {
  SearchConfig cfg;
  cfg.k = k;
  cfg.criterion = criterion;
  validate(sigma, cfg);
  const int p = sigma.dim();
  const double count = binomial(p, k);
  if (count > max_subsets)
    throw TooManySubsets("C(" + std::to_string(p) + ", " + std::to_string(k) + ") = " + std::to_string(count) +
                         " subsets exceeds the cap");
  std::vector<int> comb(static_cast<std::size_t>(k));
  std::iota(comb.begin(), comb.end(), 0);
  SearchResult out;
  bool first = true;
  while (true) {
    const IndexSet s(comb);
    const double v = evaluate(criterion, sigma, s);
    if (first || v < out.objective - 1e-12) {
      out.objective = v;
      out.subset = s;
      first = false;
    }
    int i = k - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == p - k + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  }
  out.trajectory.push_back(out.objective);
  out.perfect_fit = out.objective == -kInf;
  return out;
}

}  // namespace csskit
