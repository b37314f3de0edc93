#include "csskit/sizesel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <future>
#include <map>
#include <mutex>
#include <random>
#include <tuple>

#include <json.hpp>

#include "csskit/parallel.hpp"

namespace csskit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kChunk = 4096;

struct Residual {
  Matrix r;  // m x m residual on the unselected variables
  double tol = 0.0;
};

Residual unselected_residual(const SymMatrix& sigma_hat, const IndexSet& subset, double rank_tol) {
  subset.validate(sigma_hat.dim());
  if (subset.size() >= sigma_hat.dim())
    throw KTooLarge("the statistic needs at least one unselected variable");
  const SymMatrix full = residual_covariance(sigma_hat, subset, rank_tol);
  const IndexSet rest = IndexSet::complement(subset, sigma_hat.dim());
  return Residual{submatrix(full.mat(), rest, rest), zero_tolerance(sigma_hat, rank_tol)};
}

void check_dof(int n, int p, int k, int mc_samples, double alpha) {
  if (k < 0 || k >= p) throw KTooLarge("k must lie in [0, p)");
  if (n - p <= 0)
    throw DegreesOfFreedom("n = " + std::to_string(n) + " must exceed p = " + std::to_string(p));
  if (mc_samples < kMinMcSamples)
    throw InvalidConfig("mc_samples must be at least " + std::to_string(kMinMcSamples));
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfig("alpha must lie in [0, 1]");
}

}  // namespace

std::string_view to_string(SizeModel model) {
  return model == SizeModel::SubsetFactor ? "subset-factor" : "pcss";
}

SizeModel parse_size_model(std::string_view name) {
  if (name == "subset-factor") return SizeModel::SubsetFactor;
  if (name == "pcss") return SizeModel::Pcss;
  throw InvalidConfig("unknown model '" + std::string(name) + "'");
}

CriterionKind search_criterion(SizeModel model) {
  return model == SizeModel::SubsetFactor ? CriterionKind::DiagDet : CriterionKind::IsoLrt;
}

double stat_T(const SymMatrix& sigma_hat, int n, const IndexSet& subset, double rank_tol) {
  const Residual res = unselected_residual(sigma_hat, subset, rank_tol);
  const Eigen::Index m = res.r.rows();
  Vector inv_sd(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!(res.r(j, j) > res.tol)) return 0.0;
    inv_sd(j) = 1.0 / std::sqrt(res.r(j, j));
  }
  // Hadamard ratio of R equals the determinant of its correlation matrix.
  Matrix c = inv_sd.asDiagonal() * res.r * inv_sd.asDiagonal();
  c.diagonal().setOnes();
  const LogDet ld = log_det(SymMatrix::symmetrized(c), rank_tol);
  return ld.is_singular() ? kInf : -n * ld.value();
}

double stat_Ttilde(const SymMatrix& sigma_hat, int n, const IndexSet& subset, double rank_tol) {
  const Residual res = unselected_residual(sigma_hat, subset, rank_tol);
  const double m = static_cast<double>(res.r.rows());
  const double t = res.r.trace();
  if (!(t > res.tol)) return 0.0;
  const LogDet ld = log_det(SymMatrix::symmetrized(res.r * (m / t)), rank_tol);
  return ld.is_singular() ? kInf : -n * ld.value();
}

std::vector<double> mc_null_draws(SizeModel model, int n, int p, int k, int mc_samples, std::uint64_t seed) {
  check_dof(n, p, k, mc_samples, 0.5);
  const int m = p - k;
  std::vector<double> out(static_cast<std::size_t>(mc_samples), 0.0);
  if (m <= 1) return out;
  const std::size_t chunks = (static_cast<std::size_t>(mc_samples) + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    std::mt19937_64 rng(derive_seed(seed, c));
    std::vector<std::chi_squared_distribution<double>> denom;  // chi2_{n-k-j}
    for (int j = 1; j <= m; ++j) denom.emplace_back(n - k - j);
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(lo + kChunk, out.size());
    if (model == SizeModel::SubsetFactor) {
      std::vector<std::chi_squared_distribution<double>> numer;  // chi2~_{j-1}
      for (int j = 2; j <= m; ++j) numer.emplace_back(j - 1);
      for (std::size_t s = lo; s < hi; ++s) {
        double acc = 0.0;
        for (int j = 2; j <= m; ++j) {
          const double a = numer[static_cast<std::size_t>(j - 2)](rng);
          const double b = denom[static_cast<std::size_t>(j - 1)](rng);
          acc += std::log1p(a / b);
        }
        out[s] = n * acc;
      }
    } else {
      std::chi_squared_distribution<double> off(0.5 * m * (m - 1));
      for (std::size_t s = lo; s < hi; ++s) {
        double sum = off(rng);
        double log_prod = 0.0;
        for (int j = 1; j <= m; ++j) {
          const double b = denom[static_cast<std::size_t>(j - 1)](rng);
          sum += b;
          log_prod += std::log(b);
        }
        out[s] = n * (m * std::log(sum / m) - log_prod);
      }
    }
  });
  return out;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidConfig("quantile of an empty sample");
  const auto count = static_cast<double>(values.size());
  auto idx = static_cast<long long>(std::ceil(q * count)) - 1;
  idx = std::clamp<long long>(idx, 0, static_cast<long long>(values.size()) - 1);
  auto nth = values.begin() + idx;
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

double mc_quantile_subset_factor(int n, int p, int k, double alpha, int mc_samples, std::uint64_t seed) {
  check_dof(n, p, k, mc_samples, alpha);
  return empirical_quantile(mc_null_draws(SizeModel::SubsetFactor, n, p, k, mc_samples, seed), 1.0 - alpha);
}

double mc_quantile_pcss(int n, int p, int k, double alpha, int mc_samples, std::uint64_t seed) {
  check_dof(n, p, k, mc_samples, alpha);
  return empirical_quantile(mc_null_draws(SizeModel::Pcss, n, p, k, mc_samples, seed), 1.0 - alpha);
}

namespace {

using CacheKey = std::tuple<int, int, int, int, double, int, std::uint64_t>;

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

// One shared future per key: the first caller computes, concurrent callers
// for the same key wait for that result.
std::map<CacheKey, std::shared_future<double>>& cache() {
  static std::map<CacheKey, std::shared_future<double>> c;
  return c;
}

}  // namespace

double critical_value(SizeModel model, int n, int p, int k, double alpha, int mc_samples, std::uint64_t seed) {
  const CacheKey key{static_cast<int>(model), n, p, k, alpha, mc_samples, seed};
  std::promise<double> promise;
  std::shared_future<double> future;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(cache_mutex());
    const auto it = cache().find(key);
    if (it != cache().end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      cache().emplace(key, future);
      owner = true;
    }
  }
  if (owner) {
    try {
      promise.set_value(model == SizeModel::SubsetFactor ? mc_quantile_subset_factor(n, p, k, alpha, mc_samples, seed)
                                                         : mc_quantile_pcss(n, p, k, alpha, mc_samples, seed));
    } catch (...) {
      {
        std::lock_guard<std::mutex> lock(cache_mutex());
        cache().erase(key);
      }
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

void clear_critical_value_cache() {
  std::lock_guard<std::mutex> lock(cache_mutex());
  cache().clear();
}

SizeSelectionReport choose_k(const SymMatrix& sigma_hat, int n, const ChooseKOptions& options) {
  const int p = sigma_hat.dim();
  if (n <= p) throw DegreesOfFreedom("choose_k needs n > p (n = " + std::to_string(n) + ", p = " + std::to_string(p) + ")");
  require_psd(sigma_hat, options.search.criterion.rank_tol);
  const int last = options.max_k < 0 ? p - 1 : std::min(options.max_k, p - 1);
  const double rank_tol = options.search.criterion.rank_tol;

  SizeSelectionReport report;
  report.alpha = options.alpha;
  report.model = options.model;
  report.n = n;
  report.mc_samples = options.mc_samples;
  report.seed = options.seed;
  report.search_seed = options.search.seed;
  report.restarts = options.search.restarts;
  report.rank_tol = rank_tol;
  report.swap_margin = options.search.swap_margin;

  SearchConfig cfg = options.search;
  cfg.criterion.kind = search_criterion(options.model);
  for (int k = 0; k <= last; ++k) {
    SizeTestRecord rec;
    rec.k = k;
    if (k > 0) {
      cfg.k = k;
      const SearchResult found = swap(sigma_hat, cfg);
      rec.subset = found.subset;
      rec.perfect_fit = found.perfect_fit;
    }
    rec.statistic = options.model == SizeModel::SubsetFactor ? stat_T(sigma_hat, n, rec.subset, rank_tol)
                                                             : stat_Ttilde(sigma_hat, n, rec.subset, rank_tol);
    rec.critical_value = critical_value(options.model, n, p, k, options.alpha, options.mc_samples, options.seed);
    rec.reject = rec.statistic > rec.critical_value;
    report.records.push_back(rec);
    if (!rec.reject) {
      report.chosen_k = k;
      report.chosen_subset = rec.subset;
      return report;
    }
  }
  throw NoFeasibleK("every size up to " + std::to_string(last) + " was rejected");
}

double cc_sum(const SymMatrix& sigma, const IndexSet& a, const IndexSet& b, double rank_tol) {
  if (a.empty() || b.empty()) throw InvalidConfig("cc_sum needs two non-empty sets");
  a.validate(sigma.dim());
  b.validate(sigma.dim());
  const Matrix pa = pseudo_inverse(sigma.block(a), rank_tol).mat();
  const Matrix pb = pseudo_inverse(sigma.block(b), rank_tol).mat();
  const Matrix ab = submatrix(sigma.mat(), a, b);
  return (pa * ab * pb * ab.transpose()).trace();
}

namespace {

nlohmann::json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

}  // namespace

std::string report_json(const SizeSelectionReport& report, int indent) {
  nlohmann::json j;
  j["schema"] = "csskit.size_selection/1";
  j["model"] = std::string(to_string(report.model));
  j["alpha"] = report.alpha;
  j["n"] = report.n;
  j["mc_samples"] = report.mc_samples;
  j["seeds"] = {{"critical_values", report.seed}, {"search", report.search_seed}};
  j["restarts"] = report.restarts;
  j["tolerances"] = {{"rank_tol", report.rank_tol}, {"swap_margin", report.swap_margin}};
  j["chosen_k"] = report.chosen_k;
  j["chosen_subset"] = report.chosen_subset.indices();
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : report.records) {
    recs.push_back({{"k", r.k},
                    {"subset", r.subset.indices()},
                    {"statistic", number_or_string(r.statistic)},
                    {"critical_value", number_or_string(r.critical_value)},
                    {"reject", r.reject},
                    {"perfect_fit", r.perfect_fit}});
  }
  return j.dump(indent);
}

}  // namespace csskit
