#include "csskit/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "csskit/parallel.hpp"

namespace csskit {

std::string_view to_string(FactorLaw law) {
  switch (law) {
    case FactorLaw::Gaussian: return "gaussian";
    case FactorLaw::Rademacher: return "rademacher";
    case FactorLaw::StudentT3: return "student-t3";
    case FactorLaw::CenteredExponential: return "exponential";
  }
  return "?";
}

FactorLaw parse_factor_law(std::string_view name) {
  if (name == "gaussian") return FactorLaw::Gaussian;
  if (name == "rademacher") return FactorLaw::Rademacher;
  if (name == "student-t3") return FactorLaw::StudentT3;
  if (name == "exponential") return FactorLaw::CenteredExponential;
  throw InvalidConfig("unknown factor law '" + std::string(name) + "'");
}

void ScenarioSpec::validate() const {
  subset_s.validate(p);
  const int k = k_star();
  const int m = p - k;
  if (sigma_s.rows() != k || sigma_s.cols() != k) throw DimMismatch("sigma_s must be k x k");
  if (w.rows() != m || w.cols() != k) throw DimMismatch("w must be (p - k) x k");
  if (mu.size() != 0 && mu.size() != p) throw DimMismatch("mu must have length p");
  if (!(mar_prob >= 0.0 && mar_prob < 1.0)) throw InvalidConfig("mar_prob must lie in [0, 1)");
  if (model == SizeModel::Pcss) {
    if (!(sigma2 > 0.0)) throw InvalidConfig("sigma2 must be positive");
  } else {
    if (d_diag.size() != m) throw DimMismatch("d_diag must have length p - k");
    if (!(d_diag.array() > 0.0).all()) throw InvalidConfig("d_diag entries must be positive");
    if (!laws.empty() && static_cast<int>(laws.size()) != m) throw DimMismatch("laws must have length p - k");
  }
  if (k > 0) {
    Eigen::LLT<Matrix> llt(sigma_s);
    if (llt.info() != Eigen::Success) throw NotPSD("sigma_s must be positive definite");
  }
}

namespace {

Vector noise_variances(const ScenarioSpec& spec) {
  const int m = spec.p - spec.k_star();
  return spec.model == SizeModel::Pcss ? Vector::Constant(m, spec.sigma2) : spec.d_diag;
}

}  // namespace

SymMatrix population_cov(const ScenarioSpec& spec) {
  spec.validate();
  const IndexSet& s = spec.subset_s;
  const IndexSet rest = IndexSet::complement(s, spec.p);
  const Matrix cross = spec.w * spec.sigma_s;  // Cov(X_{-S}, X_S)
  Matrix lower = cross * spec.w.transpose();
  lower.diagonal() += noise_variances(spec);
  Matrix out(spec.p, spec.p);
  for (int a = 0; a < s.size(); ++a)
    for (int b = 0; b < s.size(); ++b) out(s[a], s[b]) = spec.sigma_s(a, b);
  for (int a = 0; a < rest.size(); ++a) {
    for (int b = 0; b < s.size(); ++b) out(rest[a], s[b]) = out(s[b], rest[a]) = cross(a, b);
    for (int b = 0; b < rest.size(); ++b) out(rest[a], rest[b]) = lower(a, b);
  }
  return SymMatrix::symmetrized(out);
}

DataMatrix sample(const ScenarioSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InvalidConfig("n must be positive");
  const int k = spec.k_star();
  const int m = spec.p - k;
  const IndexSet rest = IndexSet::complement(spec.subset_s, spec.p);
  const Vector mu = spec.mu.size() ? spec.mu : Vector::Zero(spec.p);
  const Vector var = noise_variances(spec);
  const Matrix chol = k > 0 ? Matrix(Eigen::LLT<Matrix>(spec.sigma_s).matrixL()) : Matrix(0, 0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(3.0);
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution coin(0.5);

  Matrix x(n, spec.p);
  Vector z(k);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < k; ++a) z(a) = normal(rng);
    const Vector xs = chol * z;
    const Vector pred = spec.w * xs;
    for (int a = 0; a < k; ++a) x(i, spec.subset_s[a]) = xs(a) + mu(spec.subset_s[a]);
    for (int j = 0; j < m; ++j) {
      const FactorLaw law = spec.laws.empty() ? FactorLaw::Gaussian : spec.laws[static_cast<std::size_t>(j)];
      const double sd = std::sqrt(var(j));
      double eps = 0.0;
      switch (law) {
        case FactorLaw::Gaussian: eps = sd * normal(rng); break;
        case FactorLaw::Rademacher: eps = coin(rng) ? sd : -sd; break;
        case FactorLaw::StudentT3: eps = sd / std::sqrt(3.0) * student(rng); break;
        case FactorLaw::CenteredExponential: eps = sd * (expo(rng) - 1.0); break;
      }
      x(i, rest[j]) = pred(j) + mu(rest[j]) + eps;
    }
  }
  DataMatrix out(std::move(x));
  if (spec.mar_prob > 0.0) {
    std::bernoulli_distribution drop(spec.mar_prob);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < spec.p; ++j)
        if (drop(rng)) out.set_missing(i, j);
  }
  return out;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

namespace {

TrialMetrics score_subset(const SymMatrix& pop, const IndexSet& truth, const IndexSet& selected) {
  TrialMetrics t;
  t.selected = selected;
  t.chosen_k = selected.size();
  t.exact_recovery = same_elements(selected, truth);
  for (int i : selected) t.overlap += truth.contains(i) ? 1 : 0;
  t.pop_css_objective = evaluate(Criterion{CriterionKind::CssTrace}, pop, selected);
  t.cc_sum_value = selected.empty() || truth.empty() ? 0.0 : cc_sum(pop, selected, truth);
  return t;
}

std::vector<double> field(const std::vector<TrialMetrics>& ts, double (*get)(const TrialMetrics&)) {
  std::vector<double> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(get(t));
  return out;
}

double rate(const std::vector<TrialMetrics>& ts) {
  if (ts.empty()) return 0.0;
  double hits = 0.0;
  for (const auto& t : ts) hits += t.exact_recovery ? 1.0 : 0.0;
  return hits / static_cast<double>(ts.size());
}

}  // namespace

MissingStudyResult run_missing_study(int trials, int n, const ScenarioSpec& spec, std::uint64_t seed, int restarts) {
  if (trials < 1) throw InvalidConfig("trials must be positive");
  const SymMatrix pop = population_cov(spec);
  const int k = spec.k_star();
  MissingStudyResult out;
  out.method.resize(static_cast<std::size_t>(trials));
  out.baseline.resize(static_cast<std::size_t>(trials));
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, t);
    const DataMatrix x = sample(spec, n, trial_seed);
    const SymMatrix est = pairwise_cov_psd(x);
    SearchConfig cfg;
    cfg.k = k;
    cfg.criterion.kind = CriterionKind::CssTrace;
    cfg.restarts = restarts;
    cfg.seed = derive_seed(trial_seed, 1);
    const SearchResult found = swap(est, cfg);
    out.method[t] = score_subset(pop, spec.subset_s, found.subset);
    out.baseline[t] = score_subset(pop, spec.subset_s, random_subset(spec.p, k, derive_seed(trial_seed, 2)));
  });
  out.recovery_rate = rate(out.method);
  out.baseline_recovery_rate = rate(out.baseline);
  auto overlap = [](const TrialMetrics& t) { return static_cast<double>(t.overlap); };
  auto objective = [](const TrialMetrics& t) { return t.pop_css_objective; };
  out.overlap = summarize(field(out.method, overlap));
  out.baseline_overlap = summarize(field(out.baseline, overlap));
  out.objective = summarize(field(out.method, objective));
  out.baseline_objective = summarize(field(out.baseline, objective));
  return out;
}

SizeselStudyResult run_sizesel_study(int trials, int n, const ScenarioSpec& spec, std::uint64_t seed,
                                     const SizeselStudyOptions& options) {
  if (trials < 1) throw InvalidConfig("trials must be positive");
  const SymMatrix pop = population_cov(spec);
  SizeselStudyResult out;
  out.trials.resize(static_cast<std::size_t>(trials));
  ChooseKOptions ck;
  ck.alpha = options.alpha;
  ck.model = options.model_from_spec ? spec.model : options.model;
  ck.search.restarts = options.restarts;
  ck.mc_samples = options.mc_samples;
  ck.seed = derive_seed(seed, 0xC0FFEE);
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, t);
    DataMatrix x = sample(spec, n, trial_seed);
    const SymMatrix est = x.has_missing() ? pairwise_cov_psd(x) : sample_cov(x);
    ChooseKOptions local = ck;
    local.search.seed = derive_seed(trial_seed, 1);
    const SizeSelectionReport rep = choose_k(est, n, local);
    out.trials[t] = score_subset(pop, spec.subset_s, rep.chosen_subset);
    out.trials[t].chosen_k = rep.chosen_k;
  });
  out.k_hat_counts.assign(static_cast<std::size_t>(spec.p), 0);
  for (const auto& t : out.trials) ++out.k_hat_counts[static_cast<std::size_t>(t.chosen_k)];
  out.median_overlap = median(field(out.trials, [](const TrialMetrics& t) { return static_cast<double>(t.overlap); }));
  out.cc_sum = summarize(field(out.trials, [](const TrialMetrics& t) { return t.cc_sum_value; }));
  out.k_hat = summarize(field(out.trials, [](const TrialMetrics& t) { return static_cast<double>(t.chosen_k); }));
  return out;
}

}  // namespace csskit
