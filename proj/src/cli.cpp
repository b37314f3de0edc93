#include "csskit/cli.hpp"

#include <cmath>
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "csskit/covest.hpp"
#include "csskit/parallel.hpp"
#include "csskit/search.hpp"
#include "csskit/simlab.hpp"
#include "csskit/sizesel.hpp"
#include "csskit/version.hpp"

namespace csskit::cli {

namespace {

using nlohmann::json;

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string file_digest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream buf;
  buf << f.rdbuf();
  return "fnv1a64:" + hex64(fnv1a64(buf.str()));
}

json finite_or_text(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

std::string join(const IndexSet& s, char sep = ';') {
  std::string out;
  for (int i = 0; i < s.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(s[i]);
  }
  return out;
}

Header parse_header(const std::string& h) {
  if (h == "yes") return Header::Present;
  if (h == "no") return Header::Absent;
  return Header::Auto;
}

// Output sink: a file when a path is given, else the command's stdout.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ParseError("cannot write '" + path + "'");
    }
    stream_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& get() { return *stream_; }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_;
};

struct Manifest {
  json body;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Manifest(const std::string& command, int argc, const char* const* argv) {
    body["schema"] = "csskit.manifest/1";
    body["command"] = command;
    body["argv"] = json::array();
    for (int i = 0; i < argc; ++i) body["argv"].push_back(argv[i]);
    body["version"] = kVersion;
    body["threads"] = num_threads();
    body["inputs"] = json::object();
    body["seeds"] = json::object();
  }
  void input(const std::string& path) {
    if (!path.empty()) body["inputs"][path] = file_digest(path);
  }
  void write(const std::string& path) {
    if (path.empty()) return;
    body["timings"] = {{"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write '" + path + "'");
    f << body.dump(2) << '\n';
  }
};

std::string manifest_path(const std::string& explicit_path, const std::string& out) {
  if (!explicit_path.empty()) return explicit_path;
  return out.empty() ? std::string() : out + ".manifest.json";
}

// Covariance from either --cov or --data, with optional standardization.
struct CovInput {
  std::string cov_path;
  std::string data_path;
  std::string header = "auto";
  std::string missing = "auto";
  bool standardize = false;

  struct Loaded {
    SymMatrix sigma;
    int n = 0;
    std::vector<std::string> names;
    bool had_missing = false;
  };

  Loaded load() const {
    Loaded l;
    if (!cov_path.empty()) {
      std::ifstream f(cov_path);
      if (!f) throw ParseError("cannot open '" + cov_path + "'");
      const CsvTable t = read_data_csv(f, parse_header(header));
      if (t.data.n() != t.data.p() || t.data.has_missing())
        throw ParseError("'" + cov_path + "' is not a complete square matrix");
      l.sigma = SymMatrix(t.data.values());
      l.names = t.header;
    } else {
      const CsvTable t = read_data_csv_file(data_path, parse_header(header));
      l.n = t.data.n();
      l.names = t.header;
      l.had_missing = t.data.has_missing();
      if (missing == "none" || (missing == "auto" && !t.data.has_missing())) {
        l.sigma = sample_cov(t.data);
      } else {
        l.sigma = pairwise_cov_psd(t.data);
      }
    }
    if (standardize) l.sigma = to_correlation(l.sigma);
    return l;
  }
};

void add_cov_input(CLI::App* app, CovInput& in, bool data_only = false) {
  CLI::Option* data = app->add_option("--data", in.data_path, "Samples CSV (rows are samples)")->check(CLI::ExistingFile);
  if (!data_only) {
    CLI::Option* cov = app->add_option("--cov", in.cov_path, "Covariance matrix CSV")->check(CLI::ExistingFile);
    cov->excludes(data);
  }
  app->add_option("--header", in.header, "Header row: auto, yes or no")
      ->check(CLI::IsMember({"auto", "yes", "no"}));
  app->add_option("--missing", in.missing, "Estimator for --data: auto, pairwise-psd or none")
      ->check(CLI::IsMember({"auto", "pairwise-psd", "none"}));
  app->add_flag("--standardize", in.standardize, "Convert to a correlation matrix first");
}

// ------------------------------------------------------------------ select

struct SelectArgs {
  CovInput input;
  int k = 0;
  std::string k_range;
  std::string method = "greedy";
  std::string criterion = "css";
  int restarts = 1;
  int max_sweeps = 100;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string json_out;
  std::string manifest;
};

std::pair<int, int> parse_range(const std::string& r) {
  const auto dots = r.find("..");
  if (dots == std::string::npos) throw Usage("--k-range must look like A..B");
  try {
    const int a = std::stoi(r.substr(0, dots));
    const int b = std::stoi(r.substr(dots + 2));
    if (a < 1 || b < a) throw Usage("--k-range needs 1 <= A <= B");
    return {a, b};
  } catch (const std::logic_error&) {
    throw Usage("--k-range must look like A..B");
  }
}

int cmd_select(const SelectArgs& a, int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (a.input.cov_path.empty() && a.input.data_path.empty()) throw Usage("select needs --cov or --data");
  if ((a.k > 0) == !a.k_range.empty()) throw Usage("select needs exactly one of --k and --k-range");
  if (a.method == "swap" && !a.seed) throw Usage("--method swap is randomized and needs --seed");
  const auto [k_lo, k_hi] = a.k_range.empty() ? std::pair{a.k, a.k} : parse_range(a.k_range);

  Manifest manifest("select", argc, argv);
  manifest.input(a.input.cov_path);
  manifest.input(a.input.data_path);
  const auto loaded = a.input.load();
  const SymMatrix& sigma = loaded.sigma;
  const int p = sigma.dim();
  if (k_hi > p) throw KTooLarge("k = " + std::to_string(k_hi) + " exceeds p = " + std::to_string(p));

  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma.mat(), Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues().reverse().cwiseMax(0.0);
  const double total = sigma.trace();

  SearchConfig cfg;
  cfg.criterion.kind = parse_criterion(a.criterion);
  cfg.restarts = a.restarts;
  cfg.max_sweeps = a.max_sweeps;
  cfg.seed = a.seed.value_or(0);

  Sink sink(a.out, out);
  std::ostream& csv = sink.get();
  csv << "k,method,criterion,objective,css_objective,avg_r2,pca_r2,subset\n";
  json rows = json::array();
  for (int k = k_lo; k <= k_hi; ++k) {
    cfg.k = k;
    SearchResult r;
    if (a.method == "greedy") {
      r = greedy(sigma, cfg);
    } else if (a.method == "swap") {
      r = swap(sigma, cfg);
    } else {
      r = exhaustive(sigma, k, cfg.criterion);
    }
    const double css = evaluate(Criterion{CriterionKind::CssTrace, cfg.criterion.rank_tol}, sigma, r.subset);
    const double avg_r2 = total > 0 ? 1.0 - css / total : 0.0;
    const double pca_r2 = total > 0 ? ev.head(k).sum() / total : 0.0;
    csv << k << ',' << a.method << ',' << a.criterion << ',' << format_double(r.objective) << ','
        << format_double(css) << ',' << format_double(avg_r2) << ',' << format_double(pca_r2) << ','
        << join(r.subset) << '\n';
    json row = {{"k", k},
                {"subset", r.subset.indices()},
                {"objective", finite_or_text(r.objective)},
                {"css_objective", css},
                {"avg_r2", avg_r2},
                {"pca_r2", pca_r2},
                {"trajectory", json::array()}};
    for (double v : r.trajectory) row["trajectory"].push_back(finite_or_text(v));
    if (a.method == "swap") {
      row["sweeps_used"] = r.sweeps_used;
      row["hit_sweep_cap"] = r.hit_sweep_cap;
      row["best_restart"] = r.best_restart;
    }
    if (!loaded.names.empty()) {
      row["names"] = json::array();
      for (int i : r.subset) row["names"].push_back(loaded.names[static_cast<std::size_t>(i)]);
    }
    rows.push_back(row);
    if (r.hit_sweep_cap) err << "warning: swap hit the sweep cap at k = " << k << '\n';
  }
  if (!a.json_out.empty()) {
    std::ofstream f(a.json_out);
    if (!f) throw ParseError("cannot write '" + a.json_out + "'");
    f << json{{"schema", "csskit.select/1"},
              {"method", a.method},
              {"criterion", a.criterion},
              {"p", p},
              {"trace", total},
              {"results", rows}}
             .dump(2)
      << '\n';
  }
  manifest.body["seeds"] = {{"search", cfg.seed}};
  manifest.write(manifest_path(a.manifest, a.out));
  return kOk;
}

// ------------------------------------------------------------------ covest

struct CovestArgs {
  CovInput input;
  std::string out;
  std::string diagnostics;
  std::string manifest;
};

int cmd_covest(const CovestArgs& a, int argc, const char* const* argv, std::ostream& out) {
  Manifest manifest("covest", argc, argv);
  manifest.input(a.input.data_path);
  const CsvTable t = read_data_csv_file(a.input.data_path, parse_header(a.input.header));
  json diag;
  diag["schema"] = "csskit.covest/1";
  diag["n"] = t.data.n();
  diag["p"] = t.data.p();
  diag["missing_entries"] = t.data.missing_count();
  SymMatrix sigma;
  const bool pairwise = a.input.missing == "pairwise-psd" || (a.input.missing == "auto" && t.data.has_missing());
  if (pairwise) {
    PairwiseDiagnostics d;
    sigma = pairwise_cov_psd(t.data, &d);
    diag["estimator"] = "pairwise-psd";
    diag["min_eigenvalue_before"] = d.min_eig_before;
    diag["min_eigenvalue_after"] = d.min_eig_after;
    diag["projected"] = d.projected;
    diag["min_pair_overlap"] = d.min_overlap;
    json counts = json::array();
    for (int s = 0; s < d.overlap.rows(); ++s) {
      json row = json::array();
      for (int u = 0; u < d.overlap.cols(); ++u) row.push_back(d.overlap(s, u));
      counts.push_back(row);
    }
    diag["overlap_counts"] = counts;
  } else {
    sigma = sample_cov(t.data);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma.mat(), Eigen::EigenvaluesOnly);
    diag["estimator"] = "sample";
    diag["min_eigenvalue_before"] = es.eigenvalues()(0);
    diag["min_eigenvalue_after"] = es.eigenvalues()(0);
    diag["projected"] = false;
  }
  diag["divisor"] = "n";
  if (a.input.standardize) sigma = to_correlation(sigma);
  diag["standardized"] = a.input.standardize;
  Sink sink(a.out, out);
  write_matrix_csv(sink.get(), sigma.mat(), t.header);
  const std::string diag_path = !a.diagnostics.empty() ? a.diagnostics : (a.out.empty() ? "" : a.out + ".diagnostics.json");
  if (!diag_path.empty()) {
    std::ofstream f(diag_path);
    if (!f) throw ParseError("cannot write '" + diag_path + "'");
    f << diag.dump(2) << '\n';
  }
  manifest.write(manifest_path(a.manifest, a.out));
  return kOk;
}

// ---------------------------------------------------------------- choose-k

struct ChooseArgs {
  CovInput input;
  int n = 0;
  double alpha = 0.05;
  std::string model = "subset-factor";
  int mc_samples = kDefaultMcSamples;
  int restarts = 1;
  int max_k = -1;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string manifest;
};

int cmd_choose_k(const ChooseArgs& a, int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (a.input.cov_path.empty() && a.input.data_path.empty()) throw Usage("choose-k needs --data or --cov");
  if (!a.input.cov_path.empty() && a.n <= 0) throw Usage("--cov input needs the sample size --n");
  if (!a.seed) throw Usage("choose-k is randomized and needs --seed");
  Manifest manifest("choose-k", argc, argv);
  manifest.input(a.input.cov_path);
  manifest.input(a.input.data_path);
  const auto loaded = a.input.load();
  const int n = a.input.cov_path.empty() ? loaded.n : a.n;

  ChooseKOptions opt;
  opt.alpha = a.alpha;
  opt.model = parse_size_model(a.model);
  opt.mc_samples = a.mc_samples;
  opt.seed = *a.seed;
  opt.search.seed = derive_seed(*a.seed, 1);
  opt.search.restarts = a.restarts;
  opt.max_k = a.max_k;
  // The null laws are exact for complete Gaussian samples only.
  if (loaded.had_missing)
    err << "warning: the data have missing entries; critical values assume complete data\n";
  const SizeSelectionReport rep = choose_k(loaded.sigma, n, opt);
  bool all_infinite = rep.records.size() > 1;
  for (std::size_t i = 0; i + 1 < rep.records.size(); ++i)
    all_infinite = all_infinite && std::isinf(rep.records[i].statistic);
  if (all_infinite)
    err << "warning: the statistic is infinite at every rejected size because the covariance estimate is "
           "singular; the chosen size only reflects its rank\n";

  out << "model " << to_string(rep.model) << ", alpha " << rep.alpha << ", n " << n << ", p " << loaded.sigma.dim()
      << '\n';
  out << "  k   statistic   critical   decision\n";
  for (const auto& r : rep.records) {
    char line[128];
    std::snprintf(line, sizeof line, "%3d %11.4f %10.4f   %s%s\n", r.k, r.statistic, r.critical_value,
                  r.reject ? "reject" : "accept", r.perfect_fit ? " (perfect fit)" : "");
    out << line;
  }
  out << "chosen k = " << rep.chosen_k << ", subset = [" << join(rep.chosen_subset, ',') << "]\n";
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw ParseError("cannot write '" + a.out + "'");
    f << report_json(rep) << '\n';
  }
  manifest.body["seeds"] = {{"critical_values", opt.seed}, {"search", opt.search.seed}};
  manifest.write(manifest_path(a.manifest, a.out));
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
  std::string scenario;
  int trials = 100;
  int n = 200;
  std::optional<std::uint64_t> seed;
  double signal = 0.254;
  std::string factors = "gaussian";
  int restarts = 10;
  int mc_samples = kDefaultMcSamples;
  double alpha = 0.05;
  double mar_prob = 0.05;
  std::string out;
  std::string summary;
  std::string manifest;
};

int cmd_simulate(const SimArgs& a, int argc, const char* const* argv, std::ostream& out) {
  if (!a.seed) throw Usage("simulate needs --seed");
  Manifest manifest("simulate", argc, argv);
  json summary;
  summary["schema"] = "csskit.simulate/1";
  summary["scenario"] = a.scenario;
  summary["trials"] = a.trials;
  summary["n"] = a.n;
  summary["seed"] = *a.seed;
  Sink sink(a.out, out);
  std::ostream& csv = sink.get();
  if (a.scenario == "missing-a1") {
    const ScenarioSpec spec = preset_a1(a.mar_prob);
    const MissingStudyResult r = run_missing_study(a.trials, a.n, spec, *a.seed, a.restarts);
    csv << "trial,arm,exact_recovery,overlap,pop_css_objective,cc_sum,subset\n";
    for (std::size_t t = 0; t < r.method.size(); ++t) {
      for (const auto& [arm, m] : {std::pair{"swap", &r.method[t]}, std::pair{"random", &r.baseline[t]}}) {
        csv << t << ',' << arm << ',' << (m->exact_recovery ? 1 : 0) << ',' << m->overlap << ','
            << format_double(m->pop_css_objective) << ',' << format_double(m->cc_sum_value) << ','
            << join(m->selected) << '\n';
      }
    }
    summary["mar_prob"] = a.mar_prob;
    summary["restarts"] = a.restarts;
    summary["swap"] = {{"recovery_rate", r.recovery_rate},
                       {"overlap_mean", r.overlap.mean},
                       {"overlap_se", r.overlap.std_error},
                       {"objective_mean", r.objective.mean},
                       {"objective_se", r.objective.std_error}};
    summary["random"] = {{"recovery_rate", r.baseline_recovery_rate},
                         {"overlap_mean", r.baseline_overlap.mean},
                         {"overlap_se", r.baseline_overlap.std_error},
                         {"objective_mean", r.baseline_objective.mean},
                         {"objective_se", r.baseline_objective.std_error}};
  } else {
    const ScenarioSpec spec = preset_a2(a.signal, a.factors == "mixed");
    SizeselStudyOptions opt;
    opt.alpha = a.alpha;
    opt.restarts = a.restarts;
    opt.mc_samples = a.mc_samples;
    const SizeselStudyResult r = run_sizesel_study(a.trials, a.n, spec, *a.seed, opt);
    csv << "trial,chosen_k,overlap,cc_sum,exact_recovery,subset\n";
    for (std::size_t t = 0; t < r.trials.size(); ++t) {
      const auto& m = r.trials[t];
      csv << t << ',' << m.chosen_k << ',' << m.overlap << ',' << format_double(m.cc_sum_value) << ','
          << (m.exact_recovery ? 1 : 0) << ',' << join(m.selected) << '\n';
    }
    summary["signal"] = a.signal;
    summary["factors"] = a.factors;
    summary["alpha"] = a.alpha;
    summary["restarts"] = a.restarts;
    summary["mc_samples"] = a.mc_samples;
    json hist = json::object();
    for (std::size_t k = 0; k < r.k_hat_counts.size(); ++k)
      if (r.k_hat_counts[k]) hist[std::to_string(k)] = r.k_hat_counts[k];
    summary["k_hat_counts"] = hist;
    summary["k_hat_mean"] = r.k_hat.mean;
    summary["median_overlap"] = r.median_overlap;
    summary["cc_sum_mean"] = r.cc_sum.mean;
    summary["cc_sum_se"] = r.cc_sum.std_error;
  }
  const std::string summary_path = !a.summary.empty() ? a.summary : (a.out.empty() ? "" : a.out + ".summary.json");
  if (!summary_path.empty()) {
    std::ofstream f(summary_path);
    if (!f) throw ParseError("cannot write '" + summary_path + "'");
    f << summary.dump(2) << '\n';
  }
  manifest.body["seeds"] = {{"study", *a.seed}};
  manifest.write(manifest_path(a.manifest, a.out));
  return kOk;
}

// ------------------------------------------------------------------ sample

struct SampleArgs {
  std::string scenario;
  int n = 200;
  std::optional<std::uint64_t> seed;
  double signal = 0.254;
  std::string factors = "gaussian";
  double mar_prob = 0.0;
  std::string out;
  bool population = false;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  if (!a.population && !a.seed) throw Usage("sample needs --seed");
  ScenarioSpec spec = a.scenario == "a1" ? preset_a1(a.mar_prob) : preset_a2(a.signal, a.factors == "mixed");
  spec.mar_prob = a.mar_prob;
  Sink sink(a.out, out);
  if (a.population) {
    write_matrix_csv(sink.get(), population_cov(spec).mat());
  } else {
    write_data_csv(sink.get(), sample(spec, a.n, *a.seed));
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Covariance-based column subset selection", "csskit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: CSSKIT_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  SelectArgs sel;
  CLI::App* s = app.add_subcommand("select", "Select a subset of variables");
  add_cov_input(s, sel.input);
  s->add_option("--k", sel.k, "Subset size")->check(CLI::PositiveNumber);
  s->add_option("--k-range", sel.k_range, "Range of subset sizes A..B");
  s->add_option("--method", sel.method, "greedy, swap or exhaustive")
      ->check(CLI::IsMember({"greedy", "swap", "exhaustive"}));
  s->add_option("--criterion", sel.criterion, "css, det, frob, cc, diag-det or iso-lrt")
      ->check(CLI::IsMember({"css", "det", "frob", "cc", "diag-det", "iso-lrt"}));
  s->add_option("--restarts", sel.restarts, "Random starts for swap")->check(CLI::PositiveNumber);
  s->add_option("--max-sweeps", sel.max_sweeps, "Sweep cap for swap")->check(CLI::PositiveNumber);
  s->add_option("--seed", sel.seed, "Random seed");
  s->add_option("--out", sel.out, "CSV output (default stdout)");
  s->add_option("--json", sel.json_out, "Also write a JSON result file");
  s->add_option("--manifest", sel.manifest, "Run manifest path (default <out>.manifest.json)");

  CovestArgs cov;
  cov.input.missing = "pairwise-psd";
  CLI::App* c = app.add_subcommand("covest", "Estimate a covariance matrix from samples");
  add_cov_input(c, cov.input, true);
  c->get_option("--data")->required();
  c->add_option("--out", cov.out, "Matrix CSV output (default stdout)");
  c->add_option("--diagnostics", cov.diagnostics, "Diagnostics JSON (default <out>.diagnostics.json)");
  c->add_option("--manifest", cov.manifest, "Run manifest path (default <out>.manifest.json)");

  ChooseArgs ch;
  CLI::App* k = app.add_subcommand("choose-k", "Choose the subset size by sequential testing");
  add_cov_input(k, ch.input);
  k->add_option("--n", ch.n, "Sample size (required with --cov)");
  k->add_option("--alpha", ch.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
  k->add_option("--model", ch.model, "subset-factor or pcss")->check(CLI::IsMember({"subset-factor", "pcss"}));
  k->add_option("--mc-samples", ch.mc_samples, "Monte Carlo draws per critical value")->check(CLI::Range(1000, 100000000));
  k->add_option("--restarts", ch.restarts, "Swap restarts per size")->check(CLI::PositiveNumber);
  k->add_option("--max-k", ch.max_k, "Largest size tested");
  k->add_option("--seed", ch.seed, "Random seed");
  k->add_option("--out", ch.out, "Report JSON path");
  k->add_option("--manifest", ch.manifest, "Run manifest path (default <out>.manifest.json)");

  SimArgs sim;
  CLI::App* m = app.add_subcommand("simulate", "Run a simulation study");
  m->add_option("--scenario", sim.scenario, "missing-a1 or sizesel-a2")
      ->required()
      ->check(CLI::IsMember({"missing-a1", "sizesel-a2"}));
  m->add_option("--trials", sim.trials, "Number of trials")->check(CLI::PositiveNumber);
  m->add_option("--n", sim.n, "Samples per trial")->check(CLI::PositiveNumber);
  m->add_option("--seed", sim.seed, "Random seed");
  m->add_option("--signal", sim.signal, "Noise scale s for sizesel-a2 (smaller is stronger signal)")
      ->check(CLI::PositiveNumber);
  m->add_option("--factors", sim.factors, "gaussian or mixed")->check(CLI::IsMember({"gaussian", "mixed"}));
  m->add_option("--restarts", sim.restarts, "Swap restarts")->check(CLI::PositiveNumber);
  m->add_option("--mc-samples", sim.mc_samples, "Monte Carlo draws per critical value")->check(CLI::Range(1000, 100000000));
  m->add_option("--alpha", sim.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
  m->add_option("--mar-prob", sim.mar_prob, "Missing-at-random rate for missing-a1")->check(CLI::Range(0.0, 0.99));
  m->add_option("--out", sim.out, "Per-trial CSV (default stdout)");
  m->add_option("--summary", sim.summary, "Summary JSON (default <out>.summary.json)");
  m->add_option("--manifest", sim.manifest, "Run manifest path (default <out>.manifest.json)");

  SampleArgs smp;
  CLI::App* d = app.add_subcommand("sample", "Draw data from a preset scenario");
  d->add_option("--scenario", smp.scenario, "a1 or a2")->required()->check(CLI::IsMember({"a1", "a2"}));
  d->add_option("--n", smp.n, "Number of samples")->check(CLI::PositiveNumber);
  d->add_option("--seed", smp.seed, "Random seed");
  d->add_option("--signal", smp.signal, "Noise scale s for a2")->check(CLI::PositiveNumber);
  d->add_option("--factors", smp.factors, "gaussian or mixed")->check(CLI::IsMember({"gaussian", "mixed"}));
  d->add_option("--mar-prob", smp.mar_prob, "Missing-at-random rate")->check(CLI::Range(0.0, 0.99));
  d->add_flag("--population", smp.population, "Write the population covariance instead of samples");
  d->add_option("--out", smp.out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadFlags;
  }
  if (threads > 0) set_num_threads(threads);

  try {
    if (s->parsed()) return cmd_select(sel, argc, argv, out, err);
    if (c->parsed()) return cmd_covest(cov, argc, argv, out);
    if (k->parsed()) return cmd_choose_k(ch, argc, argv, out, err);
    if (m->parsed()) return cmd_simulate(sim, argc, argv, out);
    if (d->parsed()) return cmd_sample(smp, out);
  } catch (const Usage& e) {
    err << "error: " << e.what() << '\n';
    return kBadFlags;
  } catch (const Error& e) {
    err << "error [" << e.module() << "/" << e.kind() << "]: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kBadFlags;
}

}  // namespace csskit::cli
