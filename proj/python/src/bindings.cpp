#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "csskit/covest.hpp"
#include "csskit/criteria.hpp"
#include "csskit/errors.hpp"
#include "csskit/parallel.hpp"
#include "csskit/search.hpp"
#include "csskit/simlab.hpp"
#include "csskit/sizesel.hpp"
#include "csskit/symmat.hpp"

namespace py = pybind11;
using namespace csskit;

namespace {

// NaN entries become missing observations.
DataMatrix to_data(const Matrix& x) {
  BoolMatrix observed(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) observed(i, j) = !std::isnan(x(i, j));
  return DataMatrix(x, observed);
}

Matrix from_data(const DataMatrix& d) {
  Matrix out = d.values();
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if (!d.is_observed(static_cast<int>(i), static_cast<int>(j))) out(i, j) = std::nan("");
  return out;
}

SearchConfig make_config(int k, const std::string& criterion, int restarts, int max_sweeps, std::uint64_t seed) {
  SearchConfig c;
  c.k = k;
  c.criterion.kind = parse_criterion(criterion);
  c.restarts = restarts;
  c.max_sweeps = max_sweeps;
  c.seed = seed;
  return c;
}

py::dict result_dict(const SearchResult& r) {
  py::dict d;
  d["subset"] = r.subset.indices();
  d["objective"] = r.objective;
  d["trajectory"] = r.trajectory;
  std::vector<std::vector<int>> nested;
  for (const IndexSet& s : r.nested_subsets) nested.push_back(s.indices());
  d["nested_subsets"] = nested;
  d["sweeps_used"] = r.sweeps_used;
  d["hit_sweep_cap"] = r.hit_sweep_cap;
  d["best_restart"] = r.best_restart;
  d["perfect_fit"] = r.perfect_fit;
  return d;
}

py::dict report_dict(const SizeSelectionReport& r) {
  py::list records;
  for (const SizeTestRecord& t : r.records) {
    py::dict d;
    d["k"] = t.k;
    d["subset"] = t.subset.indices();
    d["statistic"] = t.statistic;
    d["critical_value"] = t.critical_value;
    d["reject"] = t.reject;
    d["perfect_fit"] = t.perfect_fit;
    records.append(d);
  }
  py::dict d;
  d["records"] = records;
  d["chosen_k"] = r.chosen_k;
  d["chosen_subset"] = r.chosen_subset.indices();
  d["alpha"] = r.alpha;
  d["model"] = std::string(to_string(r.model));
  d["n"] = r.n;
  d["mc_samples"] = r.mc_samples;
  d["seed"] = r.seed;
  return d;
}

ScenarioSpec scenario(const std::string& name, double mar_prob, double signal_scale, bool mixed) {
  if (name == "a1") return preset_a1(mar_prob);
  if (name == "a2") return preset_a2(signal_scale, mixed);
  throw InvalidConfig("unknown scenario '" + name + "' (expected a1 or a2)");
}

}  // namespace

PYBIND11_MODULE(_csskit, m) {
  m.doc() = "Covariance-based column subset selection";

  static py::exception<Error> base(m, "CsskitError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = e.module() + "/" + e.kind() + ": " + e.what();
      py::set_error(base, msg.c_str());
    }
  });

  m.def("set_num_threads", &set_num_threads, py::arg("n"));
  m.def("num_threads", &num_threads);

  m.def(
      "evaluate",
      [](const Matrix& sigma, const std::vector<int>& subset, const std::string& criterion) {
        return evaluate(Criterion{parse_criterion(criterion)}, SymMatrix(sigma), IndexSet(subset));
      },
      py::arg("sigma"), py::arg("subset"), py::arg("criterion") = "css");

  m.def(
      "greedy",
      [](const Matrix& sigma, int k, const std::string& criterion) {
        return result_dict(greedy(SymMatrix(sigma), make_config(k, criterion, 1, 100, 0)));
      },
      py::arg("sigma"), py::arg("k"), py::arg("criterion") = "css");

  m.def(
      "swap",
      [](const Matrix& sigma, int k, const std::string& criterion, int restarts, int max_sweeps, std::uint64_t seed,
         std::optional<std::vector<int>> init) {
        const SearchConfig c = make_config(k, criterion, restarts, max_sweeps, seed);
        const SymMatrix s(sigma);
        return result_dict(init ? swap(s, c, IndexSet(*init)) : swap(s, c));
      },
      py::arg("sigma"), py::arg("k"), py::arg("criterion") = "css", py::arg("restarts") = 1,
      py::arg("max_sweeps") = 100, py::arg("seed") = 0, py::arg("init") = py::none());

  m.def(
      "exhaustive",
      [](const Matrix& sigma, int k, const std::string& criterion, double max_subsets) {
        return result_dict(exhaustive(SymMatrix(sigma), k, Criterion{parse_criterion(criterion)}, max_subsets));
      },
      py::arg("sigma"), py::arg("k"), py::arg("criterion") = "css", py::arg("max_subsets") = kDefaultExhaustiveCap);

  m.def(
      "residual_covariance",
      [](const Matrix& sigma, const std::vector<int>& subset) {
        return residual_covariance(SymMatrix(sigma), IndexSet(subset)).mat();
      },
      py::arg("sigma"), py::arg("subset"));
  m.def(
      "pseudo_inverse", [](const Matrix& sigma) { return pseudo_inverse(SymMatrix(sigma)).mat(); }, py::arg("sigma"));
  m.def(
      "psd_project", [](const Matrix& sigma) { return psd_project(SymMatrix::symmetrized(sigma)).mat(); },
      py::arg("sigma"));

  m.def(
      "sample_cov", [](const Matrix& x) { return sample_cov(to_data(x)).mat(); }, py::arg("x"));
  m.def(
      "pairwise_cov",
      [](const Matrix& x, bool project) {
        return project ? pairwise_cov_psd(to_data(x)).mat() : pairwise_cov_raw(to_data(x)).mat();
      },
      py::arg("x"), py::arg("project") = true);
  m.def(
      "to_correlation", [](const Matrix& sigma) { return to_correlation(SymMatrix(sigma)).mat(); },
      py::arg("sigma"));

  m.def(
      "stat_t",
      [](const Matrix& sigma_hat, int n, const std::vector<int>& subset) {
        return stat_T(SymMatrix(sigma_hat), n, IndexSet(subset));
      },
      py::arg("sigma_hat"), py::arg("n"), py::arg("subset"));
  m.def(
      "stat_t_tilde",
      [](const Matrix& sigma_hat, int n, const std::vector<int>& subset) {
        return stat_Ttilde(SymMatrix(sigma_hat), n, IndexSet(subset));
      },
      py::arg("sigma_hat"), py::arg("n"), py::arg("subset"));
  m.def(
      "critical_value",
      [](const std::string& model, int n, int p, int k, double alpha, int mc_samples, std::uint64_t seed) {
        return critical_value(parse_size_model(model), n, p, k, alpha, mc_samples, seed);
      },
      py::arg("model"), py::arg("n"), py::arg("p"), py::arg("k"), py::arg("alpha") = 0.05,
      py::arg("mc_samples") = kDefaultMcSamples, py::arg("seed") = 0);
  m.def(
      "choose_k",
      [](const Matrix& sigma_hat, int n, double alpha, const std::string& model, int restarts, int mc_samples,
         std::uint64_t seed, int max_k) {
        ChooseKOptions o;
        o.alpha = alpha;
        o.model = parse_size_model(model);
        o.search.restarts = restarts;
        o.search.seed = seed;
        o.mc_samples = mc_samples;
        o.seed = seed;
        o.max_k = max_k;
        return report_dict(choose_k(SymMatrix(sigma_hat), n, o));
      },
      py::arg("sigma_hat"), py::arg("n"), py::arg("alpha") = 0.05, py::arg("model") = "subset-factor",
      py::arg("restarts") = 1, py::arg("mc_samples") = kDefaultMcSamples, py::arg("seed") = 0,
      py::arg("max_k") = -1);

  m.def(
      "population_cov",
      [](const std::string& name, double signal_scale, bool mixed) {
        return population_cov(scenario(name, 0.0, signal_scale, mixed)).mat();
      },
      py::arg("scenario"), py::arg("signal_scale") = 0.254, py::arg("mixed") = false);
  m.def(
      "sample_scenario",
      [](const std::string& name, int n, std::uint64_t seed, double mar_prob, double signal_scale, bool mixed) {
        return from_data(sample(scenario(name, mar_prob, signal_scale, mixed), n, seed));
      },
      py::arg("scenario"), py::arg("n"), py::arg("seed"), py::arg("mar_prob") = 0.0, py::arg("signal_scale") = 0.254,
      py::arg("mixed") = false);
}
