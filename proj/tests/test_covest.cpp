#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "csskit/covest.hpp"
#include "oracles.hpp"

using namespace csskit;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Entrywise pairwise estimate: per-column means over every observed row,
// cross products averaged over the rows where both columns are observed.
Matrix pairwise_reference(const Matrix& v, const BoolMatrix& obs) {
  const Eigen::Index n = v.rows();
  const Eigen::Index p = v.cols();
  Vector mean(p);
  for (Eigen::Index s = 0; s < p; ++s) {
    double sum = 0.0;
    int c = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (obs(i, s)) {
        sum += v(i, s);
        ++c;
      }
    mean(s) = sum / c;
  }
  Matrix psi(p, p);
  for (Eigen::Index s = 0; s < p; ++s)
    for (Eigen::Index t = 0; t < p; ++t) {
      double sum = 0.0;
      int c = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (obs(i, s) && obs(i, t)) {
          sum += (v(i, s) - mean(s)) * (v(i, t) - mean(t));
          ++c;
        }
      psi(s, t) = sum / c;
    }
  return psi;
}

DataMatrix masked(const Matrix& v, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution drop(rate);
  DataMatrix x(v);
  for (int i = 0; i < x.n(); ++i)
    for (int j = 0; j < x.p(); ++j)
      if (drop(rng)) x.set_missing(i, j);
  return x;
}

}  // namespace

TEST_CASE("sample_cov examples") {
  Matrix v(2, 2);
  v << 0, 0, 2, 2;
  const SymMatrix s = sample_cov(DataMatrix(v));
  CHECK(s.mat().isApprox(Matrix::Ones(2, 2)));

  Matrix c(3, 2);
  c << 1, 5, 2, 5, 4, 5;
  const SymMatrix sc = sample_cov(DataMatrix(c));
  CHECK(sc(1, 1) == 0.0);
  CHECK(sc(0, 1) == 0.0);
  CHECK(sc(0, 0) == doctest::Approx(14.0 / 9.0));

  Matrix one(1, 3);
  one << 1, 2, 3;
  CHECK(sample_cov(DataMatrix(one)).mat().isZero());

  DataMatrix gap(v);
  gap.set_missing(0, 1);
  CHECK_THROWS_AS(sample_cov(gap), HasMissing);
}

TEST_CASE("sample_cov divides by n") {
  std::mt19937_64 rng(31);
  const Matrix v = oracle::random_data(30, 4, rng);
  const Matrix centred = v.rowwise() - v.colwise().mean();
  const Matrix expect = centred.transpose() * centred / 30.0;
  CHECK(rel_frobenius(sample_cov(DataMatrix(v)).mat(), expect) < 1e-14);
}

TEST_CASE("pairwise estimate without missing values equals sample_cov") {
  std::mt19937_64 rng(32);
  const Matrix v = oracle::random_data(25, 5, rng);
  const SymMatrix a = sample_cov(DataMatrix(v));
  const SymMatrix b = pairwise_cov_raw(DataMatrix(v));
  CHECK(a.mat() == b.mat());
  PairwiseDiagnostics d;
  const SymMatrix c = pairwise_cov_psd(DataMatrix(v), &d);
  CHECK(c.mat() == a.mat());
  CHECK_FALSE(d.projected);
  CHECK(d.min_overlap == 25);
}

TEST_CASE("pairwise estimate on a four-sample worked example") {
  // Column 0 misses row 3, column 1 misses row 0.
  Matrix v(4, 2);
  v << 1, kNaN, 2, 1, 4, 3, kNaN, 8;
  BoolMatrix obs(4, 2);
  obs << true, false, true, true, true, true, false, true;
  const DataMatrix x(v, obs);
  // Means: col0 over rows 0..2 = 7/3; col1 over rows 1..3 = 4.
  // Var0 = ((1-7/3)^2 + (2-7/3)^2 + (4-7/3)^2) / 3 = 14/9.
  // Var1 = (9 + 1 + 16) / 3 = 26/3.
  // Cov over rows 1, 2: ((2-7/3)(1-4) + (4-7/3)(3-4)) / 2 = (1 - 5/3) / 2 = -1/3.
  CountMatrix overlap;
  const SymMatrix psi = pairwise_cov_raw(x, &overlap);
  CHECK(psi(0, 0) == doctest::Approx(14.0 / 9.0));
  CHECK(psi(1, 1) == doctest::Approx(26.0 / 3.0));
  CHECK(psi(0, 1) == doctest::Approx(-1.0 / 3.0));
  CHECK(overlap(0, 1) == 2);
  CHECK(overlap(0, 0) == 3);
  // Already PSD, so the projection leaves it alone.
  CHECK(pairwise_cov_psd(x).mat() == psi.mat());
}

TEST_CASE("pairwise estimate matches the entrywise reference and is projected") {
  std::mt19937_64 rng(33);
  int projected = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int p = 3 + trial % 5;
    const DataMatrix x = masked(oracle::random_data(6 + trial % 4, p, rng), 0.3, rng);
    SymMatrix raw;
    try {
      raw = pairwise_cov_raw(x);
    } catch (const InsufficientOverlap&) {
      continue;
    }
    CHECK(rel_frobenius(raw.mat(), pairwise_reference(x.values(), x.observed())) < 1e-12);
    PairwiseDiagnostics d;
    const SymMatrix out = pairwise_cov_psd(x, &d);
    CHECK(d.min_eig_after >= -1e-10);
    if (d.projected) {
      ++projected;
      CHECK(d.min_eig_before < 0.0);
      CHECK(out.mat() == psd_project(raw).mat());
    }
  }
  CHECK(projected > 0);
}

TEST_CASE("pairwise estimate rejects thin overlap") {
  Matrix v(4, 2);
  v << 1, kNaN, 2, kNaN, kNaN, 3, kNaN, 4;
  BoolMatrix obs = !v.array().isNaN();
  CHECK_THROWS_AS(pairwise_cov_raw(DataMatrix(v, obs)), InsufficientOverlap);
  Matrix w(3, 2);
  w << 1, 1, kNaN, 2, kNaN, 3;
  CHECK_THROWS_AS(pairwise_cov_psd(DataMatrix(w, !w.array().isNaN())), InsufficientOverlap);
}

TEST_CASE("pairwise estimate is consistent under 5% missingness") {
  std::mt19937_64 rng(34);
  const int p = 6;
  const Matrix pop = oracle::random_psd(p, p, rng) + Matrix::Identity(p, p);
  const Eigen::LLT<Matrix> llt(pop);
  const Matrix z = oracle::random_data(10000, p, rng);
  const Matrix v = z * llt.matrixL().transpose();
  const DataMatrix x = masked(v, 0.05, rng);
  const SymMatrix est = pairwise_cov_psd(x);
  CHECK(rel_frobenius(est.mat(), pop) <= 0.1);
}

TEST_CASE("to_correlation examples") {
  Vector d(2);
  d << 4, 9;
  CHECK(to_correlation(SymMatrix::diagonal(d)).mat() == Matrix::Identity(2, 2));
  const SymMatrix r = to_correlation(SymMatrix::from_rows({{4, 2}, {2, 1}}));
  CHECK(r.mat().isApprox(Matrix::Ones(2, 2)));
  const SymMatrix c = SymMatrix::from_rows({{1, 0.3}, {0.3, 1}});
  CHECK(to_correlation(c).mat() == c.mat());
  CHECK_THROWS_AS(to_correlation(SymMatrix::from_rows({{1, 0}, {0, 0}})), ZeroVariance);
}

TEST_CASE("data csv parsing") {
  std::istringstream in("a,b,c\n1,2,3\n4,,NA\nNaN,5.5,-1e3\n");
  const CsvTable t = read_data_csv(in);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.data.n() == 3);
  CHECK(t.data.missing_count() == 3);
  CHECK(t.data.values()(2, 2) == -1000.0);
  CHECK_FALSE(t.data.is_observed(1, 1));

  std::istringstream headless("1,2\n3,4\n");
  const CsvTable h = read_data_csv(headless);
  CHECK(h.header.empty());
  CHECK(h.data.n() == 2);

  std::istringstream forced("1,2\n3,4\n");
  CHECK(read_data_csv(forced, Header::Present).data.n() == 1);

  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_data_csv(ragged), ParseError);
  std::istringstream junk("x,y\n1,abc\n");
  CHECK_THROWS_AS(read_data_csv(junk), ParseError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_data_csv(empty), ParseError);
}

TEST_CASE("matrix csv round trip is exact") {
  std::mt19937_64 rng(35);
  const Matrix m = oracle::random_psd(5, 5, rng) / 3.0;
  std::ostringstream out;
  write_matrix_csv(out, m, {"v0", "v1", "v2", "v3", "v4"});
  std::istringstream in(out.str());
  const SymMatrix back = read_matrix_csv(in);
  CHECK(back.mat() == SymMatrix(m).mat());

  std::istringstream not_square("1,2,3\n4,5,6\n");
  CHECK_THROWS_AS(read_matrix_csv(not_square), ParseError);
  std::istringstream asym("1,2\n3,4\n");
  CHECK_THROWS_AS(read_matrix_csv(asym), ParseError);
  CHECK_THROWS_AS(read_matrix_csv_file("/nonexistent/file.csv"), ParseError);
}

TEST_CASE("data csv writer leaves missing cells empty") {
  Matrix v(2, 2);
  v << 1.5, 2, 3, 4;
  DataMatrix x(v);
  x.set_missing(0, 1);
  std::ostringstream out;
  write_data_csv(out, x, {"a", "b"});
  CHECK(out.str() == "a,b\n1.5,\n3,4\n");
  std::istringstream in(out.str());
  const CsvTable t = read_data_csv(in);
  CHECK(t.data.missing_count() == 1);
  CHECK(format_double(0.1) == "0.1");
}
