#include "csskit/covest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace csskit {

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  observed_ = BoolMatrix::Constant(values_.rows(), values_.cols(), true);
  require_finite(values_, "data");
}

DataMatrix::DataMatrix(Matrix values, BoolMatrix observed) : values_(std::move(values)), observed_(std::move(observed)) {
  if (observed_.rows() != values_.rows() || observed_.cols() != values_.cols())
    throw DimensionMismatch("mask shape does not match data shape");
  for (Eigen::Index i = 0; i < values_.rows(); ++i)
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      if (observed_(i, j) && !std::isfinite(values_(i, j)))
        throw NonFinite("observed entry (" + std::to_string(i) + ", " + std::to_string(j) + ") is not finite");
}

void DataMatrix::set_missing(int i, int j) {
  observed_(i, j) = false;
  values_(i, j) = std::numeric_limits<double>::quiet_NaN();
}

SymMatrix sample_cov(const DataMatrix& x) {
  if (x.has_missing()) throw HasMissing("sample_cov needs complete data; use pairwise_cov_psd");
  if (x.n() < 1) throw InvalidConfig("data has no rows");
  const Matrix centred = x.values().rowwise() - x.values().colwise().mean();
  Matrix cov(x.p(), x.p());
  cov.setZero();
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centred.transpose(), 1.0 / x.n());
  mirror_lower(cov);
  return SymMatrix::symmetrized(cov);
}

SymMatrix pairwise_cov_raw(const DataMatrix& x, CountMatrix* overlap) {
  const int n = x.n();
  const int p = x.p();
  if (!x.has_missing()) {
    if (overlap) *overlap = CountMatrix::Constant(p, p, n);
    if (n < 2) throw InsufficientOverlap("every column needs at least two observed values");
    return sample_cov(x);
  }
  Vector mean(p);
  for (int s = 0; s < p; ++s) {
    int count = 0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (x.is_observed(i, s)) {
        sum += x.values()(i, s);
        ++count;
      }
    if (count < 2)
      throw InsufficientOverlap("column " + std::to_string(s) + " has " + std::to_string(count) +
                                " observed values, need at least 2");
    mean(s) = sum / count;
  }
  // Zero-filled centred values and the mask as doubles turn every pairwise
  // sum and count into one matrix product.
  Matrix centred(n, p);
  Matrix mask(n, p);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < p; ++s) {
      const bool obs = x.is_observed(i, s);
      mask(i, s) = obs ? 1.0 : 0.0;
      centred(i, s) = obs ? x.values()(i, s) - mean(s) : 0.0;
    }
  const Matrix sums = centred.transpose() * centred;
  const Matrix counts = mask.transpose() * mask;
  Matrix psi(p, p);
  for (int s = 0; s < p; ++s)
    for (int t = 0; t <= s; ++t) {
      const double c = counts(s, t);
      if (c < 1.0)
        throw InsufficientOverlap("variables " + std::to_string(t) + " and " + std::to_string(s) +
                                  " are never observed together");
      psi(s, t) = psi(t, s) = sums(s, t) / c;
    }
  if (overlap) *overlap = counts.cast<int>();
  return SymMatrix::symmetrized(psi);
}

SymMatrix pairwise_cov_psd(const DataMatrix& x, PairwiseDiagnostics* diagnostics) {
  CountMatrix overlap;
  const SymMatrix psi = pairwise_cov_raw(x, &overlap);
  const SymMatrix out = psd_project(psi);
  if (diagnostics) {
    diagnostics->overlap = overlap;
    int m = std::numeric_limits<int>::max();
    for (int s = 0; s < overlap.rows(); ++s)
      for (int t = 0; t < s; ++t) m = std::min(m, overlap(s, t));
    diagnostics->min_overlap = overlap.rows() == 1 ? overlap(0, 0) : m;
    Eigen::SelfAdjointEigenSolver<Matrix> before(psi.mat(), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> after(out.mat(), Eigen::EigenvaluesOnly);
    diagnostics->min_eig_before = before.eigenvalues()(0);
    diagnostics->min_eig_after = after.eigenvalues()(0);
    diagnostics->projected = diagnostics->min_eig_before < 0.0;
  }
  return out;
}

SymMatrix to_correlation(const SymMatrix& sigma) {
  const int p = sigma.dim();
  Vector inv_sd(p);
  for (int i = 0; i < p; ++i) {
    if (!(sigma(i, i) > 0.0)) throw ZeroVariance("variable " + std::to_string(i) + " has zero variance");
    inv_sd(i) = 1.0 / std::sqrt(sigma(i, i));
  }
  Matrix c = inv_sd.asDiagonal() * sigma.mat() * inv_sd.asDiagonal();
  c.diagonal().setOnes();
  return SymMatrix::symmetrized(c);
}

// ------------------------------------------------------------------- CSV

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '"')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool is_missing_token(const std::string& f) { return f.empty() || f == "NA" || f == "NaN" || f == "nan"; }

bool parse_number(const std::string& f, double& v) {
  const char* b = f.data();
  const char* e = b + f.size();
  if (b != e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  return res.ec == std::errc() && res.ptr == e && std::isfinite(v);
}

bool looks_numeric(const std::vector<std::string>& fields) {
  double v;
  for (const auto& f : fields)
    if (!is_missing_token(f) && !parse_number(f, v)) return false;
  return true;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int first_line = 1;
};

RawTable read_raw(std::istream& in, Header header) {
  RawTable t;
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (first) {
      first = false;
      const bool is_header = header == Header::Present || (header == Header::Auto && !looks_numeric(fields));
      if (is_header) {
        t.header = std::move(fields);
        t.first_line = line_no + 1;
        continue;
      }
      t.first_line = line_no;
    }
    if (!t.rows.empty() && fields.size() != t.rows.front().size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.rows.front().size()) +
                       " fields, found " + std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  if (!t.header.empty() && !t.rows.empty() && t.header.size() != t.rows.front().size())
    throw ParseError("header has " + std::to_string(t.header.size()) + " fields but rows have " +
                     std::to_string(t.rows.front().size()));
  return t;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "'");
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write '" + path + "'");
  return f;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable read_data_csv(std::istream& in, Header header) {
  RawTable raw = read_raw(in, header);
  if (raw.rows.empty()) throw ParseError("no data rows");
  const int n = static_cast<int>(raw.rows.size());
  const int p = static_cast<int>(raw.rows.front().size());
  Matrix values(n, p);
  BoolMatrix observed(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) {
      const std::string& f = raw.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      double v = 0.0;
      if (is_missing_token(f)) {
        observed(i, j) = false;
        values(i, j) = std::numeric_limits<double>::quiet_NaN();
      } else if (parse_number(f, v)) {
        observed(i, j) = true;
        values(i, j) = v;
      } else {
        throw ParseError("line " + std::to_string(raw.first_line + i) + ", column " + std::to_string(j + 1) +
                         ": cannot parse '" + f + "'");
      }
    }
  return CsvTable{std::move(raw.header), DataMatrix(std::move(values), std::move(observed))};
}

CsvTable read_data_csv_file(const std::string& path, Header header) {
  auto f = open_in(path);
  return read_data_csv(f, header);
}

SymMatrix read_matrix_csv(std::istream& in, Header header) {
  const CsvTable t = read_data_csv(in, header);
  if (t.data.n() != t.data.p())
    throw ParseError("matrix is " + std::to_string(t.data.n()) + " x " + std::to_string(t.data.p()) + ", not square");
  if (t.data.has_missing()) throw ParseError("matrix has missing entries");
  try {
    return SymMatrix(t.data.values());
  } catch (const NotSymmetric& e) {
    throw ParseError(std::string("matrix is not symmetric: ") + e.what());
  }
}

SymMatrix read_matrix_csv_file(const std::string& path, Header header) {
  auto f = open_in(path);
  return read_matrix_csv(f, header);
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

void write_matrix_csv_file(const std::string& path, const Matrix& m, const std::vector<std::string>& header) {
  auto f = open_out(path);
  write_matrix_csv(f, m, header);
}

void write_data_csv(std::ostream& out, const DataMatrix& x, const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (int i = 0; i < x.n(); ++i) {
    for (int j = 0; j < x.p(); ++j) {
      if (j) out << ',';
      if (x.is_observed(i, j)) out << format_double(x.values()(i, j));
    }
    out << '\n';
  }
}

}  // namespace csskit
