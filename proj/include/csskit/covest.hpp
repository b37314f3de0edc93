#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "csskit/symmat.hpp"

namespace csskit {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using CountMatrix = Eigen::MatrixXi;

/// n x p samples with an explicit observed mask. Values under a false mask
/// entry are ignored (conventionally NaN).
class DataMatrix {
 public:
  DataMatrix() = default;
  /// Fully observed data.
  explicit DataMatrix(Matrix values);
  DataMatrix(Matrix values, BoolMatrix observed);

  int n() const noexcept { return static_cast<int>(values_.rows()); }
  int p() const noexcept { return static_cast<int>(values_.cols()); }
  const Matrix& values() const noexcept { return values_; }
  const BoolMatrix& observed() const noexcept { return observed_; }
  bool is_observed(int i, int j) const { return observed_(i, j); }
  bool has_missing() const { return !observed_.all(); }
  int missing_count() const { return static_cast<int>((!observed_).count()); }

  void set_missing(int i, int j);

 private:
  Matrix values_;
  BoolMatrix observed_;
};

/// Column-centred X^T X / n. The divisor is n, not n - 1.
SymMatrix sample_cov(const DataMatrix& x);

struct PairwiseDiagnostics {
  CountMatrix overlap;      // |I_st|; the diagonal holds |I_s|
  int min_overlap = 0;      // smallest off-diagonal count (or |I_s| if p = 1)
  double min_eig_before = 0.0;
  double min_eig_after = 0.0;
  bool projected = false;   // true if the projection changed the estimate
};

/// Pairwise-complete covariance, each pair averaged over its jointly
/// observed rows around per-column means, then projected onto the PSD cone.
SymMatrix pairwise_cov_psd(const DataMatrix& x, PairwiseDiagnostics* diagnostics = nullptr);

/// The estimate before projection.
SymMatrix pairwise_cov_raw(const DataMatrix& x, CountMatrix* overlap = nullptr);

/// D^{-1/2} sigma D^{-1/2}.
SymMatrix to_correlation(const SymMatrix& sigma);

// ------------------------------------------------------------------- CSV

enum class Header { Auto, Present, Absent };

struct CsvTable {
  std::vector<std::string> header;  // empty when absent
  DataMatrix data;
};

/// Comma-separated samples. Empty fields, NA and NaN are missing.
CsvTable read_data_csv(std::istream& in, Header header = Header::Auto);
CsvTable read_data_csv_file(const std::string& path, Header header = Header::Auto);

/// Square numeric grid; symmetry is checked at 1e-8 and then enforced.
SymMatrix read_matrix_csv(std::istream& in, Header header = Header::Auto);
SymMatrix read_matrix_csv_file(const std::string& path, Header header = Header::Auto);

/// Full matrix in shortest round-trip form, so reading it back is exact.
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header = {});
void write_matrix_csv_file(const std::string& path, const Matrix& m, const std::vector<std::string>& header = {});
void write_data_csv(std::ostream& out, const DataMatrix& x, const std::vector<std::string>& header = {});

/// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace csskit
