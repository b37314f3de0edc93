#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csskit/simlab.hpp"

namespace csskit {

namespace {

const std::map<std::string, std::string, std::less<>>& table() {
  static const std::map<std::string, std::string, std::less<>> t = {
#include "csskit/preset_data.inc"
  };
  return t;
}

Matrix numeric(std::string_view name) {
  std::istringstream in(preset_text(name));
  return read_data_csv(in, Header::Absent).data.values();
}

std::vector<std::string> lines(std::string_view name) {
  std::istringstream in(preset_text(name));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

}  // namespace

const std::string& preset_text(std::string_view name) {
  const auto it = table().find(name);
  if (it == table().end()) throw InvalidConfig("no embedded preset named '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : table()) out.push_back(name);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ScenarioSpec preset_a1(double mar_prob) {
  ScenarioSpec s;
  s.model = SizeModel::Pcss;
  s.p = 20;
  s.subset_s = IndexSet::range(0, 4);
  s.sigma_s = numeric("a1_sigma_s.csv");
  s.w = numeric("a1_w.csv");
  s.mu = Vector::Zero(20);
  s.sigma2 = 0.15;
  s.mar_prob = mar_prob;
  s.validate();
  return s;
}

ScenarioSpec preset_a2(double signal_scale, bool mixed) {
  if (!(signal_scale > 0.0)) throw InvalidConfig("signal scale must be positive");
  ScenarioSpec s;
  s.model = SizeModel::SubsetFactor;
  s.p = 50;
  s.subset_s = IndexSet::range(0, 20);
  s.sigma_s = numeric("a2_sigma_s.csv");
  s.w = numeric("a2_w.csv");
  s.mu = Vector::Zero(50);
  // The tabulated pattern is i mod 6, which is zero for every sixth factor.
  // A zero unique variance would make those variables exact linear
  // functions of X_S, so zeros are replaced by 6 to keep D positive.
  Vector d = numeric("a2_d_tilde.csv").col(0);
  for (Eigen::Index j = 0; j < d.size(); ++j)
    if (d(j) == 0.0) d(j) = 6.0;
  s.d_diag = signal_scale * d;
  if (mixed) {
    for (const auto& name : lines("a2_laws.csv")) s.laws.push_back(parse_factor_law(name));
  } else {
    s.laws.assign(30, FactorLaw::Gaussian);
  }
  s.validate();
  return s;
}

const std::vector<double>& a2_signal_grid() {
  static const std::vector<double> grid = {0.254, 0.812, 2.71, 9.2, 30.0};
  return grid;
}

}  // namespace csskit
