#include "v2xsim/l2s.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace v2xsim::l2s {

namespace {

struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch for the weight exp(-x^2).
GaussHermite gauss_hermite(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(k / 2.0);
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermite gh;
  for (int i = 0; i < n; ++i) {
    gh.nodes.push_back(solver.eigenvalues()(i));
    const double v0 = solver.eigenvectors()(0, i);
    gh.weights.push_back(std::sqrt(std::numbers::pi) * v0 * v0);
  }
  return gh;
}

const GaussHermite& cached_rule(int n) {
  static const GaussHermite rule64 = gauss_hermite(64);
  if (n == 64) return rule64;
  thread_local GaussHermite other;
  if (static_cast<int>(other.nodes.size()) != n) other = gauss_hermite(n);
  return other;
}

int modulation_slot(int order) {
  switch (order) {
    case 2: return 0;
    case 4: return 1;
    case 6: return 2;
    default: throw std::invalid_argument("unsupported modulation order " + std::to_string(order));
  }
}

}  // namespace

double bicm_missing_information(int modulation_order, double sinr_lin, int nodes) {
  modulation_slot(modulation_order);
  if (!(sinr_lin > 0.0)) return modulation_order;
  const int bits = modulation_order / 2;
  const int points = 1 << bits;
  const double d = std::sqrt(3.0 / (2.0 * (points * points - 1)));
  std::vector<double> amp(points);
  std::vector<int> label(points);
  for (int i = 0; i < points; ++i) {
    amp[i] = (2 * i - (points - 1)) * d;
    label[i] = i ^ (i >> 1);
  }
  const double sigma2 = 1.0 / (2.0 * sinr_lin);
  const double scale = std::sqrt(2.0 * sigma2);
  const GaussHermite& gh = cached_rule(nodes);

  std::vector<double> expo(points);
  double per_dim = 0.0;
  for (int i = 0; i < points; ++i) {
    for (std::size_t q = 0; q < gh.nodes.size(); ++q) {
      const double y = amp[i] + scale * gh.nodes[q];
      double peak = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < points; ++j) {
        expo[j] = -(y - amp[j]) * (y - amp[j]) / (2.0 * sigma2);
        peak = std::max(peak, expo[j]);
      }
      double loss = 0.0;
      for (int b = 0; b < bits; ++b) {
        const int own = (label[i] >> b) & 1;
        double same = 0.0;
        double other = 0.0;
        for (int j = 0; j < points; ++j) {
          const double e = std::exp(expo[j] - peak);
          if (((label[j] >> b) & 1) == own) {
            same += e;
          } else {
            other += e;
          }
        }
        loss += std::log1p(other / same);
      }
      per_dim += gh.weights[q] * loss;
    }
  }
  per_dim /= std::sqrt(std::numbers::pi) * points * std::numbers::ln2;
  return 2.0 * per_dim;
}

MiCurve MiCurve::bicm(int modulation_order) {
  MiCurve curve;
  curve.order_ = modulation_order;
  const double max_grid_db = 40.0;
  const int steps = static_cast<int>(std::lround((max_grid_db - curve.min_db_) / curve.step_db_));
  for (int i = 0; i <= steps; ++i) {
    const double db = curve.min_db_ + i * curve.step_db_;
    const double missing = bicm_missing_information(modulation_order, std::pow(10.0, db / 10.0));
    if (!(missing > 1e-280)) break;
    const double lm = std::log(missing);
    if (!curve.log_missing_.empty() && !(lm < curve.log_missing_.back())) break;
    curve.log_missing_.push_back(lm);
  }
  if (curve.log_missing_.size() < 2) throw std::logic_error("MiCurve: degenerate table");
  const std::size_t n = curve.log_missing_.size();
  curve.bottom_mi_ = modulation_order - std::exp(curve.log_missing_.front());
  const double top_lin = std::pow(10.0, curve.max_db() / 10.0);
  const double prev_lin = std::pow(10.0, (curve.max_db() - curve.step_db_) / 10.0);
  curve.top_slope_ = (curve.log_missing_[n - 1] - curve.log_missing_[n - 2]) / (top_lin - prev_lin);
  return curve;
}

double MiCurve::log_missing_at_db(double db) const {
  const double pos = (db - min_db_) / step_db_;
  const std::size_t last = log_missing_.size() - 1;
  if (pos <= 0.0) return log_missing_.front();
  if (pos >= static_cast<double>(last)) return log_missing_.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return log_missing_[i] + frac * (log_missing_[i + 1] - log_missing_[i]);
}

double MiCurve::log_missing_information(double sinr_lin) const {
  if (!(sinr_lin > 0.0)) return std::log(static_cast<double>(order_));
  const double db = 10.0 * std::log10(sinr_lin);
  if (db < min_db_) {
    const double min_lin = std::pow(10.0, min_db_ / 10.0);
    return std::log(order_ - bottom_mi_ * sinr_lin / min_lin);
  }
  if (db > max_db()) {
    const double top_lin = std::pow(10.0, max_db() / 10.0);
    return log_missing_.back() + top_slope_ * (sinr_lin - top_lin);
  }
  return log_missing_at_db(db);
}

double MiCurve::missing_information(double sinr_lin) const {
  return std::exp(log_missing_information(sinr_lin));
}

double MiCurve::mutual_information(double sinr_lin) const {
  return order_ - missing_information(sinr_lin);
}

double MiCurve::sinr_for_log_missing(double lm) const {
  if (lm >= std::log(static_cast<double>(order_))) return 0.0;
  if (lm >= log_missing_.front()) {
    const double min_lin = std::pow(10.0, min_db_ / 10.0);
    return min_lin * (order_ - std::exp(lm)) / bottom_mi_;
  }
  if (lm == -std::numeric_limits<double>::infinity()) return std::numeric_limits<double>::infinity();
  if (lm <= log_missing_.back()) {
    const double top_lin = std::pow(10.0, max_db() / 10.0);
    return top_lin + (lm - log_missing_.back()) / top_slope_;
  }
  // log_missing_ is strictly decreasing.
  const auto it = std::lower_bound(log_missing_.begin(), log_missing_.end(), lm,
                                   [](double a, double b) { return a > b; });
  const std::size_t i = static_cast<std::size_t>(it - log_missing_.begin());
  // log_missing_[i-1] > lm >= log_missing_[i]
  const double hi = log_missing_[i - 1];
  const double lo = log_missing_[i];
  const double frac = (hi - lm) / (hi - lo);
  const double db = min_db_ + (static_cast<double>(i - 1) + frac) * step_db_;
  return std::pow(10.0, db / 10.0);
}

double MiCurve::sinr_for_missing(double missing) const {
  if (!(missing > 0.0)) return std::numeric_limits<double>::infinity();
  return sinr_for_log_missing(std::log(missing));
}

double MiCurve::inverse(double mutual_information) const {
  return sinr_for_missing(order_ - mutual_information);
}

McsTable::McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("McsTable: no entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const McsEntry& e = entries_[i];
    if (e.cqi != static_cast<int>(i) + 1) {
      throw std::invalid_argument("McsTable: cqi indices must be 1..N in order");
    }
    modulation_slot(e.modulation_order);
    if (!(e.code_rate > 0.0 && e.code_rate < 1.0)) {
      throw std::invalid_argument("McsTable: code_rate must be in (0,1)");
    }
    if (!(e.slope_per_db > 0.0)) throw std::invalid_argument("McsTable: slope must be > 0");
    if (i > 0 && !(e.efficiency() > entries_[i - 1].efficiency())) {
      throw std::invalid_argument("McsTable: efficiency must increase with cqi");
    }
  }
}

McsTable McsTable::standard(const FerParams& params) {
  struct Row {
    int order;
    int rate_x1024;
  };
  static constexpr Row kRows[] = {{2, 78},  {2, 120}, {2, 193}, {2, 308}, {2, 449},
                                  {2, 602}, {4, 378}, {4, 490}, {4, 616}, {6, 466},
                                  {6, 567}, {6, 666}, {6, 772}, {6, 873}, {6, 948}};
  std::vector<McsEntry> entries;
  int cqi = 1;
  for (const Row& row : kRows) {
    McsEntry e;
    e.cqi = cqi++;
    e.modulation_order = row.order;
    e.code_rate = row.rate_x1024 / 1024.0;
    e.gamma50_db = 10.0 * std::log10(std::exp2(e.efficiency()) - 1.0) + params.gamma50_offset_db;
    e.slope_per_db = params.slope_per_db;
    entries.push_back(e);
  }
  return McsTable(std::move(entries));
}

McsTable McsTable::parse_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool header = false;
  std::vector<McsEntry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "cqi,mod_order,code_rate,gamma50_db,slope_per_db") {
        throw std::invalid_argument("MCS csv: unexpected header on line " + std::to_string(line_no));
      }
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) {
      throw std::invalid_argument("MCS csv: expected 5 fields on line " + std::to_string(line_no));
    }
    try {
      McsEntry e;
      e.cqi = std::stoi(fields[0]);
      e.modulation_order = std::stoi(fields[1]);
      e.code_rate = std::stod(fields[2]);
      e.gamma50_db = std::stod(fields[3]);
      e.slope_per_db = std::stod(fields[4]);
      entries.push_back(e);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("MCS csv: bad number on line " + std::to_string(line_no));
    }
  }
  if (!header) throw std::invalid_argument("MCS csv: empty file");
  return McsTable(std::move(entries));
}

McsTable McsTable::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open MCS table " + path);
  return parse_csv(in);
}

const McsEntry& McsTable::at(int cqi) const {
  if (cqi < 1 || cqi > size()) throw std::out_of_range("McsTable: cqi out of range");
  return entries_[static_cast<std::size_t>(cqi - 1)];
}

double frame_error_probability(double sinr_db, const McsEntry& mcs) {
  return 1.0 / (1.0 + std::exp(mcs.slope_per_db * (sinr_db - mcs.gamma50_db)));
}

long tb_size(int num_prbs, double efficiency) {
  if (num_prbs < 1) throw std::invalid_argument("tb_size: at least one PRB required");
  return static_cast<long>(
      std::floor(num_prbs * kSubcarriersPerPrb * kDataSymbolsPerTti * efficiency));
}

LinkToSystem::LinkToSystem(McsTable table, double fer_target)
    : table_(std::move(table)), fer_target_(fer_target) {
  if (!(fer_target > 0.0 && fer_target < 1.0)) {
    throw std::invalid_argument("fer_target must be in (0,1)");
  }
  curves_.push_back(MiCurve::bicm(2));
  curves_.push_back(MiCurve::bicm(4));
  curves_.push_back(MiCurve::bicm(6));
  for (const McsEntry& e : table_.entries()) {
    threshold_db_.push_back(e.gamma50_db + std::log((1.0 - fer_target_) / fer_target_) / e.slope_per_db);
  }
}

const MiCurve& LinkToSystem::curve(int modulation_order) const {
  return curves_[static_cast<std::size_t>(modulation_slot(modulation_order))];
}

double LinkToSystem::effective_sinr(std::span<const double> sinr_lin, int cqi) const {
  if (sinr_lin.empty()) throw std::invalid_argument("effective_sinr: empty allocation");
  const MiCurve& c = curve(table_.at(cqi).modulation_order);
  // Mean missing information, accumulated as a log-sum-exp so that deep
  // high-SINR tails do not underflow.
  thread_local std::vector<double> logs;
  logs.clear();
  double peak = -std::numeric_limits<double>::infinity();
  for (double s : sinr_lin) {
    logs.push_back(c.log_missing_information(s));
    peak = std::max(peak, logs.back());
  }
  double sum = 0.0;
  for (double lm : logs) sum += std::exp(lm - peak);
  return c.sinr_for_log_missing(peak + std::log(sum / static_cast<double>(sinr_lin.size())));
}

double LinkToSystem::fer(double sinr_eff_lin, int cqi) const {
  const double db = sinr_eff_lin > 0.0 ? 10.0 * std::log10(sinr_eff_lin)
                                       : -std::numeric_limits<double>::infinity();
  return frame_error_probability(db, table_.at(cqi));
}

int LinkToSystem::cqi_for_sinr(double sinr_lin) const {
  if (!(sinr_lin > 0.0)) return 0;
  const double db = 10.0 * std::log10(sinr_lin);
  for (int c = table_.size(); c >= 1; --c) {
    if (meets_target(db, c)) return c;
  }
  return 0;
}

CqiReport LinkToSystem::compute_cqi(std::span<const double> sinr_lin, long tti,
                                    int precoder) const {
  CqiReport report;
  report.generated_tti = tti;
  report.precoder = precoder;
  report.cqi.reserve(sinr_lin.size());
  for (double s : sinr_lin) report.cqi.push_back(static_cast<std::uint8_t>(cqi_for_sinr(s)));
  return report;
}

bool LinkToSystem::meets_target(double sinr_db, int cqi) const {
  // FER <= target, compared in dB so a SINR sitting on the threshold passes.
  return sinr_db >= threshold_db_[static_cast<std::size_t>(cqi - 1)] - 1e-9;
}

double LinkToSystem::cqi_sinr_lin(int cqi) const {
  if (cqi < 1) return 0.0;
  return std::pow(10.0, threshold_db_[static_cast<std::size_t>(cqi - 1)] / 10.0);
}

int LinkToSystem::select_mcs(std::span<const double> sinr_lin) const {
  if (sinr_lin.empty()) throw std::invalid_argument("select_mcs: empty allocation");
  for (int c = table_.size(); c >= 1; --c) {
    const double eff = effective_sinr(sinr_lin, c);
    if (eff > 0.0 && meets_target(10.0 * std::log10(eff), c)) return c;
  }
  return 0;
}

}  // namespace v2xsim::l2s
