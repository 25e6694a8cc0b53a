#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace v2xsim::l2s {

inline constexpr int kSubcarriersPerPrb = 12;
inline constexpr int kDataSymbolsPerTti = 11;  // 14 minus 3 control/reference symbols

struct McsEntry {
  int cqi = 0;
  int modulation_order = 2;  // bits per symbol: 2, 4 or 6
  double code_rate = 0.0;
  double gamma50_db = 0.0;
  double slope_per_db = 2.0;

  double efficiency() const { return modulation_order * code_rate; }
};

struct FerParams {
  double slope_per_db = 2.0;
  double gamma50_offset_db = 0.5;
};

/// 15-entry CQI ladder with one logistic FER curve per entry.
class McsTable {
 public:
  explicit McsTable(std::vector<McsEntry> entries);

  /// Standard 15-level ladder (0.1523 ... 5.5547 bits/symbol), logistic
  /// midpoints placed `gamma50_offset_db` above the Shannon threshold.
  static McsTable standard(const FerParams& params = {});

  /// CSV with header `cqi,mod_order,code_rate,gamma50_db,slope_per_db`.
  static McsTable parse_csv(std::istream& in);
  static McsTable from_csv(const std::string& path);

  int size() const { return static_cast<int>(entries_.size()); }
  /// 1-based CQI index.
  const McsEntry& at(int cqi) const;
  const std::vector<McsEntry>& entries() const { return entries_; }

 private:
  std::vector<McsEntry> entries_;
};

/// BICM missing information m - I(snr) of Gray-mapped square QAM, computed
/// directly by Gauss-Hermite quadrature.
double bicm_missing_information(int modulation_order, double sinr_lin, int nodes = 64);

/// Tabulated BICM mutual information for one modulation on a 0.1 dB grid.
///
/// Stored as ln(m - I) so that the high-SINR tail stays strictly monotone;
/// beyond the grid the curve is extended log-linearly (top) and linearly in
/// mutual information (bottom).
class MiCurve {
 public:
  static MiCurve bicm(int modulation_order);

  int modulation_order() const { return order_; }
  double min_db() const { return min_db_; }
  double max_db() const { return min_db_ + step_db_ * (static_cast<double>(log_missing_.size()) - 1); }

  double mutual_information(double sinr_lin) const;
  double missing_information(double sinr_lin) const;
  /// ln(m - I); finite far beyond the range where m - I underflows.
  double log_missing_information(double sinr_lin) const;
  double sinr_for_log_missing(double log_missing) const;
  /// Linear SINR whose missing information equals `missing`.
  double sinr_for_missing(double missing) const;
  double inverse(double mutual_information) const;

 private:
  double log_missing_at_db(double db) const;

  int order_ = 2;
  double min_db_ = -20.0;
  double step_db_ = 0.1;
  std::vector<double> log_missing_;
  double bottom_mi_ = 0.0;
  double top_slope_ = 0.0;  // d ln(m - I) / d sinr_lin beyond the grid
};

/// Logistic FER at an effective SINR in dB.
double frame_error_probability(double sinr_db, const McsEntry& mcs);

/// floor(num_prbs * 12 * 11 * efficiency). Throws std::invalid_argument for num_prbs < 1.
long tb_size(int num_prbs, double efficiency);

struct CqiReport {
  long generated_tti = -1;
  std::vector<std::uint8_t> cqi;  // per PRB, 0 = out of range
  int precoder = 0;
};

class LinkToSystem {
 public:
  explicit LinkToSystem(McsTable table, double fer_target = 0.1);

  const McsTable& table() const { return table_; }
  const MiCurve& curve(int modulation_order) const;
  double fer_target() const { return fer_target_; }

  /// MIESM: I^{-1}(mean I(sinr)) with the modulation of `cqi`. Throws on empty input.
  double effective_sinr(std::span<const double> sinr_lin, int cqi) const;
  double fer(double sinr_eff_lin, int cqi) const;

  /// Highest CQI whose FER at this SINR is within the target, 0 if none.
  int cqi_for_sinr(double sinr_lin) const;
  CqiReport compute_cqi(std::span<const double> sinr_lin, long tti, int precoder = 0) const;

  /// SINR at which `cqi`'s FER equals the target (what a report of `cqi` implies).
  double cqi_sinr_lin(int cqi) const;

  /// Highest MCS meeting the FER target at the MIESM-effective SINR of the
  /// allocation, 0 if none.
  int select_mcs(std::span<const double> sinr_lin) const;

 private:
  bool meets_target(double sinr_db, int cqi) const;

  McsTable table_;
  double fer_target_;
  std::vector<MiCurve> curves_;  // QPSK, 16QAM, 64QAM
  std::vector<double> threshold_db_;
};

}  // namespace v2xsim::l2s
