#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "v2xsim/config.hpp"
#include "v2xsim/mac.hpp"

namespace v2xsim::engine {

struct SinrSample {
  int drop = 0;
  int rsu = 0;
  int vehicle = 0;
  long tti = 0;
  double sinr_db = 0.0;
};

struct VehicleRecord {
  int drop = 0;
  int vehicle = 0;
  int rsu = 0;  // RSU that served the vehicle for most of the drop
  double mean_thr_kbps = 0.0;
  bool outage = false;
  bool achieved_target = false;
};

/// Statistics of one drop, restricted to the measured RSUs.
struct DropMetrics {
  int drop = 0;
  std::uint64_t seed = 0;
  int num_vehicles = 0;
  double measured_vehicles_per_rsu = 0.0;
  long dropped_tbs = 0;
  long max_ledger_residual = 0;
  std::vector<SinrSample> sinr_samples;
  std::vector<VehicleRecord> vehicles;
};

/// Read-only view handed to observers for one RSU in one TTI.
struct TtiView {
  long tti = 0;
  int rsu = 0;
  const mac::ScheduleDecision* decision = nullptr;
  const std::vector<mac::TxOutcome>* outcomes = nullptr;  // null before transmission
  const mac::TrafficState* traffic = nullptr;
  const mac::RsuScheduler* scheduler = nullptr;
  std::span<const mac::CqiFeedback> feedback;
};

struct RunHooks {
  /// After scheduling, before transmission.
  std::function<void(const TtiView&)> on_schedule;
  /// After transmission and HARQ feedback.
  std::function<void(const TtiView&)> on_tti;
  /// Check the bit ledger of every vehicle each TTI (recorded in max_ledger_residual).
  bool check_ledger = false;
};

/// Seed of drop `index`: master_seed + index.
std::uint64_t drop_seed(const SimConfig& config, int drop_index);

DropMetrics run_drop(const SimConfig& config, int drop_index, const RunHooks* hooks = nullptr);

struct Cdf {
  std::vector<double> x;
  std::vector<double> p;  // (i + 1) / n
};

Cdf empirical_cdf(std::vector<double> values);

/// Linearly interpolated percentile, q in [0, 100]. Throws on empty input.
double percentile(std::vector<double> values, double q);

struct ResultsRow {
  std::string config_label;
  std::string receiver;
  double target_prob = 0.0;
  double cell_edge_kbps = 0.0;
  double outage_frac = 0.0;
  double mean_vehicles_per_rsu = 0.0;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<DropMetrics> drops;
  ResultsRow row;
  Cdf sinr_cdf;
  Cdf throughput_cdf;
};

ResultsRow aggregate(std::span<const DropMetrics> drops, const SimConfig& config,
                     const std::string& config_label, const std::string& receiver);

/// Runs every (experiment, drop) pair on a pool of `threads` workers. Output is
/// independent of the thread count.
std::vector<ExperimentResult> run_batch(const std::vector<ExperimentSpec>& experiments,
                                        int threads);

}  // namespace v2xsim::engine
