#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2xsim/channel.hpp"
#include "v2xsim/mac.hpp"
#include "v2xsim/phy.hpp"
#include "v2xsim/scenario.hpp"

namespace v2xsim {

struct PhyConfig {
  phy::ReceiverKind receiver = phy::ReceiverKind::kLmmse;
  bool precoding = false;
  /// Full-buffer interference from every other RSU; off leaves noise only.
  bool interference = true;
};

struct L2sConfig {
  double fer_target = 0.1;
  double fer_slope_per_db = 2.0;
  double gamma50_offset_db = 0.5;
  std::string mcs_table_csv;  // empty: built-in ladder
};

struct EngineConfig {
  int num_drops = 10;
  int ttis_per_drop = 2000;
  std::uint64_t master_seed = 1;
  std::vector<int> measured_rsus;  // empty: the middle RSU
  int large_scale_interval_ms = 100;
  double outage_kbps = 1.0;
  double target_fraction = 0.95;
};

struct SimConfig {
  scenario::HighwayConfig scenario;
  channel::ChannelConfig channel;
  PhyConfig phy;
  L2sConfig l2s;
  mac::MacConfig mac;
  EngineConfig engine;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  std::vector<int> measured_rsus() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
  std::string label;
  std::string config_label;  // density row, e.g. "[38 116]"
  SimConfig config;

  std::string receiver_label() const;
};

struct BatchConfig {
  SimConfig base;
  std::vector<ExperimentSpec> experiments;
};

/// Sets one `section.key` on a config. Throws ConfigError for unknown keys or bad values.
void apply_setting(SimConfig& config, const std::string& section, const std::string& key,
                   const std::string& value);

/// Sectioned key-value text: [scenario], [channel], [phy], [l2s], [mac],
/// [engine] and one [experiments.<label>] section per experiment.
BatchConfig parse_config(std::istream& in, const std::string& source = "<config>");
BatchConfig parse_config_file(const std::string& path);

std::string default_config_label(const SimConfig& config);
std::string receiver_label(const SimConfig& config);

}  // namespace v2xsim
