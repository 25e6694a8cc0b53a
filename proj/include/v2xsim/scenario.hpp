#pragma once

#include <cstdint>
#include <vector>

#include "v2xsim/large_scale.hpp"

namespace v2xsim::scenario {

struct HighwayConfig {
  int num_lanes = 6;
  double lane_width_m = 4.0;
  double rsu_spacing_m = 1732.0;
  /// Distance from the nearest lane edge to the RSU row.
  double rsu_offset_m = 35.0;
  int num_rsus = 7;
  double speed_kmh = 140.0;
  double gap_min_m = 200.0;
  double gap_max_m = 300.0;
  double tx_power_dbm = 46.0;
  int tx_antennas = 1;
  int rx_antennas = 2;

  double road_length_m() const { return num_rsus * rsu_spacing_m; }
  double speed_mps() const { return speed_kmh / 3.6; }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Vehicle {
  int id = 0;
  int lane = 1;           // 1..num_lanes
  double position = 0.0;  // meters along the road, in [0, road_length)
  int direction = 1;      // +1 for the lower half of the lanes, -1 otherwise
  int serving_rsu = 0;
  int num_rx_antennas = 2;
};

struct Rsu {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  int num_tx_antennas = 1;
  double tx_power_dbm = 46.0;
};

struct ScenarioState {
  HighwayConfig config;
  std::vector<Rsu> rsus;
  std::vector<Vehicle> vehicles;
  double time_s = 0.0;
};

/// Lateral coordinate of a lane center; the RSU row sits at negative y.
double lane_center_y(const HighwayConfig& config, int lane);
double rsu_row_y(const HighwayConfig& config);

/// Shortest distance between an RSU and a vehicle on the torus road, meters.
double link_distance_m(const ScenarioState& state, int rsu, int vehicle);

/// Places RSUs and vehicles. Association uses distance-only path loss; the
/// caller re-associates once shadowing is drawn.
ScenarioState deploy(const HighwayConfig& config, std::uint64_t seed);

ScenarioState advance_mobility(const ScenarioState& state, double dt_s);

/// Serving RSU = argmax gain (= argmin path loss + shadowing), lowest id on ties.
ScenarioState associate(const ScenarioState& state, const LargeScaleMap& large_scale);

/// Vehicles per RSU for the deployment (total vehicles / num_rsus).
double vehicles_per_rsu(const ScenarioState& state);

}  // namespace v2xsim::scenario
