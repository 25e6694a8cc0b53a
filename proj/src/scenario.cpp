#include "v2xsim/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "v2xsim/channel.hpp"
#include "v2xsim/rng.hpp"

namespace v2xsim::scenario {

void HighwayConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (num_lanes < 1) fail("lanes must be >= 1");
  if (!(lane_width_m > 0.0)) fail("lane_width_m must be > 0");
  if (!(rsu_spacing_m > 0.0)) fail("rsu_spacing_m must be > 0");
  if (rsu_offset_m < 0.0) fail("rsu_offset_m must be >= 0");
  if (num_rsus < 1) fail("num_rsus must be >= 1");
  if (!(speed_kmh >= 0.0)) fail("speed_kmh must be >= 0");
  if (!(gap_min_m > 0.0)) fail("gap_min_m must be > 0");
  if (gap_min_m > gap_max_m) fail("gap_min_m must not exceed gap_max_m");
  if (tx_antennas != 1 && tx_antennas != 2) fail("tx_antennas must be 1 or 2");
  if (rx_antennas != 2) fail("rx_antennas must be 2");
}

double lane_center_y(const HighwayConfig& config, int lane) {
  const double half_road = 0.5 * config.num_lanes * config.lane_width_m;
  return -half_road + (lane - 0.5) * config.lane_width_m;
}

double rsu_row_y(const HighwayConfig& config) {
  return -0.5 * config.num_lanes * config.lane_width_m - config.rsu_offset_m;
}

double link_distance_m(const ScenarioState& state, int rsu, int vehicle) {
  const Rsu& r = state.rsus[rsu];
  const Vehicle& v = state.vehicles[vehicle];
  const double length = state.config.road_length_m();
  double dx = std::fmod(v.position - r.x, length);
  if (dx > 0.5 * length) dx -= length;
  if (dx < -0.5 * length) dx += length;
  const double dy = lane_center_y(state.config, v.lane) - r.y;
  return std::hypot(dx, dy);
}

ScenarioState deploy(const HighwayConfig& config, std::uint64_t seed) {
  config.validate();
  ScenarioState state;
  state.config = config;

  for (int i = 0; i < config.num_rsus; ++i) {
    state.rsus.push_back(Rsu{i, (i + 0.5) * config.rsu_spacing_m, rsu_row_y(config),
                             config.tx_antennas, config.tx_power_dbm});
  }

  Rng rng = make_rng(seed, Stream::kDeploy);
  const double length = config.road_length_m();
  std::uniform_real_distribution<double> start(0.0, config.gap_max_m);
  std::uniform_real_distribution<double> gap(config.gap_min_m, config.gap_max_m);
  int next_id = 0;
  for (int lane = 1; lane <= config.num_lanes; ++lane) {
    const int direction = lane <= config.num_lanes / 2 ? 1 : -1;
    for (double pos = start(rng); pos < length; pos += gap(rng)) {
      state.vehicles.push_back(
          Vehicle{next_id++, lane, pos, direction, 0, config.rx_antennas});
    }
  }

  LargeScaleMap distance_only(config.num_rsus, static_cast<int>(state.vehicles.size()));
  for (int r = 0; r < config.num_rsus; ++r) {
    for (int v = 0; v < distance_only.num_vehicles(); ++v) {
      distance_only.set_gain_db(
          r, v, -channel::path_loss_db(link_distance_m(state, r, v) / 1000.0));
    }
  }
  return associate(state, distance_only);
}

ScenarioState advance_mobility(const ScenarioState& state, double dt_s) {
  if (dt_s < 0.0) throw std::invalid_argument("advance_mobility: dt must be >= 0");
  ScenarioState next = state;
  const double length = state.config.road_length_m();
  const double step = state.config.speed_mps() * dt_s;
  for (Vehicle& v : next.vehicles) {
    double pos = std::fmod(v.position + v.direction * step, length);
    if (pos < 0.0) pos += length;
    v.position = pos;
  }
  next.time_s += dt_s;
  return next;
}

ScenarioState associate(const ScenarioState& state, const LargeScaleMap& large_scale) {
  ScenarioState next = state;
  for (Vehicle& v : next.vehicles) {
    int best = 0;
    double best_gain = large_scale.gain_db(0, v.id);
    for (int r = 1; r < large_scale.num_rsus(); ++r) {
      const double g = large_scale.gain_db(r, v.id);
      if (g > best_gain) {
        best_gain = g;
        best = r;
      }
    }
    v.serving_rsu = best;
  }
  return next;
}

double vehicles_per_rsu(const ScenarioState& state) {
  return static_cast<double>(state.vehicles.size()) / state.config.num_rsus;
}

}  // namespace v2xsim::scenario
