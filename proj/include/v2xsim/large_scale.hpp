#pragma once

#include <cstddef>
#include <vector>

namespace v2xsim {

/// Per-link large-scale gain in dB (-(path loss + shadowing)), RSU-major.
class LargeScaleMap {
 public:
  LargeScaleMap() = default;
  LargeScaleMap(int num_rsus, int num_vehicles)
      : num_rsus_(num_rsus),
        num_vehicles_(num_vehicles),
        gain_db_(static_cast<std::size_t>(num_rsus) * num_vehicles, 0.0) {}

  int num_rsus() const { return num_rsus_; }
  int num_vehicles() const { return num_vehicles_; }

  double gain_db(int rsu, int vehicle) const { return gain_db_[index(rsu, vehicle)]; }
  void set_gain_db(int rsu, int vehicle, double g) { gain_db_[index(rsu, vehicle)] = g; }

  long last_update_ms = 0;

 private:
  std::size_t index(int rsu, int vehicle) const {
    return static_cast<std::size_t>(rsu) * num_vehicles_ + vehicle;
  }

  int num_rsus_ = 0;
  int num_vehicles_ = 0;
  std::vector<double> gain_db_;
};

}  // namespace v2xsim
