#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "v2xsim/kernels.hpp"
#include "v2xsim/large_scale.hpp"
#include "v2xsim/rng.hpp"
#include "v2xsim/scenario.hpp"

namespace v2xsim::channel {

/// Macro-to-relay path loss, d in kilometers. Throws std::domain_error for d <= 0.
double path_loss_db(double d_km);

struct ChannelConfig {
  double carrier_ghz = 2.0;
  double shadowing_sigma_db = 8.0;
  double decorr_m = 50.0;
  int num_taps = 6;
  /// Maximum excess delay; taps are spread uniformly over [0, delay_spread_us].
  double delay_spread_us = 2.5;
  double tap_decay_db = 3.0;
  double noise_figure_db = 9.0;
  int num_sinusoids = 16;

  void validate() const;
};

struct NoiseModel {
  double density_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  double prb_bandwidth_hz = 180000.0;
};

double noise_power_dbm(const NoiseModel& model);

struct OfdmGrid {
  int num_prbs = 50;
  double prb_bandwidth_hz = 180000.0;
  double tti_s = 1e-3;

  /// Offset of a PRB center from the carrier.
  double prb_center_offset_hz(int prb) const {
    return (prb - 0.5 * (num_prbs - 1)) * prb_bandwidth_hz;
  }
};

double doppler_hz(double speed_mps, double carrier_hz);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Log-normal shadowing per link, correlated along each vehicle's track
/// with an exponential autocorrelation exp(-d / decorr_m). Independent across RSUs.
class ShadowingField {
 public:
  ShadowingField(int num_rsus, int num_vehicles, double sigma_db, double decorr_m,
                 Rng& rng);

  /// AR(1) step for a common displacement of every vehicle.
  void advance(double displacement_m, Rng& rng);

  double value_db(int rsu, int vehicle) const {
    return values_[static_cast<std::size_t>(rsu) * num_vehicles_ + vehicle];
  }
  int num_rsus() const { return num_rsus_; }
  int num_vehicles() const { return num_vehicles_; }

 private:
  int num_rsus_;
  int num_vehicles_;
  double sigma_db_;
  double decorr_m_;
  std::vector<double> values_;
};

LargeScaleMap large_scale_map(const scenario::ScenarioState& state,
                              const ShadowingField& shadowing, long now_ms);

/// Advances shadowing by the displacement since the last update and returns
/// the refreshed gains for the current positions.
LargeScaleMap update_shadowing(ShadowingField& shadowing,
                               const scenario::ScenarioState& state,
                               double displacement_m, long now_ms, Rng& rng);

/// Tapped-delay-line Rayleigh fading with per-tap sum-of-sinusoids Doppler.
///
/// Coefficients are normalized to unit mean power per antenna pair; they are a
/// pure function of (seed, rsu, vehicle, tti, prb). Antenna pairs are
/// enumerated rx-major: pair = rx * num_tx + tx.
class FadingModel {
 public:
  FadingModel(const ChannelConfig& config, const OfdmGrid& grid, double speed_mps,
              std::uint64_t seed, int num_rsus, int num_vehicles, int num_rx, int num_tx);

  int num_rx() const { return num_rx_; }
  int num_tx() const { return num_tx_; }
  int num_pairs() const { return num_rx_ * num_tx_; }
  int num_taps() const { return num_taps_; }
  int num_prbs() const { return grid_.num_prbs; }
  double doppler_hz() const { return doppler_hz_; }
  const std::vector<double>& tap_powers() const { return tap_powers_; }
  const std::vector<double>& tap_delays_s() const { return tap_delays_s_; }

  /// Normalized tap coefficients, layout [pair][tap].
  void taps(int rsu, int vehicle, long tti, const kernels::KernelTable& k,
            double* re, double* im) const;

  /// Normalized per-PRB frequency response, layout [pair][prb].
  void response(int rsu, int vehicle, long tti, const kernels::KernelTable& k,
                double* re, double* im) const;

  /// Normalized Nr x Nt matrix at one PRB (reference path, std::complex math).
  Eigen::MatrixXcd matrix(int rsu, int vehicle, long tti, int prb) const;

 private:
  std::size_t link_offset(int rsu, int vehicle) const;

  OfdmGrid grid_;
  int num_rsus_;
  int num_vehicles_;
  int num_rx_;
  int num_tx_;
  int num_taps_;
  int num_sinusoids_;
  double doppler_hz_;
  std::vector<double> tap_powers_;
  std::vector<double> tap_delays_s_;
  std::vector<double> tap_scale_;  // sqrt(P_l / M)
  std::vector<double> freq_hz_;
  std::vector<double> phase_cycles_;
  std::vector<double> steer_re_;
  std::vector<double> steer_im_;
};

/// Nr x Nt channel at one PRB scaled so that E|h|^2 equals the linear large-scale gain.
Eigen::MatrixXcd generate_fading(const FadingModel& model, const LargeScaleMap& large_scale,
                                 int rsu, int vehicle, long tti, int prb);

}  // namespace v2xsim::channel
