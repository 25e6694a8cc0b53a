#include "v2xsim/channel.hpp"

#include <numbers>
#include <stdexcept>

namespace v2xsim::channel {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
}

double path_loss_db(double d_km) {
  if (!(d_km > 0.0)) throw std::domain_error("path_loss_db: distance must be > 0");
  return 100.7 + 23.5 * std::log10(d_km);
}

void ChannelConfig::validate() const {
  if (!(carrier_ghz > 0.0)) throw std::invalid_argument("carrier_ghz must be > 0");
  if (shadowing_sigma_db < 0.0) throw std::invalid_argument("shadowing_sigma_db must be >= 0");
  if (!(decorr_m > 0.0)) throw std::invalid_argument("decorr_m must be > 0");
  if (num_taps < 1) throw std::invalid_argument("num_taps must be >= 1");
  if (delay_spread_us < 0.0) throw std::invalid_argument("delay_spread_us must be >= 0");
  if (num_sinusoids < 1) throw std::invalid_argument("num_sinusoids must be >= 1");
}

double noise_power_dbm(const NoiseModel& model) {
  return model.density_dbm_hz + 10.0 * std::log10(model.prb_bandwidth_hz) +
         model.noise_figure_db;
}

double doppler_hz(double speed_mps, double carrier_hz) {
  return speed_mps * carrier_hz / kSpeedOfLight;
}

ShadowingField::ShadowingField(int num_rsus, int num_vehicles, double sigma_db,
                               double decorr_m, Rng& rng)
    : num_rsus_(num_rsus),
      num_vehicles_(num_vehicles),
      sigma_db_(sigma_db),
      decorr_m_(decorr_m),
      values_(static_cast<std::size_t>(num_rsus) * num_vehicles, 0.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& s : values_) s = sigma_db_ * normal(rng);
}

void ShadowingField::advance(double displacement_m, Rng& rng) {
  const double rho = std::exp(-std::abs(displacement_m) / decorr_m_);
  const double innovation = sigma_db_ * std::sqrt(1.0 - rho * rho);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& s : values_) s = rho * s + innovation * normal(rng);
}

LargeScaleMap large_scale_map(const scenario::ScenarioState& state,
                              const ShadowingField& shadowing, long now_ms) {
  const int num_rsus = static_cast<int>(state.rsus.size());
  const int num_vehicles = static_cast<int>(state.vehicles.size());
  LargeScaleMap map(num_rsus, num_vehicles);
  for (int r = 0; r < num_rsus; ++r) {
    for (int v = 0; v < num_vehicles; ++v) {
      const double d_km = scenario::link_distance_m(state, r, v) / 1000.0;
      map.set_gain_db(r, v, -path_loss_db(d_km) - shadowing.value_db(r, v));
    }
  }
  map.last_update_ms = now_ms;
  return map;
}

LargeScaleMap update_shadowing(ShadowingField& shadowing,
                               const scenario::ScenarioState& state,
                               double displacement_m, long now_ms, Rng& rng) {
  shadowing.advance(displacement_m, rng);
  return large_scale_map(state, shadowing, now_ms);
}

FadingModel::FadingModel(const ChannelConfig& config, const OfdmGrid& grid,
                         double speed_mps, std::uint64_t seed, int num_rsus,
                         int num_vehicles, int num_rx, int num_tx)
    : grid_(grid),
      num_rsus_(num_rsus),
      num_vehicles_(num_vehicles),
      num_rx_(num_rx),
      num_tx_(num_tx),
      num_taps_(config.num_taps),
      num_sinusoids_(config.num_sinusoids),
      doppler_hz_(channel::doppler_hz(speed_mps, config.carrier_ghz * 1e9)) {
  config.validate();
  double total = 0.0;
  for (int l = 0; l < num_taps_; ++l) {
    tap_powers_.push_back(db_to_linear(-config.tap_decay_db * l));
    total += tap_powers_.back();
    tap_delays_s_.push_back(num_taps_ == 1 ? 0.0
                                           : config.delay_spread_us * 1e-6 * l / (num_taps_ - 1));
  }
  for (double& p : tap_powers_) {
    p /= total;
    tap_scale_.push_back(std::sqrt(p / num_sinusoids_));
  }

  const int prbs = grid_.num_prbs;
  steer_re_.resize(static_cast<std::size_t>(num_taps_) * prbs);
  steer_im_.resize(steer_re_.size());
  for (int l = 0; l < num_taps_; ++l) {
    for (int p = 0; p < prbs; ++p) {
      const double angle =
          -2.0 * std::numbers::pi * grid_.prb_center_offset_hz(p) * tap_delays_s_[l];
      steer_re_[static_cast<std::size_t>(l) * prbs + p] = std::cos(angle);
      steer_im_[static_cast<std::size_t>(l) * prbs + p] = std::sin(angle);
    }
  }

  const std::size_t per_link = static_cast<std::size_t>(num_pairs()) * num_taps_ * num_sinusoids_;
  freq_hz_.resize(per_link * num_rsus_ * num_vehicles_);
  phase_cycles_.resize(freq_hz_.size());
  const double m = num_sinusoids_;
  for (int r = 0; r < num_rsus_; ++r) {
    for (int v = 0; v < num_vehicles_; ++v) {
      Rng rng(hash_key({seed, static_cast<std::uint64_t>(Stream::kFading),
                        static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(v)}));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const std::size_t base = link_offset(r, v);
      for (std::size_t g = 0; g < per_link / num_sinusoids_; ++g) {
        for (int k = 0; k < num_sinusoids_; ++k) {
          // Stratified arrival angles; each sinusoid gets its own jitter.
          const double alpha = 2.0 * std::numbers::pi * (k + unit(rng)) / m;
          const std::size_t idx = base + g * num_sinusoids_ + k;
          freq_hz_[idx] = doppler_hz_ * std::cos(alpha);
          phase_cycles_[idx] = unit(rng);
        }
      }
    }
  }
}

std::size_t FadingModel::link_offset(int rsu, int vehicle) const {
  if (rsu < 0 || rsu >= num_rsus_ || vehicle < 0 || vehicle >= num_vehicles_) {
    throw std::out_of_range("FadingModel: link index out of range");
  }
  const std::size_t per_link = static_cast<std::size_t>(num_pairs()) * num_taps_ * num_sinusoids_;
  return (static_cast<std::size_t>(rsu) * num_vehicles_ + vehicle) * per_link;
}

void FadingModel::taps(int rsu, int vehicle, long tti, const kernels::KernelTable& k,
                       double* re, double* im) const {
  const std::size_t base = link_offset(rsu, vehicle);
  const std::size_t count = static_cast<std::size_t>(num_pairs()) * num_taps_ * num_sinusoids_;
  kernels::PhasorBatch batch{
      std::span<const double>(freq_hz_.data() + base, count),
      std::span<const double>(phase_cycles_.data() + base, count),
      static_cast<std::size_t>(num_sinusoids_)};
  k.phasor_sum(batch, static_cast<double>(tti) * grid_.tti_s, re, im);
  for (int pair = 0; pair < num_pairs(); ++pair) {
    for (int l = 0; l < num_taps_; ++l) {
      re[pair * num_taps_ + l] *= tap_scale_[l];
      im[pair * num_taps_ + l] *= tap_scale_[l];
    }
  }
}

void FadingModel::response(int rsu, int vehicle, long tti, const kernels::KernelTable& k,
                           double* re, double* im) const {
  const std::size_t groups = static_cast<std::size_t>(num_pairs()) * num_taps_;
  double tap_re[64];
  double tap_im[64];
  std::vector<double> heap_re, heap_im;
  double* tr = tap_re;
  double* ti = tap_im;
  if (groups > 64) {
    heap_re.resize(groups);
    heap_im.resize(groups);
    tr = heap_re.data();
    ti = heap_im.data();
  }
  taps(rsu, vehicle, tti, k, tr, ti);
  const kernels::SteeringTable steer{steer_re_, steer_im_,
                                     static_cast<std::size_t>(num_taps_),
                                     static_cast<std::size_t>(grid_.num_prbs)};
  for (int pair = 0; pair < num_pairs(); ++pair) {
    k.freq_response(tr + pair * num_taps_, ti + pair * num_taps_, steer,
                    re + static_cast<std::size_t>(pair) * grid_.num_prbs,
                    im + static_cast<std::size_t>(pair) * grid_.num_prbs);
  }
}

Eigen::MatrixXcd FadingModel::matrix(int rsu, int vehicle, long tti, int prb) const {
  using cd = std::complex<double>;
  const std::size_t base = link_offset(rsu, vehicle);
  const double t = static_cast<double>(tti) * grid_.tti_s;
  const double f = grid_.prb_center_offset_hz(prb);
  Eigen::MatrixXcd h(num_rx_, num_tx_);
  for (int rx = 0; rx < num_rx_; ++rx) {
    for (int tx = 0; tx < num_tx_; ++tx) {
      const int pair = rx * num_tx_ + tx;
      cd acc{0.0, 0.0};
      for (int l = 0; l < num_taps_; ++l) {
        cd tap{0.0, 0.0};
        for (int m = 0; m < num_sinusoids_; ++m) {
          const std::size_t idx =
              base + (static_cast<std::size_t>(pair) * num_taps_ + l) * num_sinusoids_ + m;
          tap += std::polar(1.0, 2.0 * std::numbers::pi * (freq_hz_[idx] * t + phase_cycles_[idx]));
        }
        acc += tap * tap_scale_[l] *
               std::polar(1.0, -2.0 * std::numbers::pi * f * tap_delays_s_[l]);
      }
      h(rx, tx) = acc;
    }
  }
  return h;
}

Eigen::MatrixXcd generate_fading(const FadingModel& model, const LargeScaleMap& large_scale,
                                 int rsu, int vehicle, long tti, int prb) {
  const double amplitude = std::sqrt(db_to_linear(large_scale.gain_db(rsu, vehicle)));
  return model.matrix(rsu, vehicle, tti, prb) * amplitude;
}

}  // namespace v2xsim::channel
