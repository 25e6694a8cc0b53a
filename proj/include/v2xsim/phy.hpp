#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "v2xsim/kernels.hpp"

namespace v2xsim::phy {

enum class ReceiverKind { kMrc, kLmmse };

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct Interferer {
  CVector channel;  // effective Nr x 1 channel (precoder applied)
  double power = 0.0;
};

/// MRC with w = h: p|h^H h|^2 / (sum_i p_i |h^H g_i|^2 + ||h||^2 n0). Zero channel gives 0.
double mrc_sinr(const CVector& h, std::span<const Interferer> interferers, double n0,
                double p_tx);

/// R = n0 I + sum_i p_i g_i g_i^H.
CMatrix interference_covariance(std::span<const Interferer> interferers, double n0,
                                Eigen::Index num_rx);

struct ReceiverWeights {
  CMatrix w;  // Nr x streams
  ReceiverKind kind = ReceiverKind::kMrc;
};

ReceiverWeights mrc_weights(const CMatrix& h);

/// W = (p H H^H + R)^{-1} H. Throws std::domain_error if the covariance is not
/// positive definite.
ReceiverWeights lmmse_weights(const CMatrix& h, const CMatrix& cov, double p_tx = 1.0);

/// p |w^H h|^2 / (w^H R w) for a single stream.
double sinr_with_weights(const CVector& w, const CVector& h, const CMatrix& cov, double p_tx);

/// Closed form of the LMMSE post-combining SINR: p h^H R^{-1} h.
double lmmse_sinr(const CVector& h, const CMatrix& cov, double p_tx);

/// Rank-1 two-antenna codebook: (1/sqrt 2)[1, 1], [1, -1], [1, j], [1, -j].
const std::array<CVector, 4>& codebook();
std::complex<double> codebook_phase(int index);

/// Best codeword by mean post-combining SINR over the subband; lowest index on ties.
int select_precoder(std::span<const CMatrix> h_per_prb, std::span<const CMatrix> cov_per_prb,
                    double p_tx, ReceiverKind receiver = ReceiverKind::kLmmse);

/// Normalized frequency responses for every RSU as seen by one two-antenna vehicle.
struct VehicleChannels {
  int num_rsus = 0;
  int num_tx = 1;
  int num_prbs = 0;
  std::vector<double> re;  // [rsu][pair][prb], pair = rx * num_tx + tx
  std::vector<double> im;
  std::vector<double> rx_power;  // per RSU: per-PRB transmit power x large-scale gain
  std::vector<bool> present;     // links that were evaluated

  void reset(int rsus, int tx, int prbs);
  double* re_at(int rsu, int pair) { return re.data() + offset(rsu, pair); }
  double* im_at(int rsu, int pair) { return im.data() + offset(rsu, pair); }
  const double* re_at(int rsu, int pair) const { return re.data() + offset(rsu, pair); }
  const double* im_at(int rsu, int pair) const { return im.data() + offset(rsu, pair); }

 private:
  std::size_t offset(int rsu, int pair) const {
    return (static_cast<std::size_t>(rsu) * 2 * num_tx + pair) * num_prbs;
  }
};

/// Per-PRB SINR of a two-branch receiver under full-buffer interference.
class SinrEvaluator {
 public:
  explicit SinrEvaluator(const kernels::KernelTable& kernels) : kernels_(&kernels) {}

  /// interferer_codewords is [rsu][prb]; ignored for single-antenna RSUs.
  /// Links not marked present contribute no interference.
  void evaluate(const VehicleChannels& ch, int serving, int codeword,
                std::span<const std::uint8_t> interferer_codewords, double noise_power,
                ReceiverKind receiver, std::span<double> out);

  /// Best codeword by mean SINR (ties to lowest); fills `out` with its SINR.
  int select_and_evaluate(const VehicleChannels& ch, int serving,
                          std::span<const std::uint8_t> interferer_codewords,
                          double noise_power, ReceiverKind receiver, std::span<double> out);

 private:
  void effective(const VehicleChannels& ch, int rsu, int rx, const std::uint8_t* codewords,
                 int fixed_codeword, double* re, double* im) const;

  const kernels::KernelTable* kernels_;
  std::vector<double> h_re_, h_im_, g_re_, g_im_, powers_, scratch_;
};

}  // namespace v2xsim::phy
