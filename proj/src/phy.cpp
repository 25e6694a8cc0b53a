#include "v2xsim/phy.hpp"

#include <cmath>
#include <stdexcept>

namespace v2xsim::phy {

double mrc_sinr(const CVector& h, std::span<const Interferer> interferers, double n0,
                double p_tx) {
  const double energy = h.squaredNorm();
  if (energy == 0.0) return 0.0;
  double leak = 0.0;
  for (const Interferer& i : interferers) leak += i.power * std::norm(h.dot(i.channel));
  return p_tx * energy * energy / (leak + energy * n0);
}

CMatrix interference_covariance(std::span<const Interferer> interferers, double n0,
                                Eigen::Index num_rx) {
  CMatrix r = CMatrix::Identity(num_rx, num_rx) * n0;
  for (const Interferer& i : interferers) r += i.power * i.channel * i.channel.adjoint();
  return r;
}

ReceiverWeights mrc_weights(const CMatrix& h) { return {h, ReceiverKind::kMrc}; }

ReceiverWeights lmmse_weights(const CMatrix& h, const CMatrix& cov, double p_tx) {
  Eigen::LLT<CMatrix> cov_check(cov);
  if (cov_check.info() != Eigen::Success) {
    throw std::domain_error("lmmse_weights: covariance is not positive definite");
  }
  const CMatrix total = p_tx * h * h.adjoint() + cov;
  Eigen::LLT<CMatrix> llt(total);
  return {llt.solve(h), ReceiverKind::kLmmse};
}

double sinr_with_weights(const CVector& w, const CVector& h, const CMatrix& cov, double p_tx) {
  const double noise = std::real(w.dot(cov * w));
  if (noise <= 0.0) return 0.0;
  return p_tx * std::norm(w.dot(h)) / noise;
}

double lmmse_sinr(const CVector& h, const CMatrix& cov, double p_tx) {
  Eigen::LLT<CMatrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("lmmse_sinr: covariance is not positive definite");
  }
  return p_tx * std::real(h.dot(llt.solve(h)));
}

std::complex<double> codebook_phase(int index) {
  static const std::array<std::complex<double>, 4> phases{
      std::complex<double>{1.0, 0.0}, std::complex<double>{-1.0, 0.0},
      std::complex<double>{0.0, 1.0}, std::complex<double>{0.0, -1.0}};
  return phases.at(static_cast<std::size_t>(index));
}

const std::array<CVector, 4>& codebook() {
  static const std::array<CVector, 4> book = [] {
    std::array<CVector, 4> b;
    for (int i = 0; i < 4; ++i) {
      b[i] = CVector(2);
      b[i] << 1.0, codebook_phase(i);
      b[i] /= std::sqrt(2.0);
    }
    return b;
  }();
  return book;
}

int select_precoder(std::span<const CMatrix> h_per_prb, std::span<const CMatrix> cov_per_prb,
                    double p_tx, ReceiverKind receiver) {
  if (h_per_prb.size() != cov_per_prb.size() || h_per_prb.empty()) {
    throw std::invalid_argument("select_precoder: mismatched or empty subband");
  }
  int best = 0;
  double best_metric = -1.0;
  for (int c = 0; c < 4; ++c) {
    double sum = 0.0;
    for (std::size_t p = 0; p < h_per_prb.size(); ++p) {
      const CVector h = h_per_prb[p] * codebook()[c];
      if (receiver == ReceiverKind::kLmmse) {
        sum += lmmse_sinr(h, cov_per_prb[p], p_tx);
      } else {
        sum += sinr_with_weights(h, h, cov_per_prb[p], p_tx);
      }
    }
    const double metric = sum / static_cast<double>(h_per_prb.size());
    if (metric > best_metric) {
      best_metric = metric;
      best = c;
    }
  }
  return best;
}

void VehicleChannels::reset(int rsus, int tx, int prbs) {
  num_rsus = rsus;
  num_tx = tx;
  num_prbs = prbs;
  const std::size_t n = static_cast<std::size_t>(rsus) * 2 * tx * prbs;
  re.assign(n, 0.0);
  im.assign(n, 0.0);
  rx_power.assign(static_cast<std::size_t>(rsus), 0.0);
  present.assign(static_cast<std::size_t>(rsus), false);
}

void SinrEvaluator::effective(const VehicleChannels& ch, int rsu, int rx,
                              const std::uint8_t* codewords, int fixed_codeword, double* re,
                              double* im) const {
  const int n = ch.num_prbs;
  if (ch.num_tx == 1) {
    const double* sr = ch.re_at(rsu, rx);
    const double* si = ch.im_at(rsu, rx);
    for (int p = 0; p < n; ++p) {
      re[p] = sr[p];
      im[p] = si[p];
    }
    return;
  }
  const double* ar = ch.re_at(rsu, rx * 2);
  const double* ai = ch.im_at(rsu, rx * 2);
  const double* br = ch.re_at(rsu, rx * 2 + 1);
  const double* bi = ch.im_at(rsu, rx * 2 + 1);
  const double scale = 1.0 / std::sqrt(2.0);
  for (int p = 0; p < n; ++p) {
    const std::complex<double> w =
        codebook_phase(codewords != nullptr ? codewords[p] : fixed_codeword);
    re[p] = scale * (ar[p] + w.real() * br[p] - w.imag() * bi[p]);
    im[p] = scale * (ai[p] + w.real() * bi[p] + w.imag() * br[p]);
  }
}

void SinrEvaluator::evaluate(const VehicleChannels& ch, int serving, int codeword,
                             std::span<const std::uint8_t> interferer_codewords,
                             double noise_power, ReceiverKind receiver, std::span<double> out) {
  const int n = ch.num_prbs;
  h_re_.resize(2 * static_cast<std::size_t>(n));
  h_im_.resize(h_re_.size());
  for (int rx = 0; rx < 2; ++rx) {
    effective(ch, serving, rx, nullptr, codeword, h_re_.data() + rx * n, h_im_.data() + rx * n);
  }

  std::vector<int> sources;
  for (int r = 0; r < ch.num_rsus; ++r) {
    if (r != serving && ch.present[r]) sources.push_back(r);
  }
  const std::size_t k = sources.size();
  g_re_.resize(2 * k * n);
  g_im_.resize(g_re_.size());
  powers_.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const int r = sources[i];
    powers_[i] = ch.rx_power[r];
    const std::uint8_t* cw = ch.num_tx == 2 ? interferer_codewords.data() + static_cast<std::size_t>(r) * n
                                            : nullptr;
    for (int rx = 0; rx < 2; ++rx) {
      const std::size_t off = (rx * k + i) * n;
      effective(ch, r, rx, cw, 0, g_re_.data() + off, g_im_.data() + off);
    }
  }

  kernels::TwoBranchLinks links;
  links.prbs = static_cast<std::size_t>(n);
  links.interferers = k;
  links.h0_re = h_re_.data();
  links.h0_im = h_im_.data();
  links.h1_re = h_re_.data() + n;
  links.h1_im = h_im_.data() + n;
  links.desired_power = ch.rx_power[serving];
  links.g0_re = g_re_.data();
  links.g0_im = g_im_.data();
  links.g1_re = g_re_.data() + k * n;
  links.g1_im = g_im_.data() + k * n;
  links.interferer_power = powers_.data();
  links.noise_power = noise_power;
  if (receiver == ReceiverKind::kMrc) {
    kernels_->two_branch_sinr(links, out.data(), nullptr);
  } else {
    kernels_->two_branch_sinr(links, nullptr, out.data());
  }
}

int SinrEvaluator::select_and_evaluate(const VehicleChannels& ch, int serving,
                                       std::span<const std::uint8_t> interferer_codewords,
                                       double noise_power, ReceiverKind receiver,
                                       std::span<double> out) {
  if (ch.num_tx == 1) {
    evaluate(ch, serving, 0, interferer_codewords, noise_power, receiver, out);
    return 0;
  }
  const std::size_t n = static_cast<std::size_t>(ch.num_prbs);
  scratch_.resize(n);
  int best = 0;
  double best_metric = -1.0;
  for (int c = 0; c < 4; ++c) {
    evaluate(ch, serving, c, interferer_codewords, noise_power, receiver, scratch_);
    double sum = 0.0;
    for (double s : scratch_) sum += s;
    if (sum > best_metric) {
      best_metric = sum;
      best = c;
      std::copy(scratch_.begin(), scratch_.end(), out.begin());
    }
  }
  return best;
}

}  // namespace v2xsim::phy
