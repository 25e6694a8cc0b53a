#include <cmath>
#include <numbers>

#include "v2xsim/kernels.hpp"

namespace v2xsim::kernels {
namespace {

void phasor_sum_scalar(const PhasorBatch& batch, double t, double* out_re,
                       double* out_im) {
  const std::size_t m = batch.per_group;
  const std::size_t groups = m == 0 ? 0 : batch.freq_hz.size() / m;
  for (std::size_t g = 0; g < groups; ++g) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = g * m; k < (g + 1) * m; ++k) {
      double cycles = batch.freq_hz[k] * t + batch.phase_cycles[k];
      cycles -= std::nearbyint(cycles);
      const double angle = 2.0 * std::numbers::pi * cycles;
      re += std::cos(angle);
      im += std::sin(angle);
    }
    out_re[g] = re;
    out_im[g] = im;
  }
}

void freq_response_scalar(const double* tap_re, const double* tap_im,
                          const SteeringTable& steer, double* out_re,
                          double* out_im) {
  const std::size_t n = steer.prbs;
  for (std::size_t p = 0; p < n; ++p) {
    out_re[p] = 0.0;
    out_im[p] = 0.0;
  }
  for (std::size_t l = 0; l < steer.taps; ++l) {
    const double* sr = steer.re.data() + l * n;
    const double* si = steer.im.data() + l * n;
    for (std::size_t p = 0; p < n; ++p) {
      out_re[p] += tap_re[l] * sr[p] - tap_im[l] * si[p];
      out_im[p] += tap_re[l] * si[p] + tap_im[l] * sr[p];
    }
  }
}

void two_branch_sinr_scalar(const TwoBranchLinks& in, double* mrc,
                            double* lmmse) {
  const std::size_t n = in.prbs;
  for (std::size_t p = 0; p < n; ++p) {
    const double h0r = in.h0_re[p], h0i = in.h0_im[p];
    const double h1r = in.h1_re[p], h1i = in.h1_im[p];
    double r00 = in.noise_power;
    double r11 = in.noise_power;
    double r01_re = 0.0;
    double r01_im = 0.0;
    double leak = 0.0;
    for (std::size_t k = 0; k < in.interferers; ++k) {
      const std::size_t idx = k * n + p;
      const double pk = in.interferer_power[k];
      const double g0r = in.g0_re[idx], g0i = in.g0_im[idx];
      const double g1r = in.g1_re[idx], g1i = in.g1_im[idx];
      r00 += pk * (g0r * g0r + g0i * g0i);
      r11 += pk * (g1r * g1r + g1i * g1i);
      // g0 * conj(g1)
      r01_re += pk * (g0r * g1r + g0i * g1i);
      r01_im += pk * (g0i * g1r - g0r * g1i);
      // h^H g
      const double hg_re = h0r * g0r + h0i * g0i + h1r * g1r + h1i * g1i;
      const double hg_im = h0r * g0i - h0i * g0r + h1r * g1i - h1i * g1r;
      leak += pk * (hg_re * hg_re + hg_im * hg_im);
    }
    const double e0 = h0r * h0r + h0i * h0i;
    const double e1 = h1r * h1r + h1i * h1i;
    const double energy = e0 + e1;
    if (mrc != nullptr) {
      mrc[p] = energy > 0.0
                   ? in.desired_power * energy * energy /
                         (in.noise_power * energy + leak)
                   : 0.0;
    }
    if (lmmse != nullptr) {
      const double det = r00 * r11 - (r01_re * r01_re + r01_im * r01_im);
      // Re(conj(h0) * r01 * h1)
      const double t_re = h0r * r01_re + h0i * r01_im;
      const double t_im = h0r * r01_im - h0i * r01_re;
      const double cross = t_re * h1r - t_im * h1i;
      const double quad = r11 * e0 + r00 * e1 - 2.0 * cross;
      lmmse[p] = in.desired_power * quad / det;
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &phasor_sum_scalar,
                                 &freq_response_scalar,
                                 &two_branch_sinr_scalar};
  return table;
}

}  // namespace v2xsim::kernels
