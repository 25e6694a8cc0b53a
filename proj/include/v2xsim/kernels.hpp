#pragma once

// Data-parallel inner loops of the link-level pipeline.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The active table is chosen once at startup from the CPU
// features; V2XSIM_KERNELS=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace v2xsim::kernels {

/// Batch of sum-of-sinusoid phasors, grouped.
///
/// For every group g: out[g] = sum_m exp(j*2*pi*(freq[g*M+m]*t + phase[g*M+m]))
/// where M = per_group. Phases are in cycles.
struct PhasorBatch {
  std::span<const double> freq_hz;
  std::span<const double> phase_cycles;
  std::size_t per_group = 0;
};

/// Frequency response of a tapped delay line sampled on a PRB grid.
/// steer_* is tap-major: steer[l * prbs + p] = exp(-j*2*pi*f_p*tau_l).
struct SteeringTable {
  std::span<const double> re;
  std::span<const double> im;
  std::size_t taps = 0;
  std::size_t prbs = 0;
};

/// Two-branch receiver, K rank-one interferers, evaluated on P PRBs.
/// Channel arrays are PRB-contiguous; interferer arrays are interferer-major
/// (g0_re[k * P + p]).
struct TwoBranchLinks {
  std::size_t prbs = 0;
  std::size_t interferers = 0;
  const double* h0_re = nullptr;
  const double* h0_im = nullptr;
  const double* h1_re = nullptr;
  const double* h1_im = nullptr;
  double desired_power = 0.0;
  const double* g0_re = nullptr;
  const double* g0_im = nullptr;
  const double* g1_re = nullptr;
  const double* g1_im = nullptr;
  const double* interferer_power = nullptr;  // length = interferers
  double noise_power = 0.0;
};

struct KernelTable {
  std::string_view name;

  void (*phasor_sum)(const PhasorBatch& batch, double t, double* out_re,
                     double* out_im);

  void (*freq_response)(const double* tap_re, const double* tap_im,
                        const SteeringTable& steer, double* out_re,
                        double* out_im);

  // Post-combining SINR per PRB: MRC (w = h) and LMMSE (p h^H R^-1 h).
  // Either output may be null.
  void (*two_branch_sinr)(const TwoBranchLinks& links, double* mrc,
                          double* lmmse);
};

const KernelTable& scalar_table();
/// Null when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();
bool cpu_has_avx2_fma();

/// Table used by the simulator: AVX2 when available unless overridden.
const KernelTable& active();

}  // namespace v2xsim::kernels
