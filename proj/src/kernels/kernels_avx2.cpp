// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <numbers>

#include "v2xsim/kernels.hpp"

namespace v2xsim::kernels {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Taylor coefficients, enough for |y| <= pi/4 at double precision.
constexpr double kS3 = -1.0 / 6.0;
constexpr double kS5 = 1.0 / 120.0;
constexpr double kS7 = -1.0 / 5040.0;
constexpr double kS9 = 1.0 / 362880.0;
constexpr double kS11 = -1.0 / 39916800.0;
constexpr double kS13 = 1.0 / 6227020800.0;
constexpr double kS15 = -1.0 / 1307674368000.0;
constexpr double kC2 = -1.0 / 2.0;
constexpr double kC4 = 1.0 / 24.0;
constexpr double kC6 = -1.0 / 720.0;
constexpr double kC8 = 1.0 / 40320.0;
constexpr double kC10 = -1.0 / 3628800.0;
constexpr double kC12 = 1.0 / 479001600.0;
constexpr double kC14 = -1.0 / 87178291200.0;
constexpr double kC16 = 1.0 / 20922789888000.0;

// cos/sin of 2*pi*cycles, four lanes.
inline void sincos_cycles(__m256d cycles, __m256d& c_out, __m256d& s_out) {
  const int kRound = _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC;
  __m256d x = _mm256_sub_pd(cycles, _mm256_round_pd(cycles, kRound));
  const __m256d q = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(4.0)), kRound);
  x = _mm256_fnmadd_pd(q, _mm256_set1_pd(0.25), x);
  const __m256d y = _mm256_mul_pd(x, _mm256_set1_pd(kTwoPi));
  const __m256d y2 = _mm256_mul_pd(y, y);

  __m256d sp = _mm256_set1_pd(kS15);
  sp = _mm256_fmadd_pd(sp, y2, _mm256_set1_pd(kS13));
  sp = _mm256_fmadd_pd(sp, y2, _mm256_set1_pd(kS11));
  sp = _mm256_fmadd_pd(sp, y2, _mm256_set1_pd(kS9));
  sp = _mm256_fmadd_pd(sp, y2, _mm256_set1_pd(kS7));
  sp = _mm256_fmadd_pd(sp, y2, _mm256_set1_pd(kS5));
  sp = _mm256_fmadd_pd(sp, y2, _mm256_set1_pd(kS3));
  const __m256d s = _mm256_fmadd_pd(_mm256_mul_pd(sp, y2), y, y);

  __m256d cp = _mm256_set1_pd(kC16);
  cp = _mm256_fmadd_pd(cp, y2, _mm256_set1_pd(kC14));
  cp = _mm256_fmadd_pd(cp, y2, _mm256_set1_pd(kC12));
  cp = _mm256_fmadd_pd(cp, y2, _mm256_set1_pd(kC10));
  cp = _mm256_fmadd_pd(cp, y2, _mm256_set1_pd(kC8));
  cp = _mm256_fmadd_pd(cp, y2, _mm256_set1_pd(kC6));
  cp = _mm256_fmadd_pd(cp, y2, _mm256_set1_pd(kC4));
  cp = _mm256_fmadd_pd(cp, y2, _mm256_set1_pd(kC2));
  const __m256d c = _mm256_fmadd_pd(cp, y2, _mm256_set1_pd(1.0));

  // quadrant in 0..3
  const __m256d quad = _mm256_sub_pd(
      q, _mm256_mul_pd(_mm256_set1_pd(4.0),
                       _mm256_floor_pd(_mm256_mul_pd(q, _mm256_set1_pd(0.25)))));
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d three = _mm256_set1_pd(3.0);
  const __m256d is1 = _mm256_cmp_pd(quad, one, _CMP_EQ_OQ);
  const __m256d is2 = _mm256_cmp_pd(quad, two, _CMP_EQ_OQ);
  const __m256d is3 = _mm256_cmp_pd(quad, three, _CMP_EQ_OQ);
  const __m256d swap = _mm256_or_pd(is1, is3);
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  const __m256d cneg = _mm256_and_pd(_mm256_or_pd(is1, is2), sign_bit);
  const __m256d sneg = _mm256_and_pd(_mm256_or_pd(is2, is3), sign_bit);

  c_out = _mm256_xor_pd(_mm256_blendv_pd(c, s, swap), cneg);
  s_out = _mm256_xor_pd(_mm256_blendv_pd(s, c, swap), sneg);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void phasor_sum_avx2(const PhasorBatch& batch, double t, double* out_re,
                     double* out_im) {
  const std::size_t m = batch.per_group;
  const std::size_t groups = m == 0 ? 0 : batch.freq_hz.size() / m;
  const __m256d tv = _mm256_set1_pd(t);
  const double* f = batch.freq_hz.data();
  const double* ph = batch.phase_cycles.data();
  for (std::size_t g = 0; g < groups; ++g) {
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    std::size_t k = g * m;
    const std::size_t end = (g + 1) * m;
    for (; k + 4 <= end; k += 4) {
      const __m256d cyc =
          _mm256_fmadd_pd(_mm256_loadu_pd(f + k), tv, _mm256_loadu_pd(ph + k));
      __m256d c, s;
      sincos_cycles(cyc, c, s);
      acc_re = _mm256_add_pd(acc_re, c);
      acc_im = _mm256_add_pd(acc_im, s);
    }
    double re = hsum(acc_re);
    double im = hsum(acc_im);
    if (k < end) {
      alignas(32) double cyc[4] = {0.0, 0.0, 0.0, 0.0};
      const std::size_t rem = end - k;
      for (std::size_t i = 0; i < rem; ++i) cyc[i] = f[k + i] * t + ph[k + i];
      __m256d c, s;
      sincos_cycles(_mm256_load_pd(cyc), c, s);
      alignas(32) double cv[4];
      alignas(32) double sv[4];
      _mm256_store_pd(cv, c);
      _mm256_store_pd(sv, s);
      for (std::size_t i = 0; i < rem; ++i) {
        re += cv[i];
        im += sv[i];
      }
    }
    out_re[g] = re;
    out_im[g] = im;
  }
}

void freq_response_avx2(const double* tap_re, const double* tap_im,
                        const SteeringTable& steer, double* out_re,
                        double* out_im) {
  const std::size_t n = steer.prbs;
  std::size_t p = 0;
  for (; p + 4 <= n; p += 4) {
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    for (std::size_t l = 0; l < steer.taps; ++l) {
      const __m256d sr = _mm256_loadu_pd(steer.re.data() + l * n + p);
      const __m256d si = _mm256_loadu_pd(steer.im.data() + l * n + p);
      const __m256d tr = _mm256_set1_pd(tap_re[l]);
      const __m256d ti = _mm256_set1_pd(tap_im[l]);
      acc_re = _mm256_fmadd_pd(tr, sr, acc_re);
      acc_re = _mm256_fnmadd_pd(ti, si, acc_re);
      acc_im = _mm256_fmadd_pd(tr, si, acc_im);
      acc_im = _mm256_fmadd_pd(ti, sr, acc_im);
    }
    _mm256_storeu_pd(out_re + p, acc_re);
    _mm256_storeu_pd(out_im + p, acc_im);
  }
  for (; p < n; ++p) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t l = 0; l < steer.taps; ++l) {
      const double sr = steer.re[l * n + p];
      const double si = steer.im[l * n + p];
      re += tap_re[l] * sr - tap_im[l] * si;
      im += tap_re[l] * si + tap_im[l] * sr;
    }
    out_re[p] = re;
    out_im[p] = im;
  }
}

inline __m256d load_tail(const double* src, std::size_t count) {
  alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < count; ++i) buf[i] = src[i];
  return _mm256_load_pd(buf);
}

inline __m256d load_lanes(const double* src, std::size_t count) {
  return count == 4 ? _mm256_loadu_pd(src) : load_tail(src, count);
}

inline void store_lanes(double* dst, __m256d v, std::size_t count) {
  if (count == 4) {
    _mm256_storeu_pd(dst, v);
    return;
  }
  alignas(32) double buf[4];
  _mm256_store_pd(buf, v);
  for (std::size_t i = 0; i < count; ++i) dst[i] = buf[i];
}

void two_branch_sinr_avx2(const TwoBranchLinks& in, double* mrc,
                          double* lmmse) {
  const std::size_t n = in.prbs;
  const __m256d n0 = _mm256_set1_pd(in.noise_power);
  const __m256d pd = _mm256_set1_pd(in.desired_power);
  const __m256d zero = _mm256_setzero_pd();
  for (std::size_t p = 0; p < n; p += 4) {
    const std::size_t lanes = n - p < 4 ? n - p : 4;
    const __m256d h0r = load_lanes(in.h0_re + p, lanes);
    const __m256d h0i = load_lanes(in.h0_im + p, lanes);
    const __m256d h1r = load_lanes(in.h1_re + p, lanes);
    const __m256d h1i = load_lanes(in.h1_im + p, lanes);
    __m256d r00 = n0;
    __m256d r11 = n0;
    __m256d r01r = zero;
    __m256d r01i = zero;
    __m256d leak = zero;
    for (std::size_t k = 0; k < in.interferers; ++k) {
      const std::size_t idx = k * n + p;
      const __m256d pk = _mm256_set1_pd(in.interferer_power[k]);
      const __m256d g0r = load_lanes(in.g0_re + idx, lanes);
      const __m256d g0i = load_lanes(in.g0_im + idx, lanes);
      const __m256d g1r = load_lanes(in.g1_re + idx, lanes);
      const __m256d g1i = load_lanes(in.g1_im + idx, lanes);
      const __m256d e0 = _mm256_fmadd_pd(g0i, g0i, _mm256_mul_pd(g0r, g0r));
      const __m256d e1 = _mm256_fmadd_pd(g1i, g1i, _mm256_mul_pd(g1r, g1r));
      r00 = _mm256_fmadd_pd(pk, e0, r00);
      r11 = _mm256_fmadd_pd(pk, e1, r11);
      const __m256d cr = _mm256_fmadd_pd(g0i, g1i, _mm256_mul_pd(g0r, g1r));
      const __m256d ci = _mm256_fmsub_pd(g0i, g1r, _mm256_mul_pd(g0r, g1i));
      r01r = _mm256_fmadd_pd(pk, cr, r01r);
      r01i = _mm256_fmadd_pd(pk, ci, r01i);
      __m256d hgr = _mm256_mul_pd(h0r, g0r);
      hgr = _mm256_fmadd_pd(h0i, g0i, hgr);
      hgr = _mm256_fmadd_pd(h1r, g1r, hgr);
      hgr = _mm256_fmadd_pd(h1i, g1i, hgr);
      __m256d hgi = _mm256_mul_pd(h0r, g0i);
      hgi = _mm256_fnmadd_pd(h0i, g0r, hgi);
      hgi = _mm256_fmadd_pd(h1r, g1i, hgi);
      hgi = _mm256_fnmadd_pd(h1i, g1r, hgi);
      const __m256d mag = _mm256_fmadd_pd(hgi, hgi, _mm256_mul_pd(hgr, hgr));
      leak = _mm256_fmadd_pd(pk, mag, leak);
    }
    const __m256d e0 = _mm256_fmadd_pd(h0i, h0i, _mm256_mul_pd(h0r, h0r));
    const __m256d e1 = _mm256_fmadd_pd(h1i, h1i, _mm256_mul_pd(h1r, h1r));
    const __m256d energy = _mm256_add_pd(e0, e1);
    if (mrc != nullptr) {
      const __m256d num = _mm256_mul_pd(pd, _mm256_mul_pd(energy, energy));
      const __m256d den = _mm256_fmadd_pd(n0, energy, leak);
      const __m256d valid = _mm256_cmp_pd(energy, zero, _CMP_GT_OQ);
      const __m256d safe_den = _mm256_blendv_pd(_mm256_set1_pd(1.0), den, valid);
      const __m256d out = _mm256_and_pd(_mm256_div_pd(num, safe_den), valid);
      store_lanes(mrc + p, out, lanes);
    }
    if (lmmse != nullptr) {
      const __m256d det = _mm256_sub_pd(
          _mm256_mul_pd(r00, r11),
          _mm256_fmadd_pd(r01i, r01i, _mm256_mul_pd(r01r, r01r)));
      const __m256d tr = _mm256_fmadd_pd(h0i, r01i, _mm256_mul_pd(h0r, r01r));
      const __m256d ti = _mm256_fmsub_pd(h0r, r01i, _mm256_mul_pd(h0i, r01r));
      const __m256d cross = _mm256_fmsub_pd(tr, h1r, _mm256_mul_pd(ti, h1i));
      const __m256d quad = _mm256_fnmadd_pd(
          _mm256_set1_pd(2.0), cross,
          _mm256_fmadd_pd(r00, e1, _mm256_mul_pd(r11, e0)));
      store_lanes(lmmse + p, _mm256_div_pd(_mm256_mul_pd(pd, quad), det), lanes);
    }
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", &phasor_sum_avx2, &freq_response_avx2,
                                 &two_branch_sinr_avx2};
  return &table;
}

}  // namespace v2xsim::kernels
