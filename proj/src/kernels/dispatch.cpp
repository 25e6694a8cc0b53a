#include <cstdlib>
#include <string_view>

#include "v2xsim/kernels.hpp"

namespace v2xsim::kernels {

#ifndef V2XSIM_HAVE_AVX2_TU
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("V2XSIM_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") {
      return scalar_table();
    }
    if (const KernelTable* simd = avx2_table(); simd != nullptr && cpu_has_avx2_fma()) {
      return *simd;
    }
    return scalar_table();
  }();
  return chosen;
}

}  // namespace v2xsim::kernels
