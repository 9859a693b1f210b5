#include "fragsim/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace fragsim {

namespace {
std::atomic<KernelMode> g_mode{KernelMode::Auto};
}

bool cpu_has_avx2() {
#if defined(FRAGSIM_HAVE_AVX2_LANE) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void set_kernel_mode(KernelMode mode) {
  if (mode == KernelMode::Avx2 && !cpu_has_avx2())
    throw std::runtime_error("kernel mode avx2 requested but CPU/build lacks AVX2+FMA");
  g_mode.store(mode);
}

KernelMode kernel_mode() { return g_mode.load(); }

const KernelSet& kernels() {
#if defined(FRAGSIM_HAVE_AVX2_LANE)
  switch (g_mode.load()) {
    case KernelMode::Scalar: return detail::kScalarKernels;
    case KernelMode::Avx2: return detail::kAvx2Kernels;
    case KernelMode::Auto: break;
  }
  static const bool has = cpu_has_avx2();
  return has ? detail::kAvx2Kernels : detail::kScalarKernels;
#else
  return detail::kScalarKernels;
#endif
}

const char* kernel_mode_name() { return kernels().name; }

}  // namespace fragsim
