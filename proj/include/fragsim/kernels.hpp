#pragma once
// Runtime-dispatched arithmetic kernels for the hot inner loops.
//
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant selected at startup via cpuid. The two
// lanes are equivalence-tested against each other (tests/test_kernels.cpp);
// they are not bit-identical because reductions associate differently and
// the vector exp/log are polynomial approximations, so lane selection is
// part of a run's configuration (see kernel_mode_name in run manifests).

#include <cstddef>
#include <cstdint>

namespace fragsim {

enum class KernelMode { Auto, Scalar, Avx2 };

struct KernelSet {
  const char* name;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_reciprocal)(const double* x, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  // index of smallest / largest element; first occurrence wins ties
  std::size_t (*argmin)(const double* x, std::size_t n);
  std::size_t (*argmax)(const double* x, std::size_t n);
  void (*vexp)(double* dst, const double* src, std::size_t n);
  void (*vlog)(double* dst, const double* src, std::size_t n);
};

// Active kernel set. Defaults to Auto (AVX2 when the CPU supports it).
const KernelSet& kernels();
void set_kernel_mode(KernelMode mode);          // throws if Avx2 forced but unavailable
KernelMode kernel_mode();
const char* kernel_mode_name();
bool cpu_has_avx2();

namespace detail {
extern const KernelSet kScalarKernels;
#if defined(FRAGSIM_HAVE_AVX2_LANE)
extern const KernelSet kAvx2Kernels;
#endif
}  // namespace detail

}  // namespace fragsim
