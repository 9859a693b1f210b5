// AVX2+FMA kernel lane. Compiled with -mavx2 -mfma; only dispatched to at
// runtime when cpuid reports AVX2 support.
//
// vexp/vlog follow the classic Cephes rational approximations (the same
// scheme used by most SIMD math libraries); accuracy vs libm is a few ulp,
// covered by the lane-equivalence tests.

#include "fragsim/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace fragsim {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double a_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

double a_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

double a_sum_reciprocal(const double* x, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_div_pd(one, _mm256_loadu_pd(x + i)));
  double r = hsum(acc);
  for (; i < n; ++i) r += 1.0 / x[i];
  return r;
}

double a_sum_squares(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

// First-occurrence tie semantics, matching the scalar lane.
std::size_t a_argmin(const double* x, std::size_t n) {
  if (n == 0) return 0;
  std::size_t i = 0;
  double bestv[4];
  long long besti[4];
  if (n >= 4) {
    __m256d bv = _mm256_loadu_pd(x);
    __m256i bi = _mm256_set_epi64x(3, 2, 1, 0);
    __m256i idx = bi;
    const __m256i four = _mm256_set1_epi64x(4);
    for (i = 4; i + 4 <= n; i += 4) {
      idx = _mm256_add_epi64(idx, four);
      __m256d v = _mm256_loadu_pd(x + i);
      __m256d lt = _mm256_cmp_pd(v, bv, _CMP_LT_OQ);
      bv = _mm256_blendv_pd(bv, v, lt);
      bi = _mm256_blendv_epi8(bi, idx, _mm256_castpd_si256(lt));
    }
    _mm256_storeu_pd(bestv, bv);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(besti), bi);
  } else {
    bestv[0] = x[0];
    besti[0] = 0;
    for (std::size_t k = 1; k < 4; ++k) { bestv[k] = bestv[0]; besti[k] = 0; }
    i = 1;
    for (; i < n; ++i)
      if (x[i] < bestv[0]) { bestv[0] = x[i]; besti[0] = (long long)i; }
    return (std::size_t)besti[0];
  }
  double v = bestv[0];
  long long bidx = besti[0];
  for (int k = 1; k < 4; ++k) {
    if (bestv[k] < v || (bestv[k] == v && besti[k] < bidx)) { v = bestv[k]; bidx = besti[k]; }
  }
  for (; i < n; ++i)
    if (x[i] < v) { v = x[i]; bidx = (long long)i; }
  return (std::size_t)bidx;
}

std::size_t a_argmax(const double* x, std::size_t n) {
  if (n == 0) return 0;
  std::size_t i = 0;
  double bestv[4];
  long long besti[4];
  if (n >= 4) {
    __m256d bv = _mm256_loadu_pd(x);
    __m256i bi = _mm256_set_epi64x(3, 2, 1, 0);
    __m256i idx = bi;
    const __m256i four = _mm256_set1_epi64x(4);
    for (i = 4; i + 4 <= n; i += 4) {
      idx = _mm256_add_epi64(idx, four);
      __m256d v = _mm256_loadu_pd(x + i);
      __m256d gt = _mm256_cmp_pd(v, bv, _CMP_GT_OQ);
      bv = _mm256_blendv_pd(bv, v, gt);
      bi = _mm256_blendv_epi8(bi, idx, _mm256_castpd_si256(gt));
    }
    _mm256_storeu_pd(bestv, bv);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(besti), bi);
  } else {
    double v = x[0];
    long long bidx = 0;
    for (i = 1; i < n; ++i)
      if (x[i] > v) { v = x[i]; bidx = (long long)i; }
    return (std::size_t)bidx;
  }
  double v = bestv[0];
  long long bidx = besti[0];
  for (int k = 1; k < 4; ++k) {
    if (bestv[k] > v || (bestv[k] == v && besti[k] < bidx)) { v = bestv[k]; bidx = besti[k]; }
  }
  for (; i < n; ++i)
    if (x[i] > v) { v = x[i]; bidx = (long long)i; }
  return (std::size_t)bidx;
}

// ---- vectorized exp (Cephes rational, base e)

inline __m256d exp4(__m256d x) {
  const __m256d hi_clamp = _mm256_set1_pd(709.436);
  const __m256d lo_clamp = _mm256_set1_pd(-708.396);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);

  x = _mm256_min_pd(x, hi_clamp);
  x = _mm256_max_pd(x, lo_clamp);

  // k = floor(x*log2e + 0.5)
  __m256d kd = _mm256_floor_pd(_mm256_fmadd_pd(x, log2e, half));
  // r = x - k*C1 - k*C2
  __m256d r = _mm256_fnmadd_pd(kd, c1, x);
  r = _mm256_fnmadd_pd(kd, c2, r);

  __m256d rr = _mm256_mul_pd(r, r);
  __m256d px = _mm256_fmadd_pd(p0, rr, p1);
  px = _mm256_fmadd_pd(px, rr, p2);
  px = _mm256_mul_pd(px, r);
  __m256d qx = _mm256_fmadd_pd(q0, rr, q1);
  qx = _mm256_fmadd_pd(qx, rr, q2);
  qx = _mm256_fmadd_pd(qx, rr, q3);
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, one);

  // scale by 2^k: add k to the exponent bits
  __m128i k32 = _mm256_cvtpd_epi32(kd);
  __m256i k64 = _mm256_cvtepi32_epi64(k32);
  __m256i bits = _mm256_castpd_si256(e);
  bits = _mm256_add_epi64(bits, _mm256_slli_epi64(k64, 52));
  return _mm256_castsi256_pd(bits);
}

void a_vexp(double* dst, const double* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, exp4(_mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] = std::exp(src[i]);
}

// ---- vectorized log (Cephes rational); defined for strictly positive input

inline __m256d log4(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d sqrth = _mm256_set1_pd(0.70710678118654752440);

  // frexp via bit twiddling: x = m * 2^e, m in [0.5, 1)
  __m256i bits = _mm256_castpd_si256(x);
  __m256i expo = _mm256_srli_epi64(bits, 52);
  expo = _mm256_and_si256(expo, _mm256_set1_epi64x(0x7FF));
  expo = _mm256_sub_epi64(expo, _mm256_set1_epi64x(1022));
  __m256i mant = _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll));
  mant = _mm256_or_si256(mant, _mm256_set1_epi64x(0x3FE0000000000000ll));
  __m256d m = _mm256_castsi256_pd(mant);

  // if m < sqrt(1/2): m *= 2, e -= 1
  __m256d lt = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
  m = _mm256_blendv_pd(m, _mm256_add_pd(m, m), lt);
  expo = _mm256_sub_epi64(expo, _mm256_and_si256(_mm256_castpd_si256(lt), _mm256_set1_epi64x(1)));

  // e as double (values are tiny ints; go through scalar-free conversion)
  // pack low 32 bits of each 64-bit lane
  alignas(32) long long etmp[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(etmp), expo);
  __m256d ed = _mm256_set_pd((double)etmp[3], (double)etmp[2], (double)etmp[1], (double)etmp[0]);

  __m256d z = _mm256_sub_pd(m, one);

  const __m256d P0 = _mm256_set1_pd(1.01875663804580931796e-4);
  const __m256d P1 = _mm256_set1_pd(4.97494994976747001425e-1);
  const __m256d P2 = _mm256_set1_pd(4.70579119878881725854e0);
  const __m256d P3 = _mm256_set1_pd(1.44989225341610930846e1);
  const __m256d P4 = _mm256_set1_pd(1.79368678507819816313e1);
  const __m256d P5 = _mm256_set1_pd(7.70838733755885391666e0);
  const __m256d Q1 = _mm256_set1_pd(1.12873587189167450590e1);
  const __m256d Q2 = _mm256_set1_pd(4.52279145837532221105e1);
  const __m256d Q3 = _mm256_set1_pd(8.29875266912776603211e1);
  const __m256d Q4 = _mm256_set1_pd(7.11544750618563894466e1);
  const __m256d Q5 = _mm256_set1_pd(2.31251620126765340583e1);

  __m256d p = _mm256_fmadd_pd(P0, z, P1);
  p = _mm256_fmadd_pd(p, z, P2);
  p = _mm256_fmadd_pd(p, z, P3);
  p = _mm256_fmadd_pd(p, z, P4);
  p = _mm256_fmadd_pd(p, z, P5);
  __m256d q = _mm256_add_pd(z, Q1);
  q = _mm256_fmadd_pd(q, z, Q2);
  q = _mm256_fmadd_pd(q, z, Q3);
  q = _mm256_fmadd_pd(q, z, Q4);
  q = _mm256_fmadd_pd(q, z, Q5);

  __m256d z2 = _mm256_mul_pd(z, z);
  __m256d y = _mm256_mul_pd(_mm256_mul_pd(z, z2), _mm256_div_pd(p, q));
  // y += e * (-2.121944400546905827679e-4); y -= 0.5*z^2
  y = _mm256_fmadd_pd(ed, _mm256_set1_pd(-2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(half, z2, y);
  // result = z + y + e*0.693359375
  __m256d res = _mm256_add_pd(z, y);
  res = _mm256_fmadd_pd(ed, _mm256_set1_pd(0.693359375), res);
  return res;
}

void a_vlog(double* dst, const double* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, log4(_mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] = std::log(src[i]);
}

}  // namespace

namespace detail {
const KernelSet kAvx2Kernels = {
    "avx2", a_sum, a_dot, a_sum_reciprocal, a_sum_squares,
    a_argmin, a_argmax, a_vexp, a_vlog,
};
}  // namespace detail

}  // namespace fragsim
