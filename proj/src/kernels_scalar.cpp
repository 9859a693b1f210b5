#include "fragsim/kernels.hpp"

#include <cmath>

namespace fragsim {
namespace {

double s_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double s_dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double s_sum_reciprocal(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += 1.0 / x[i];
  return acc;
}

double s_sum_squares(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

std::size_t s_argmin(const double* x, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] < x[best]) best = i;
  return best;
}

std::size_t s_argmax(const double* x, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > x[best]) best = i;
  return best;
}

void s_vexp(double* dst, const double* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::exp(src[i]);
}

void s_vlog(double* dst, const double* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::log(src[i]);
}

}  // namespace

namespace detail {
const KernelSet kScalarKernels = {
    "scalar", s_sum, s_dot, s_sum_reciprocal, s_sum_squares,
    s_argmin, s_argmax, s_vexp, s_vlog,
};
}  // namespace detail

}  // namespace fragsim
