#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fragsim/kernels.hpp"

using namespace fragsim;

namespace {

std::vector<double> random_vec(std::size_t n, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar reductions agree with plain loops") {
  const auto& k = detail::kScalarKernels;
  const auto x = random_vec(1037, 0.1, 10.0, 1);
  const auto y = random_vec(1037, -3.0, 3.0, 2);
  double s = 0, d = 0, r = 0, q = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += x[i];
    d += x[i] * y[i];
    r += 1.0 / x[i];
    q += x[i] * x[i];
  }
  CHECK(k.sum(x.data(), x.size()) == doctest::Approx(s).epsilon(1e-14));
  CHECK(k.dot(x.data(), y.data(), x.size()) == doctest::Approx(d).epsilon(1e-14));
  CHECK(k.sum_reciprocal(x.data(), x.size()) == doctest::Approx(r).epsilon(1e-14));
  CHECK(k.sum_squares(x.data(), x.size()) == doctest::Approx(q).epsilon(1e-14));
}

#if defined(__x86_64__)
TEST_CASE("avx2 lane equivalence" * doctest::skip(!cpu_has_avx2())) {
  const auto& sc = detail::kScalarKernels;
  set_kernel_mode(KernelMode::Avx2);
  const auto& av = kernels();
  REQUIRE(std::string(av.name) == "avx2");

  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 20u, 513u, 4096u}) {
    const auto x = random_vec(n, 0.05, 40.0, 10 + n);
    const auto y = random_vec(n, -2.0, 2.0, 20 + n);
    CHECK(av.sum(x.data(), n) == doctest::Approx(sc.sum(x.data(), n)).epsilon(1e-13));
    CHECK(av.dot(x.data(), y.data(), n) ==
          doctest::Approx(sc.dot(x.data(), y.data(), n)).epsilon(1e-13));
    CHECK(av.sum_reciprocal(x.data(), n) ==
          doctest::Approx(sc.sum_reciprocal(x.data(), n)).epsilon(1e-13));
    CHECK(av.sum_squares(x.data(), n) ==
          doctest::Approx(sc.sum_squares(x.data(), n)).epsilon(1e-13));
    CHECK(av.argmin(x.data(), n) == sc.argmin(x.data(), n));
    CHECK(av.argmax(x.data(), n) == sc.argmax(x.data(), n));
  }
  set_kernel_mode(KernelMode::Auto);
}

TEST_CASE("avx2 exp/log accuracy" * doctest::skip(!cpu_has_avx2())) {
  set_kernel_mode(KernelMode::Avx2);
  const auto& av = kernels();
  auto xs = random_vec(100000, -60.0, 60.0, 3);
  xs.push_back(0.0);
  xs.push_back(-700.0);
  xs.push_back(700.0);
  std::vector<double> out(xs.size());
  av.vexp(out.data(), xs.data(), xs.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    worst = std::max(worst, std::fabs(out[i] / std::exp(xs[i]) - 1.0));
  CHECK(worst < 5e-15);

  auto ys = random_vec(100000, 1e-8, 1e8, 4);
  ys.push_back(1.0);
  out.resize(ys.size());
  av.vlog(out.data(), ys.data(), ys.size());
  worst = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double ref = std::log(ys[i]);
    worst = std::max(worst, std::fabs(out[i] - ref) / std::max(1.0, std::fabs(ref)));
  }
  CHECK(worst < 1e-14);
  set_kernel_mode(KernelMode::Auto);
}

TEST_CASE("argmin/argmax ties resolve to the first occurrence") {
  std::vector<double> v(33, 5.0);
  v[7] = 1.0;
  v[21] = 1.0;  // tie with index 7
  CHECK(detail::kScalarKernels.argmin(v.data(), v.size()) == 7);
  v[7] = 5.0;
  v[21] = 5.0;
  v[3] = 9.0;
  v[30] = 9.0;
  CHECK(detail::kScalarKernels.argmax(v.data(), v.size()) == 3);
  if (cpu_has_avx2()) {
    set_kernel_mode(KernelMode::Avx2);
    v[3] = 5.0;
    v[30] = 5.0;
    v[7] = 1.0;
    v[21] = 1.0;
    CHECK(kernels().argmin(v.data(), v.size()) == 7);
    v[7] = 5.0;
    v[21] = 5.0;
    v[3] = 9.0;
    v[30] = 9.0;
    CHECK(kernels().argmax(v.data(), v.size()) == 3);
    set_kernel_mode(KernelMode::Auto);
  }
}
#endif
