#include "fragsim/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fragsim/kernels.hpp"
#include "fragsim/parallel.hpp"

namespace fragsim {

double markup_of_share(double s, double eta, double rho) {
  return 1.0 / (eta - (eta - rho) * s);
}

int feasible_n_eta1(std::span<const double> gamma, int limit, double rho) {
  const int m = std::min<int>(limit, static_cast<int>(gamma.size()));
  double inv_sum = 0.0;
  int best = 0;
  for (int n = 1; n <= m; ++n) {
    inv_sum += 1.0 / gamma[n - 1];
    if (gamma[n - 1] * inv_sum > n - (1.0 - rho)) best = n;
  }
  return best;
}

namespace {

void finalize(MarketEq& eq, std::span<const double> gamma, double eta, double rho) {
  const int n = eq.n;
  eq.rel_price.resize(n);
  eq.profit_coeff.resize(n);
  eq.hhi = kernels().sum_squares(eq.shares.data(), n);
  eq.omega_w = eta - (eta - rho) * eq.hhi;
  eq.tpow = std::pow(eq.g, rho / (1.0 - rho));
  double h = 0.0;
  for (int j = 0; j < n; ++j) {
    eq.rel_price[j] = eq.markups[j] / gamma[j];
    eq.profit_coeff[j] = (1.0 - 1.0 / eq.markups[j]) * eq.shares[j] * eq.tpow;
    h += eq.shares[j] / gamma[j];
  }
  eq.h = h;
}

}  // namespace

MarketEq solve_market_eta1(std::span<const double> gamma, double rho) {
  const int n = static_cast<int>(gamma.size());
  if (n < 1) throw DomainError("solve_market_eta1: empty market");
  MarketEq eq;
  eq.n = n;
  eq.shares.resize(n);
  eq.markups.resize(n);
  const double inv_sum = kernels().sum_reciprocal(gamma.data(), n);
  eq.g = (n - (1.0 - rho)) / inv_sum;
  for (int j = 0; j < n; ++j) {
    const double s = (1.0 - eq.g / gamma[j]) / (1.0 - rho);
    if (s < 0.0)
      throw InfeasibleShares("solve_market_eta1: firm " + std::to_string(j + 1) +
                             " has negative implied share (n too large)");
    eq.shares[j] = s;
    eq.markups[j] = markup_of_share(s, 1.0, rho);
  }
  finalize(eq, gamma, 1.0, rho);
  eq.foc_residual = 0.0;
  return eq;
}

namespace {

// One evaluation of the share map T(s) for the general-eta fixed point.
// lgamma_p[j] = (eta/(1-eta)) * log gamma_j precomputed by the caller.
void share_map(const double* lgamma_p, const double* s, double* x, double* buf, int n,
               double eta, double rho) {
  const double p = eta / (1.0 - eta);
  for (int j = 0; j < n; ++j) buf[j] = eta - (eta - rho) * s[j];  // 1/mu_j
  kernels().vlog(x, buf, n);
  for (int j = 0; j < n; ++j) buf[j] = lgamma_p[j] + p * x[j];
  kernels().vexp(x, buf, n);
  const double total = kernels().sum(x, n);
  for (int j = 0; j < n; ++j) x[j] /= total;
}

MarketEq from_shares(std::span<const double> gamma, double eta, double rho,
                     std::vector<double> shares, double resid) {
  const int n = static_cast<int>(gamma.size());
  MarketEq eq;
  eq.n = n;
  eq.shares = std::move(shares);
  eq.markups.resize(n);
  const double p = eta / (1.0 - eta);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    eq.markups[j] = markup_of_share(eq.shares[j], eta, rho);
    acc += std::pow(gamma[j] / eq.markups[j], p);
  }
  eq.g = std::pow(acc, 1.0 / p);
  finalize(eq, gamma, eta, rho);
  eq.foc_residual = resid;
  return eq;
}

MarketEq bisect_duopoly(std::span<const double> gamma, double eta, double rho) {
  // s1 in [1/2, 1); F(s1) = s1 - T1(s) is increasing through its root
  const double p = eta / (1.0 - eta);
  auto t1 = [&](double s1) {
    const double x1 = std::pow(gamma[0] * (eta - (eta - rho) * s1), p);
    const double x2 = std::pow(gamma[1] * (eta - (eta - rho) * (1.0 - s1)), p);
    return x1 / (x1 + x2);
  };
  double lo = 0.5, hi = 1.0 - 1e-12;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid - t1(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  const double s1 = 0.5 * (lo + hi);
  return from_shares(gamma, eta, rho, {s1, 1.0 - s1}, std::fabs(s1 - t1(s1)));
}

}  // namespace

MarketEq solve_market(std::span<const double> gamma, double eta, double rho,
                      const SolveOptions& opt) {
  const int n = static_cast<int>(gamma.size());
  if (n < 1) throw DomainError("solve_market: empty market");
  if (!(rho > 0.0 && rho < eta && eta < 1.0))
    throw DomainError("solve_market requires 0 < rho < eta < 1");
  if (n == 1) return from_shares(gamma, eta, rho, {1.0}, 0.0);

  std::vector<double> s(n), x(n), buf(n), lgp(n);
  const double p = eta / (1.0 - eta);
  kernels().vlog(lgp.data(), gamma.data(), n);
  for (int j = 0; j < n; ++j) lgp[j] *= p;
  if (opt.warm_start) std::copy(opt.warm_start, opt.warm_start + n, s.begin());
  else std::fill(s.begin(), s.end(), 1.0 / n);

  // The share map is steep when eta is close to 1 (exponent eta/(1-eta)), so
  // the damping backs off geometrically whenever progress stalls.
  double damping = opt.damping;
  double resid = std::numeric_limits<double>::infinity();
  const int stage = std::max(32, opt.max_iter / 12);
  for (int it = 0; it < opt.max_iter; ++it) {
    share_map(lgp.data(), s.data(), x.data(), buf.data(), n, eta, rho);
    resid = 0.0;
    for (int j = 0; j < n; ++j) resid = std::max(resid, std::fabs(x[j] - s[j]));
    if (resid < opt.tol) return from_shares(gamma, eta, rho, std::move(x), resid);
    if (it > 0 && it % stage == 0 && damping > 1.0 / 1024.0) damping *= 0.5;
    for (int j = 0; j < n; ++j) s[j] += damping * (x[j] - s[j]);
  }
  if (n == 2) return bisect_duopoly(gamma, eta, rho);
  throw NonConvergence("solve_market: no fixed point after " + std::to_string(opt.max_iter) +
                       " iterations (last residual " + std::to_string(resid) + ")");
}

MarketEq solve_market_auto(std::span<const double> gamma, const ParamSet& p,
                           const SolveOptions& opt) {
  if (p.eta == 1.0) return solve_market_eta1(gamma, p.rho);
  return solve_market(gamma, p.eta, p.rho, opt);
}

int market_n_star(std::span<const double> gamma, double c_i, double Theta, double Y,
                  const ParamSet& p) {
  if (!(Theta > 0.0 && Y > 0.0)) throw DomainError("market_n_star: Theta and Y must be positive");
  const int limit = p.eta == 1.0
                        ? feasible_n_eta1(gamma, std::min<int>(p.M, gamma.size()), p.rho)
                        : std::min<int>(p.M, static_cast<int>(gamma.size()));
  const double scale = std::pow(Theta, -p.rho / (1.0 - p.rho)) * Y;
  for (int n = limit; n >= 1; --n) {
    const MarketEq eq = solve_market_auto(gamma.subspan(0, n), p);
    if (eq.profit_coeff[n - 1] * scale >= c_i) return n;
  }
  return 0;
}

MarketTables build_market_tables(const TechnologySet& tech, const ParamSet& p) {
  MarketTables t;
  t.I = tech.I;
  t.M = tech.M;
  const std::size_t stride = tech.M + 1;
  t.tpow.assign(tech.I * stride, 0.0);
  t.omega_w.assign(tech.I * stride, 1.0);
  t.pihat.assign(tech.I * stride, -std::numeric_limits<double>::infinity());
  t.h.assign(tech.I * stride, 0.0);
  t.swmu.assign(tech.I * stride, 0.0);
  t.max_n.assign(tech.I, 0);

  std::vector<double> worst(parallel_threads(), 0.0);
  parallel_for(0, tech.I, [&](int i, int thread) {
    std::span<const double> row(tech.row(i), static_cast<std::size_t>(tech.M));
    const int cap = p.eta == 1.0 ? feasible_n_eta1(row, tech.M, p.rho) : tech.M;
    t.max_n[i] = static_cast<std::uint8_t>(cap);
    std::vector<double> warm;
    for (int n = cap; n >= 1; --n) {
      SolveOptions opt;
      if (static_cast<int>(warm.size()) == n) opt.warm_start = warm.data();
      const MarketEq eq = solve_market_auto(row.subspan(0, n), p, opt);
      const std::size_t k = t.at(i, n);
      t.tpow[k] = eq.tpow;
      t.omega_w[k] = eq.omega_w;
      t.pihat[k] = eq.profit_coeff[n - 1];
      t.h[k] = eq.h;
      t.swmu[k] = kernels().dot(eq.shares.data(), eq.markups.data(), n);
      worst[thread] = std::max(worst[thread], eq.foc_residual);
      // warm start for n-1: drop the last share, renormalize
      warm.assign(eq.shares.begin(), eq.shares.end() - (n > 1 ? 1 : 0));
      if (n > 1) {
        const double total = kernels().sum(warm.data(), warm.size());
        for (auto& v : warm) v /= total;
      }
    }
  });
  t.max_foc_residual = *std::max_element(worst.begin(), worst.end());
  return t;
}

}  // namespace fragsim
