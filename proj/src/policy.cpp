#include "fragsim/policy.hpp"

#include <algorithm>
#include <cmath>

#include "fragsim/parallel.hpp"

namespace fragsim {

double ghh_bundle(const ParamSet& p, double C, double W) {
  return C - std::pow(W, (1.0 + p.nu) / p.nu) / (1.0 + p.nu);
}

double ghh_utility(const ParamSet& p, double C, double W) {
  const double b = ghh_bundle(p, C, W);
  if (!(b > 0.0)) throw DomainError("ghh_utility: nonpositive consumption bundle");
  if (p.psi == 1.0) return std::log(b);
  return (std::pow(b, 1.0 - p.psi) - 1.0) / (1.0 - p.psi);
}

namespace {

double interp1(const std::vector<double>& xs, const double* ys, double x, bool* clamped) {
  const int n = static_cast<int>(xs.size());
  if (n == 1) return ys[0];
  if (x <= xs.front()) {
    if (clamped && x < xs.front()) *clamped = true;
    return ys[0];
  }
  if (x >= xs.back()) {
    if (clamped && x > xs.back()) *clamped = true;
    return ys[n - 1];
  }
  const int lo =
      static_cast<int>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  const double t = (x - xs[lo]) / (xs[lo + 1] - xs[lo]);
  return (1.0 - t) * ys[lo] + t * ys[lo + 1];
}

}  // namespace

double SavingsPolicy::interp_K(const std::vector<double>& K_grid, double K, int ia) const {
  return interp1(K_grid, s.data() + static_cast<std::size_t>(ia) * nK, K, nullptr);
}

double SavingsPolicy::interp(const std::vector<double>& K_grid,
                             const std::vector<double>& logA_grid, double K, double logA) const {
  if (nA == 1) return interp_K(K_grid, K, 0);
  if (logA <= logA_grid.front()) return interp_K(K_grid, K, 0);
  if (logA >= logA_grid.back()) return interp_K(K_grid, K, nA - 1);
  const int lo = static_cast<int>(std::upper_bound(logA_grid.begin(), logA_grid.end(), logA) -
                                  logA_grid.begin()) - 1;
  const double t = (logA - logA_grid[lo]) / (logA_grid[lo + 1] - logA_grid[lo]);
  return (1.0 - t) * interp_K(K_grid, K, lo) + t * interp_K(K_grid, K, lo + 1);
}

namespace {

// continuation marginal value at (K', a'): beta (R' + 1 - delta) bundle'^-psi
double continuation_term(const GridSolution& grid, const SavingsPolicy& pol, double Kp, int ia,
                         const ParamSet& p, bool* clamped) {
  double kq = Kp;
  if (kq < grid.K_grid.front()) {
    kq = grid.K_grid.front();
    if (clamped) *clamped = true;
  } else if (kq > grid.K_grid.back()) {
    kq = grid.K_grid.back();
    if (clamped) *clamped = true;
  }
  const BlendedState st = query_state(grid, kq, grid.logA_grid[ia]);
  const double sp = pol.interp_K(grid.K_grid, kq, ia);
  const double bundle = ghh_bundle(p, (1.0 - sp) * st.Y, st.W);
  if (!(bundle > 0.0))
    throw DomainError("solve_policy: consumption bundle nonpositive at a continuation node "
                      "(grid too wide or parameters inconsistent)");
  const double ret = p.beta * (st.R + 1.0 - p.delta);
  return p.psi == 1.0 ? ret / bundle : ret * std::pow(bundle, -p.psi);
}

}  // namespace

SavingsPolicy solve_policy(const GridSolution& grid, const MarkovChain& chain,
                           const PolicyOptions& opt) {
  const ParamSet& p = grid.params;
  if (!(p.psi > 0.0))
    throw DomainError("solve_policy: Euler iteration needs psi > 0 (curvature)");
  if (chain.n() != grid.nA())
    throw DomainError("solve_policy: chain size does not match the grid's A dimension");
  const int nK = grid.nK(), nA = grid.nA();

  SavingsPolicy pol;
  pol.nK = nK;
  pol.nA = nA;
  pol.s.resize(static_cast<std::size_t>(nK) * nA);
  // start from the steady-state investment-rate formula plus the fixed-cost
  // wedge (s here is 1 - C/Y)
  for (int ia = 0; ia < nA; ++ia)
    for (int ik = 0; ik < nK; ++ik) {
      const GridNode& n = grid.node(ik, ia);
      const double s0 = p.beta * p.delta / (1.0 - (1.0 - p.delta) * p.beta) * p.alpha * n.omega +
                        n.fc_drain / n.Y;
      pol.s[static_cast<std::size_t>(ia) * nK + ik] = std::clamp(s0, 0.02, 0.9);
    }

  std::vector<double> next(pol.s.size());
  std::vector<long> clamps(parallel_threads(), 0);
  double damp = 1.0;
  double prev_sup = 1e300;
  int grew = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    std::vector<std::string> errs(parallel_threads());
    parallel_for(0, nK * nA, [&](int node, int thread) {
      if (!errs[thread].empty()) return;
      try {
        const int ik = node % nK, ia = node / nK;
        const GridNode& nd = grid.node(ik, ia);
        const double K = grid.K_grid[ik];
        const double s_cur = pol.s[node];
        const double Kp = (1.0 - p.delta) * K + s_cur * nd.Y - nd.fc_drain;
        const double* row = chain.row(ia);
        double expectation = 0.0;
        bool clip = false;
        for (int ja = 0; ja < nA; ++ja) {
          if (row[ja] <= 0.0) continue;
          expectation += row[ja] * continuation_term(grid, pol, Kp, ja, p, &clip);
        }
        if (clip) ++clamps[thread];
        const double bundle_t = p.psi == 1.0 ? 1.0 / expectation
                                             : std::pow(expectation, -1.0 / p.psi);
        const double hterm = std::pow(nd.W, (1.0 + p.nu) / p.nu) / (1.0 + p.nu);
        const double s_new = 1.0 - (bundle_t + hterm) / nd.Y;
        next[node] = std::clamp(s_cur + damp * (s_new - s_cur), 1e-4, 1.0 - 1e-4);
      } catch (const std::exception& e) {
        errs[thread] = e.what();
      }
    });
    for (const auto& e : errs)
      if (!e.empty()) throw DomainError(e);
    double sup = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i)
      sup = std::max(sup, std::fabs(next[i] - pol.s[i]));
    pol.s.swap(next);
    pol.iterations = it + 1;
    pol.sup_change = sup;
    if (sup < opt.tol) break;
    // back off when the plain update is not contracting
    grew = sup > prev_sup ? grew + 1 : 0;
    if (grew >= 5 && damp > 0.0625) {
      damp *= 0.5;
      grew = 0;
    }
    prev_sup = sup;
  }
  if (pol.sup_change >= opt.tol)
    throw NonConvergence("solve_policy: no fixed point after " +
                         std::to_string(opt.max_iter) +
                         " sweeps (last sup-norm change " + std::to_string(pol.sup_change) + ")");
  for (long c : clamps) pol.clamp_events += c;
  for (double s : pol.s)
    if (!(s > 0.0 && s < 1.0))
      throw DomainError("solve_policy: savings rate left (0,1) at a node");
  return pol;
}

std::vector<double> euler_residuals(const SavingsPolicy& pol, const GridSolution& grid,
                                    const MarkovChain& chain,
                                    const std::vector<ProbePoint>& probes) {
  const ParamSet& p = grid.params;
  std::vector<double> out(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& pr = probes[i];
    if (pr.K < grid.K_grid.front() || pr.K > grid.K_grid.back())
      throw DomainError("euler_residuals: probe outside grid hull");
    const BlendedState st = query_state(grid, pr.K, grid.logA_grid[pr.a_index]);
    const double s = pol.interp_K(grid.K_grid, pr.K, pr.a_index);
    const double C = (1.0 - s) * st.Y;
    const double Kp = (1.0 - p.delta) * pr.K + s * st.Y - st.fc_drain;
    const double* row = chain.row(pr.a_index);
    double expectation = 0.0;
    for (int ja = 0; ja < chain.n(); ++ja) {
      if (row[ja] <= 0.0) continue;
      expectation += row[ja] * continuation_term(grid, pol, Kp, ja, p, nullptr);
    }
    const double bundle_t =
        p.psi == 1.0 ? 1.0 / expectation : std::pow(expectation, -1.0 / p.psi);
    const double hterm = std::pow(st.W, (1.0 + p.nu) / p.nu) / (1.0 + p.nu);
    out[i] = std::fabs(1.0 - (bundle_t + hterm) / C);
  }
  return out;
}

}  // namespace fragsim
