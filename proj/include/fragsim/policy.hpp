#pragma once

#include <vector>

#include "fragsim/economy.hpp"
#include "fragsim/markov.hpp"

namespace fragsim {

// Household savings-rate policy s = 1 - C/Y on the (K, log A) grid, from
// iterating the Euler equation under GHH preferences. The capital transition
// is K' = (1-delta) K + s Y - FC where FC is the final-good fixed-cost drain
// (zero in factor-bundle mode).
struct SavingsPolicy {
  std::vector<double> s;  // [ia * nK + ik]
  int nK = 0, nA = 0;
  double sup_change = 0.0;
  int iterations = 0;
  long clamp_events = 0;  // K' left the grid during iteration

  double at(int ik, int ia) const { return s[static_cast<std::size_t>(ia) * nK + ik]; }
  // linear interpolation in K at chain state ia
  double interp_K(const std::vector<double>& K_grid, double K, int ia) const;
  // bilinear in (K, log A)
  double interp(const std::vector<double>& K_grid, const std::vector<double>& logA_grid, double K,
                double logA) const;
};

struct PolicyOptions {
  double tol = 1e-12;
  int max_iter = 50000;
};

SavingsPolicy solve_policy(const GridSolution& grid, const MarkovChain& chain,
                           const PolicyOptions& opt = {});

// Unit-free Euler residual |1 - C_implied / C_policy| at probe points.
struct ProbePoint {
  double K;
  int a_index;
};
std::vector<double> euler_residuals(const SavingsPolicy& policy, const GridSolution& grid,
                                    const MarkovChain& chain,
                                    const std::vector<ProbePoint>& probes);

// GHH consumption bundle C - L^(1+nu)/(1+nu) with L = W^(1/nu).
double ghh_bundle(const ParamSet& p, double C, double W);
double ghh_utility(const ParamSet& p, double C, double W);

}  // namespace fragsim
