#pragma once

#include <cstdint>
#include <vector>

#include "fragsim/policy.hpp"

namespace fragsim {

// One simulated path, quarterly. All series share the same length.
struct SimPath {
  std::vector<double> K, logA, Y, L, W, R, C, investment, theta, omega, phi;
  std::vector<double> labor_share, profit_share, agg_markup, n_conc, measured_tfp, savings;
  long clamp_events = 0;

  int T() const { return static_cast<int>(K.size()); }
  void reserve(int T);
};

// Chain-state simulation: log A jumps between the chain's states, drawn with
// the given seed; K interpolates linearly. Identical seed => identical path.
SimPath simulate_chain(const SavingsPolicy& pol, const GridSolution& grid,
                       const MarkovChain& chain, std::uint64_t seed, int T, double K0,
                       int a0_index);

// Explicit-innovation simulation with continuously valued log A carried
// alongside the chain (the policy and state tables interpolate in A). eps[t]
// is the innovation applied between periods t and t+1; the path has
// eps.size()+1 periods.
SimPath simulate_eps(const SavingsPolicy& pol, const GridSolution& grid,
                     const std::vector<double>& eps, double K0, double a0);

// Fixed point of the zero-shock law of motion at log A = 0 under the solved
// policy: the high stochastic steady state when started near the grid top.
double stochastic_steady_state(const SavingsPolicy& pol, const GridSolution& grid,
                               double K_start, double tol = 1e-12, int max_iter = 200000);

}  // namespace fragsim
