#pragma once

#include <vector>

#include "fragsim/params.hpp"

namespace fragsim {

struct MarkovChain {
  std::vector<double> states;      // log A values, symmetric about 0
  std::vector<double> transition;  // row-stochastic, n x n row-major

  int n() const { return static_cast<int>(states.size()); }
  const double* row(int i) const { return transition.data() + static_cast<std::size_t>(i) * n(); }
};

// Tauchen (1986) discretization of log A' = phi_A log A + eps,
// eps ~ N(0, sigma_eps^2); grid spans +/- width_multiplier unconditional
// standard deviations.
MarkovChain tauchen(double phi_A, double sigma_eps, int n_states, double width_multiplier = 3.0);

// Single-state degenerate chain (deterministic dynamics).
MarkovChain degenerate_chain();

double normal_cdf(double x);

}  // namespace fragsim
