#pragma once
// Test-only oracles, independent of the solver paths they check.

#include <span>
#include <vector>

#include "fragsim/params.hpp"

namespace fragsim::oracle {

// Cournot equilibrium by best-response iteration over a discretized quantity
// grid, using the raw inverse demand p_ij = (Y/y_i)^(1-rho) (y_i/y_ij)^(1-eta)
// with Theta and Y held fixed. Returns revenue shares.
std::vector<double> best_response_shares(std::span<const double> gamma, double eta, double rho,
                                         double Theta, double Y, int grid_points = 4001,
                                         int max_rounds = 400);

// Max FOC residual |p_j (eta - (eta-rho) s_j) tau_j / Theta - 1| for a
// candidate solution expressed as shares.
double foc_residual(std::span<const double> gamma, const std::vector<double>& shares, double eta,
                    double rho);

// Aggregate TFP from the physical allocation: build firm quantities from the
// demand system at the solved shares, aggregate through the nested CES and
// divide by A L^(1-a) K^a. Independent of the Phi weight formula.
double phi_from_allocation(const std::vector<std::vector<double>>& gamma_rows,
                           const std::vector<int>& counts, const ParamSet& p);

}  // namespace fragsim::oracle
