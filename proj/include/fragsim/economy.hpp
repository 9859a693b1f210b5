#pragma once

#include <cstdint>
#include <vector>

#include "fragsim/market.hpp"
#include "fragsim/params.hpp"
#include "fragsim/tech.hpp"

namespace fragsim {

// Active firm counts per market. Active firms are always the top-n_i by
// gamma (prefix property), so a count per market is the whole state.
struct FirmSet {
  std::vector<std::uint8_t> counts;
  bool warning = false;  // oscillation guard tripped; last loss-free config
  long rounds = 0;       // deletions + re-admissions performed

  int total() const;
  int total_concentrated(const TechnologySet& t) const;
};

// Static general-equilibrium quantities at one (K, A).
struct AggregateState {
  double K = 0.0;
  double A = 1.0;
  double theta1 = 0.0;  // factor price index at A=1; Theta = A * theta1
  double theta = 0.0;
  double phi = 0.0;    // endogenous TFP component (A-free)
  double omega = 0.0;  // aggregate factor share
  double Y = 0.0, L = 0.0, W = 0.0, R = 0.0;
  double gross_profit = 0.0;  // (1 - omega) Y
  double fixed_bill = 0.0;    // value of fixed costs incurred
  double fc_drain = 0.0;      // final-good drain in the capital law of motion
  double net_profit = 0.0;    // gross_profit - fixed_bill
  double salesw_markup = 0.0;
  int n_total = 0;
  int n_conc = 0;
  // factor-bundle mode: factors absorbed by fixed costs
  double L_prod = 0.0, K_prod = 0.0;
};

// Aggregate indices with both factor-share routes and the TFP-weight
// recomposition of Phi (used by audits and tests; the grid solver uses the
// identity Phi = Theta1 / Omega that these routes must agree with).
struct AggIndices {
  double theta1 = 0.0, theta = 0.0;
  double phi = 0.0;         // from the omega_ij TFP weights
  double omega = 0.0;       // = omega_eq11
  double omega_eq11 = 0.0;  // sum_i s_i sum_j s_ij / mu_ij
  double omega_eq12 = 0.0;  // sum_i s_i (eta - (eta-rho) HHI_i)
  double phi_identity = 0.0;  // theta1 / omega
  std::vector<double> market_share;  // s_i
};

// TFP weights omega_ij (one per active firm) plus the recomposed Phi.
struct MarketAggregates {
  std::vector<std::vector<double>> omega_weights;
  double phi_recomposed = 0.0;
};

AggIndices aggregate_indices(const TechnologySet& tech, const ParamSet& p,
                             const std::vector<std::uint8_t>& counts, double A);
MarketAggregates tfp_weights(const TechnologySet& tech, const ParamSet& p,
                             const std::vector<std::uint8_t>& counts, double A);

// Equilibrium firm set at (K, A) by iterative deletion from the full matrix:
// remove the single worst-loss firm per round, recompute aggregates
// incrementally, and after convergence re-admit profitable marginal entrants
// (resuming deletion) until free entry is slack. Bounded by 10*I*M rounds.
struct FirmSetResult {
  FirmSet firm_set;
  AggregateState state;
};
FirmSetResult solve_firm_set(const TechnologySet& tech, const ParamSet& p,
                             const MarketTables& tables, double K, double A);

// Aggregates and factor prices for a given firm set (no entry/exit logic).
// Dispatches on p.fixed_cost_mode.
AggregateState static_equilibrium(const TechnologySet& tech, const ParamSet& p,
                                  const MarketTables& tables,
                                  const std::vector<std::uint8_t>& counts, double K, double A);

// Factor-bundle fixed costs: firms hire (k_c, l_c) with c_f = k_c^a l_c^(1-a),
// so the effective cost is Theta*c_f and factor markets clear at
// L = L_y + N^c l_c, K = K_y + N^c k_c with k_c/l_c = K_y/L_y.
AggregateState static_equilibrium_variable_fc(const TechnologySet& tech, const ParamSet& p,
                                              const MarketTables& tables,
                                              const std::vector<std::uint8_t>& counts, double K,
                                              double A);

// Independent free-entry slackness audit (full market re-solves, not the
// cached tables): every active firm covers its fixed cost, no profitable
// marginal entrant.
struct SlacknessReport {
  bool ok = true;
  double worst_active_deficit = 0.0;   // min over active of profit - c (>= -tol)
  double best_entrant_surplus = 0.0;   // max over entrants of profit - c (<= tol)
  int violations = 0;
};
SlacknessReport audit_free_entry(const TechnologySet& tech, const ParamSet& p,
                                 const std::vector<std::uint8_t>& counts, double K, double A,
                                 double tol = 1e-9);

// Static equilibria tabulated on the (K, log A) grid.
struct GridNode {
  double theta1, phi, omega, Y, L, W, R;
  double fc_drain;     // final-good fixed-cost drain (0 in factor_bundle mode)
  double fixed_bill;   // value of fixed costs (Theta*c_f based in factor mode)
  double fc_factor;    // factor-bundle fixed costs in output units (0 in final-good mode)
  double salesw_markup;
  double n_total, n_conc;
  std::uint8_t warning;
};

struct GridSolution {
  ParamSet params;
  std::uint64_t tech_seed = 0;
  std::vector<double> K_grid;    // strictly increasing
  std::vector<double> logA_grid; // strictly increasing (chain states)
  std::vector<GridNode> nodes;   // [ia * nK + ik]
  std::vector<std::uint8_t> counts;  // [node][market], same node order

  int nK() const { return static_cast<int>(K_grid.size()); }
  int nA() const { return static_cast<int>(logA_grid.size()); }
  const GridNode& node(int ik, int ia) const { return nodes[static_cast<std::size_t>(ia) * nK() + ik]; }
  const std::uint8_t* node_counts(int ik, int ia) const {
    return counts.data() + (static_cast<std::size_t>(ia) * nK() + ik) * params.I;
  }
};

GridSolution solve_grid(const TechnologySet& tech, const ParamSet& p, const MarketTables& tables,
                        const std::vector<double>& K_grid, const std::vector<double>& logA_grid);

// Smooth-semantics grid for symmetric economies (lambda = 0, f in {0,1}):
// nodes come from the continuum treatment of transition regions; firm-count
// columns hold the rounded allocation. Implemented in symmetric.cpp.
struct SymmetricEconomy;
GridSolution solve_grid_symmetric(const SymmetricEconomy& e, const std::vector<double>& K_grid,
                                  const std::vector<double>& logA_grid);
SymmetricEconomy make_symmetric(const TechnologySet& tech, const ParamSet& p);

// Bilinear interpolation of (theta1, phi, omega, fc_drain, n_conc, ...) in
// (K, log A) with (Y, L, W, R) recomputed from the closed forms; firm counts
// are integers at nodes, so blending the indices rather than outputs keeps
// the factor-market relations exact along simulated paths.
struct BlendedState {
  double theta1, phi, omega, fc_drain, fixed_bill, n_conc, n_total, salesw_markup;
  double Y, L, W, R, theta;
};
BlendedState query_state(const GridSolution& grid, double K, double logA,
                         bool* clamped = nullptr);

}  // namespace fragsim
