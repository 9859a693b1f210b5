#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fragsim/params.hpp"
#include "fragsim/tech.hpp"

namespace fragsim {

struct InfeasibleShares : DomainError {
  using DomainError::DomainError;
};
struct NonConvergence : DomainError {
  using DomainError::DomainError;
};

// Cournot outcome of one market with n active firms.
//
// rel_price[j] is p_j relative to the unit-productivity marginal cost, i.e.
// p_j * A / Theta = mu_j / gamma_j. g is the market price aggregate: the
// market price index equals Theta / (A g); at eta=1 this is the closed form
// g(n) = (n-(1-rho)) / sum_k 1/gamma_k.
//
// profit_coeff[j] is the market-local profit coefficient
//   (1 - 1/mu_j) s_j g^{rho/(1-rho)},
// so firm j's profit is profit_coeff[j] * w * (A/Theta)^{rho/(1-rho)} * Y
// where w is the market's CES weight. At eta=1 it coincides with the
// closed-form coefficient (1/(1-rho)) (1-g/gamma_j)^2 g^{rho/(1-rho)}.
struct MarketEq {
  int n = 0;
  std::vector<double> shares;        // revenue shares within the market, sum 1
  std::vector<double> markups;       // price over marginal cost
  std::vector<double> rel_price;     // mu_j / gamma_j
  std::vector<double> profit_coeff;  // see above
  double g = 0.0;                    // price aggregate (TFP units)
  double tpow = 0.0;                 // g^{rho/(1-rho)}
  double hhi = 0.0;                  // sum of squared shares
  double omega_w = 0.0;              // eta - (eta-rho) * hhi
  double h = 0.0;                    // sum_j s_j / gamma_j
  double foc_residual = 0.0;         // max_j |s_j - T_j(s)| at the solution
};

// markup implied by a revenue share: 1 / (eta - (eta-rho) s)
double markup_of_share(double s, double eta, double rho);

// Largest n <= limit such that all n firms have positive shares at eta=1
// (gamma_n * sum_{k<=n} 1/gamma_k > n - (1-rho)).
int feasible_n_eta1(std::span<const double> gamma, int limit, double rho);

// Closed-form solution with no within-market differentiation (eta = 1).
// Throws InfeasibleShares if the implied last share is negative.
MarketEq solve_market_eta1(std::span<const double> gamma, double rho);

struct SolveOptions {
  double tol = 1e-14;        // on the share fixed-point residual
  int max_iter = 10000;
  double damping = 0.5;
  const double* warm_start = nullptr;  // optional length-n initial shares
};

// General eta < 1: damped fixed point on shares
//   s_j  ∝  (gamma_j / mu(s_j))^{eta/(1-eta)},
// with a bisection fallback for n = 2. Throws NonConvergence with the last
// residual if the iteration fails.
MarketEq solve_market(std::span<const double> gamma, double eta, double rho,
                      const SolveOptions& opt = {});

// Dispatches on eta (closed form at eta = 1).
MarketEq solve_market_auto(std::span<const double> gamma, const ParamSet& p,
                           const SolveOptions& opt = {});

// Free-entry firm count for one market at given aggregates (partial
// equilibrium, unit market weight): the largest n <= M such that firm n's
// gross profit profit_coeff_n * Theta^{-rho/(1-rho)} * Y covers c_i and the
// next entrant's would not. Returns 0 when even a monopolist cannot cover.
int market_n_star(std::span<const double> gamma, double c_i, double Theta, double Y,
                  const ParamSet& p);

// Per-market tables over all firm counts n = 0..M. Within-market equilibria
// do not depend on aggregate state, so these are computed once per
// TechnologySet and reused by every grid-node solve.
struct MarketTables {
  int I = 0;
  int M = 0;
  std::vector<double> tpow;     // I*(M+1): g^{rho/(1-rho)}, 0 at n=0
  std::vector<double> omega_w;  // I*(M+1): eta-(eta-rho)*HHI, 1 at n=0 (unused)
  std::vector<double> pihat;    // I*(M+1): last firm's profit coefficient
  std::vector<double> h;        // I*(M+1): sum s_j/gamma_j
  std::vector<double> swmu;     // I*(M+1): sum s_j mu_j (sales-weighted markup)
  std::vector<std::uint8_t> max_n;  // feasibility cap per market (eta=1 trims)
  double max_foc_residual = 0.0;

  std::size_t at(int i, int n) const { return static_cast<std::size_t>(i) * (M + 1) + n; }
};

MarketTables build_market_tables(const TechnologySet& tech, const ParamSet& p);

}  // namespace fragsim
