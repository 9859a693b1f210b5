#pragma once
// Closed-form machinery for economies whose markets are ex-ante identical
// within two classes (concentrated with cost c > 0, unconcentrated with
// c = 0). With eta = 1 these admit the analytic treatment behind the
// steady-state bounds, the multiplicity condition and the MPS comparative
// statics; the continuum-of-markets semantics also resolves the transition
// regions smoothly (fraction m of concentrated markets host one extra firm
// and the marginal entrant exactly breaks even).

#include <optional>
#include <vector>

#include "fragsim/params.hpp"

namespace fragsim {

struct SymmetricEconomy {
  ParamSet p;                   // p.c is the class fixed cost (raw units)
  std::vector<double> gamma_c;  // concentrated class draws, descending
  std::vector<double> gamma_u;  // unconcentrated class draws (ignored if f==1)
  double f = 1.0;               // fraction of concentrated markets

  double c_eff() const { return p.c_effective(); }
};

// Aggregate indices when every concentrated market has n firms (m = 0) or a
// fraction m hosts n+1.
struct SymAggregates {
  double theta1, phi, omega, Y, L, W, R;
  double fc_drain;  // total final-good fixed-cost bill
  double n_mean_conc;
  double salesw_markup;
};

// State with all concentrated markets at count n (throws if n infeasible).
SymAggregates symmetric_state(const SymmetricEconomy& e, int n, double K, double A = 1.0);

// Largest feasible firm count for the concentrated class.
int sym_max_n(const SymmetricEconomy& e);

// Profit of the marginal (n-th) firm of a concentrated market when all
// concentrated markets have n firms.
double sym_marginal_profit(const SymmetricEconomy& e, int n, double K, double A = 1.0);

// Capital band [K_lower, K_upper] sustaining a symmetric equilibrium with n
// firms per concentrated market: at K_lower the n-th firm exactly breaks
// even, at K_upper the (n+1)-th entrant would. K_upper is +inf when no
// entrant exists (n at the feasibility cap).
struct KBounds {
  double lower, upper;
};
KBounds bounds_K(const SymmetricEconomy& e, int n, double A = 1.0);

// Paper-facing wrapper: single-class economy (f = 1) from an active gamma
// vector and cost c; params supply (rho, alpha, nu, I, weights).
KBounds bounds_K(const std::vector<double>& gamma_active, int n, double c, const ParamSet& p);

// Asymmetric transition region: fraction m of concentrated markets host n+1
// firms and the marginal entrant breaks even exactly.
struct AsymState {
  double m, Y, phi, theta1, omega, R;
};
AsymState asymmetric_state_at_m(const SymmetricEconomy& e, int n, double m, double K,
                                double A = 1.0);
// Solves for m in [0,1] at the given K in [K_upper(n), K_lower(n+1)].
AsymState asymmetric_region_solve(const SymmetricEconomy& e, int n, double K, double A = 1.0);

// Equilibrium rental rate R(K) under max-firm-count selection, smooth across
// transition bands. regime_n reports the concentrated-class mean count.
struct SymPoint {
  double R, n_mean_conc, theta1, Y, omega, phi, salesw_markup;
};
SymPoint sym_rental_rate(const SymmetricEconomy& e, double K, double A = 1.0);

// Existence of multiple symmetric steady states around the n -> n+1 margin:
// the two-sided inequality on Theta(n), K_upper(n), Theta(n+1), K_lower(n+1).
bool multiplicity_condition(const SymmetricEconomy& e, int n);
bool multiplicity_condition(const std::vector<double>& gamma_active, int n, const ParamSet& p);

// Mean-preserving spread on the active productivity vector. n = 2 uses
// (g1 + spread, g2 - spread); larger n scales the top n-1 by a common factor
// (1 + spread) and lets the bottom absorb the residual, which keeps
// gamma_1/gamma_j fixed for j < n. Throws if the result is not a valid
// descending positive vector with feasible shares.
std::vector<double> apply_mps(const std::vector<double>& gamma_active, double spread,
                              double rho);

// True when the smooth symmetric-economy treatment applies (lambda = 0 and
// f is exactly 0 or 1): transition regions are then resolved by the
// continuum-of-markets semantics instead of discrete deletion.
bool symmetric_path_eligible(const ParamSet& p);

// Parameter-only sufficient conditions, both sides reported.
struct ConditionFlags {
  bool unique_symmetric;   // rho/(1-rho) > (1-alpha)/(nu+alpha)
  double unique_lhs, unique_rhs;
  bool mps_fragility_n2;   // rho > 1 - nu(1-alpha)/(1+nu*alpha)
  double mps2_lhs, mps2_rhs;
  bool mps_fragility_gen;  // rho > (1+nu*alpha)/(1+nu)
  double mpsn_lhs, mpsn_rhs;
};
ConditionFlags sufficient_conditions(const ParamSet& p);

}  // namespace fragsim
