#pragma once
// Deterministic steady-state analysis: rental-rate map, steady-state finding
// and classification, the fragility ratio chi, and the law-of-motion view.

#include <functional>
#include <vector>

#include "fragsim/economy.hpp"
#include "fragsim/policy.hpp"
#include "fragsim/symmetric.hpp"

namespace fragsim {

struct RentalCurve {
  std::vector<double> K, R, n_mean_conc;
  std::function<double(double)> eval;  // R(K) at arbitrary K for refinement
};

// General engine: equilibrium firm set from iterative deletion at every K.
RentalCurve rental_rate_map(const TechnologySet& tech, const ParamSet& p,
                            const MarketTables& tables, const std::vector<double>& K_grid,
                            double A = 1.0);
// Smooth variant for symmetric economies.
RentalCurve rental_rate_map(const SymmetricEconomy& e, const std::vector<double>& K_grid,
                            double A = 1.0);

enum class SSKind { Stable, Unstable, Degenerate };

struct SteadyState {
  double K;
  SSKind kind;
  double R;  // = r_star at a crossing
};

struct SteadyStateSet {
  std::vector<SteadyState> states;  // ordered in K
  double r_star;
};

// Sign-change bracketing on the sampled curve plus bisection refinement to
// |dK|/K < 1e-8 (a jump crossing converges to the step location). Stable
// crossings have R falling through r_star.
SteadyStateSet find_steady_states(const RentalCurve& curve, const ParamSet& p);

struct FragilityEntry {
  double K_stable;
  double K_unstable_pred;
  double chi;  // K_unstable_pred / K_stable
};
struct FragilityReport {
  std::vector<FragilityEntry> entries;  // one per stable state with a predecessor
};
FragilityReport chi(const SteadyStateSet& ss);

// The largest stable steady state of the A=1 rental map (grid center for the
// dynamic solution). Scans geometrically around the full-entry closed form.
double find_high_steady_state(const TechnologySet& tech, const ParamSet& p,
                              const MarketTables& tables);
double find_high_steady_state(const SymmetricEconomy& e);

// Deterministic law of motion K' = (1-delta)K + s(K)Y(K) - FC(K) under the
// degenerate-chain policy, with 45-degree-line crossings and local slopes.
struct LawOfMotion {
  std::vector<double> K, Kprime;
  struct Crossing {
    double K;
    double slope;  // numeric dK'/dK at the crossing
    SSKind kind;   // |slope| < 1 stable
  };
  std::vector<Crossing> crossings;
};
LawOfMotion law_of_motion_deterministic(const GridSolution& grid, const SavingsPolicy& policy);

}  // namespace fragsim
