#pragma once

#include <cstdint>
#include <vector>

#include "fragsim/fragility.hpp"
#include "fragsim/markov.hpp"
#include "fragsim/policy.hpp"
#include "fragsim/simulate.hpp"

namespace fragsim {

// One fully solved economy: technology, per-market tables, grid, chain,
// household policy and the high steady state (deterministic and stochastic).
struct SolvedModel {
  TechnologySet tech;
  ParamSet params;
  MarketTables tables;
  MarkovChain chain;
  GridSolution grid;
  SavingsPolicy policy;
  double K_high_det = 0.0;  // largest stable crossing of the A=1 rental map
  double K_high = 0.0;      // zero-shock fixed point under the solved policy
  int a0_index = 0;         // chain state closest to log A = 0
  bool symmetric_path = false;
};

struct SolveOptionsModel {
  int n_K = 70;
  int n_A = 11;
  double tauchen_width = 3.0;
  double k_lo = 0.5, k_hi = 1.5;  // grid span as multiples of K_high_det
  double policy_tol = 1e-12;
};

SolvedModel solve_model(const TechnologySet& tech, const ParamSet& p,
                        const SolveOptionsModel& opt = {});

// ---- ergodic distribution (Table 5 / Fig 6 exercise)

struct ErgodicSummary {
  double mean_gap = 0.0;  // mean of log Y - log Y_high
  double std_logY = 0.0;
  int n_modes = 0;
  bool bimodal = false;
  double mode_gap = 0.0;  // distance between the two main modes (log points)
  std::vector<double> hist_centers, hist_mass;
};

ErgodicSummary ergodic(const SolvedModel& m, long T_long, long burn_in, std::uint64_t seed);

// ---- deep-recession probabilities (Table 4 exercise)

struct RecessionSpec {
  std::vector<double> thresholds{0.10, 0.15, 0.20};  // log-deviation drops
  int min_duration = 4;
  std::vector<int> horizons{40, 100};
  int n_sims = 10000;
};

struct RecessionCell {
  double threshold;
  int horizon;
  double prob;
  double half_width;  // binomial 95% half-width
};

std::vector<RecessionCell> recession_probabilities(const SolvedModel& m, const RecessionSpec& spec,
                                                   std::uint64_t seed);

// ---- impulse responses

struct IrfResult {
  SimPath base, shocked;
  std::vector<double> dlogY, dlogN_conc, d_measured_tfp;
};
// eps_profile holds the shocked innovations; both paths run for `horizon`
// periods from the high steady state.
IrfResult irf(const SolvedModel& m, const std::vector<double>& eps_profile, int horizon);

// ---- measured-TFP inversion and the crisis experiment

// Finds innovations eps_1..eps_n such that the measured-TFP log deviation
// log(A_t Phi_t) - log(Phi at the high steady state) matches target_dev each
// quarter; sequential one-dimensional bisection.
std::vector<double> invert_tfp_shocks(const SolvedModel& m, const std::vector<double>& target_dev,
                                      double tol = 1e-12);

struct CrisisRow {
  int offset;  // quarters after the pre-shock steady state (t = 0)
  double output, measured_tfp, hours, investment;  // log deviations
  double labor_share, profit_share;                // level deviations
  double agg_markup;                               // level deviation of 1/Omega
  double log_firms_conc;
};
struct CrisisReport {
  std::vector<double> eps;
  std::vector<CrisisRow> rows;
  SimPath path;
};
CrisisReport crisis_experiment(const SolvedModel& m, const std::vector<double>& target_dev,
                               int horizon, const std::vector<int>& offsets = {8, 29, 45, 129});

// ---- calibration moments (Tables 2-3 and the HHI distribution)

struct MomentReport {
  double sales_weighted_markup = 0.0;
  double cost_weighted_markup = 0.0;
  double std_log_revenue = 0.0;
  double fixed_total_cost_ratio = 0.0;
  double emp_share_concentrated = 0.0;
  double mean_firms_concentrated = 0.0;
  double hhi_p10 = 0.0, hhi_p25 = 0.0, hhi_p50 = 0.0, hhi_p75 = 0.0, hhi_p90 = 0.0;
};

// Moments at the deterministic high steady state (A = 1).
MomentReport moments(const TechnologySet& tech, const ParamSet& p, const MarketTables& tables);
MomentReport moments_at(const TechnologySet& tech, const ParamSet& p, const MarketTables& tables,
                        double K, double A);

// ---- entry-subsidy policy experiment

struct PolicyPoint {
  double tau_f = 0.0;
  double welfare = 0.0;     // mean discounted utility from the common start
  double cev = 0.0;         // consumption-equivalent gain vs tau_f = 0
  double max_tau_pi = 0.0;  // largest balanced-budget profit tax on any path
  bool feasible = true;     // tau_pi stayed within [0,1]
  double K_high = 0.0;
};

struct WelfareOptions {
  int reps = 2000;
  int T = 1200;
  std::uint64_t seed = 1;
};

std::vector<PolicyPoint> policy_experiment(const TechnologySet& tech, const ParamSet& p,
                                           const std::vector<double>& tau_f_grid,
                                           const SolveOptionsModel& sopt,
                                           const WelfareOptions& wopt);

// numpy-style linear-interpolation percentile (values need not be sorted)
double percentile(std::vector<double> values, double pct);

}  // namespace fragsim
