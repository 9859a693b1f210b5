#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace fragsim {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FixedCostMode { FinalGood, FactorBundle };
enum class AggWeights { Sum, Mean };  // market weight in the CES aggregate: 1 or 1/I

// Structural parameters, quarterly calibration.
struct ParamSet {
  double beta = 0.99;    // discount factor
  double psi = 1.0;      // inverse IES (1 = log utility)
  double nu = 0.352;     // inverse Frisch elasticity
  double alpha = 0.3;    // capital elasticity
  double delta = 0.025;  // depreciation
  double rho = 0.0;      // across-market CES exponent, 1 - 1/sigma_I
  double eta = 0.0;      // within-market CES exponent, 1 - 1/sigma_G
  int I = 10000;         // number of product markets
  int M = 20;            // max firms per market
  double f = 0.0;        // fraction of concentrated markets
  double lambda = 0.0;   // std of log idiosyncratic TFP
  double c = 0.0;        // fixed cost level (final-good units per quarter)
  double phi_A = 0.95;   // AR(1) persistence of log A
  double sigma_eps = 0.003;  // std of AR(1) innovations
  FixedCostMode fixed_cost_mode = FixedCostMode::FinalGood;

  // Aggregation conventions (see README "Units and normalization").
  AggWeights agg_weights = AggWeights::Sum;
  int I_ref = 0;        // 0 = I; fixed-cost scale reference market count
  double c_unit = 1.0;  // fixed-cost unit constant (presets pin this)

  // Entry subsidy: active firms pay (1 - entry_subsidy) * c at the entry
  // margin; the resource cost stays c (balanced by the profit tax).
  double entry_subsidy = 0.0;

  // effective firm-level fixed cost used by the entry margin
  double c_effective() const {
    const int ref = I_ref > 0 ? I_ref : I;
    return c * c_unit * (static_cast<double>(ref) / static_cast<double>(I));
  }

  double sigma_I() const { return 1.0 / (1.0 - rho); }
  double sigma_G() const { return 1.0 / (1.0 - eta); }

  // derived exponent bundle used all over the static equilibrium
  double exp_L_theta() const { return 1.0 / (nu + alpha); }
  double exp_L_K() const { return alpha / (nu + alpha); }
  double exp_Y_theta() const { return (1.0 - alpha) / (nu + alpha); }
  double exp_Y_K() const { return alpha * (1.0 + nu) / (nu + alpha); }
  double exp_R_theta() const { return (1.0 + nu) / (nu + alpha); }
  double exp_R_K() const { return nu * (1.0 - alpha) / (nu + alpha); }
  double r_star() const { return 1.0 / beta - (1.0 - delta); }
};

// Validates raw key=value pairs (optionally on top of a preset named by key
// "preset") and returns a checked ParamSet. sigma_I/sigma_G are the
// user-facing way to set rho/eta; supplying rho or eta directly alongside
// them is rejected.
ParamSet validate_params(const std::map<std::string, std::string>& raw);

// Table-based presets: y1975, y1990, y2007.
ParamSet preset(const std::string& name);
bool is_preset_name(const std::string& name);

// Throws DomainError if any invariant fails.
void check_invariants(const ParamSet& p);

// Flat key=value config file; '#' starts a comment. Returns raw pairs.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Canonical serialization (sorted keys) and FNV-1a hash of it; used for cache
// compatibility checks and run manifests.
std::string canonical_params(const ParamSet& p);
std::uint64_t param_hash(const ParamSet& p);

std::string to_string(FixedCostMode m);
std::string to_string(AggWeights w);

}  // namespace fragsim
