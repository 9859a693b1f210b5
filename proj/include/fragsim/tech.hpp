#pragma once

#include <cstdint>
#include <vector>

#include "fragsim/params.hpp"

namespace fragsim {

// Exogenous technology: idiosyncratic TFP draws and fixed costs per market.
// gamma rows are sorted descending (entry order is decreasing TFP); the first
// round(f*I) markets carry the fixed cost c, the rest zero.
struct TechnologySet {
  int I = 0;
  int M = 0;
  std::vector<double> gamma;       // I*M, row-major, each row descending
  std::vector<double> fixed_cost;  // length I
  std::uint64_t seed = 0;
  int n_concentrated = 0;

  const double* row(int i) const { return gamma.data() + static_cast<std::size_t>(i) * M; }
  double* row(int i) { return gamma.data() + static_cast<std::size_t>(i) * M; }
  bool concentrated(int i) const { return fixed_cost[static_cast<std::size_t>(i)] > 0.0; }
};

// log gamma_ij ~ N(0, lambda^2), i.i.d., rows sorted descending; deterministic
// in (params, seed) across platforms. lambda = 0 gives gamma identically 1.
// fixed_cost holds the raw parameter c; unit conversion (c_unit, I_ref) is
// applied by the equilibrium layer via ParamSet::c_effective.
TechnologySet draw_technology(const ParamSet& p, std::uint64_t seed);

// Builds a TechnologySet from explicit rows (tests, toy economies). Rows are
// sorted descending; fixed costs as given.
TechnologySet make_technology(int I, int M, const std::vector<double>& gamma,
                              const std::vector<double>& fixed_cost);

// Asserts row sortedness and positivity; throws DomainError on violation.
void check_technology(const TechnologySet& t);

}  // namespace fragsim
