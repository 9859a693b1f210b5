#include "fragsim/tech.hpp"

#include <algorithm>
#include <cmath>

#include "fragsim/rng.hpp"

namespace fragsim {

TechnologySet draw_technology(const ParamSet& p, std::uint64_t seed) {
  TechnologySet t;
  t.I = p.I;
  t.M = p.M;
  t.seed = seed;
  t.gamma.resize(static_cast<std::size_t>(p.I) * p.M);
  t.fixed_cost.assign(p.I, 0.0);
  t.n_concentrated = static_cast<int>(std::lround(p.f * p.I));

  Rng rng(seed);
  if (p.lambda == 0.0) {
    std::fill(t.gamma.begin(), t.gamma.end(), 1.0);
  } else {
    for (auto& g : t.gamma) g = std::exp(p.lambda * rng.next_normal());
    // descending within each row; stable so lambda=0 ties keep draw order
    for (int i = 0; i < p.I; ++i)
      std::stable_sort(t.row(i), t.row(i) + p.M, std::greater<double>());
  }
  for (int i = 0; i < t.n_concentrated; ++i) t.fixed_cost[i] = p.c;
  check_technology(t);
  return t;
}

TechnologySet make_technology(int I, int M, const std::vector<double>& gamma,
                              const std::vector<double>& fixed_cost) {
  if (static_cast<int>(gamma.size()) != I * M) throw DomainError("gamma size must be I*M");
  if (static_cast<int>(fixed_cost.size()) != I) throw DomainError("fixed_cost size must be I");
  TechnologySet t;
  t.I = I;
  t.M = M;
  t.gamma = gamma;
  t.fixed_cost = fixed_cost;
  for (int i = 0; i < I; ++i)
    std::stable_sort(t.row(i), t.row(i) + M, std::greater<double>());
  t.n_concentrated = 0;
  for (double c : fixed_cost)
    if (c > 0.0) ++t.n_concentrated;
  check_technology(t);
  return t;
}

void check_technology(const TechnologySet& t) {
  for (int i = 0; i < t.I; ++i) {
    const double* g = t.row(i);
    for (int j = 0; j < t.M; ++j) {
      if (!(g[j] > 0.0)) throw DomainError("technology: gamma must be strictly positive");
      if (j > 0 && g[j] > g[j - 1]) throw DomainError("technology: row not sorted descending");
    }
  }
}

}  // namespace fragsim
