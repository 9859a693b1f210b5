#include "fragsim/markov.hpp"

#include <cmath>

namespace fragsim {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

MarkovChain tauchen(double phi_A, double sigma_eps, int n_states, double width_multiplier) {
  if (n_states < 2) throw DomainError("tauchen: need at least 2 states");
  if (!(sigma_eps > 0.0)) throw DomainError("tauchen: sigma_eps must be positive");
  if (!(phi_A >= 0.0 && phi_A < 1.0)) throw DomainError("tauchen: phi_A must lie in [0,1)");
  MarkovChain mc;
  const double sig_unc = sigma_eps / std::sqrt(1.0 - phi_A * phi_A);
  const double hi = width_multiplier * sig_unc;
  mc.states.resize(n_states);
  const double step = 2.0 * hi / (n_states - 1);
  for (int i = 0; i < n_states; ++i) mc.states[i] = -hi + step * i;

  mc.transition.assign(static_cast<std::size_t>(n_states) * n_states, 0.0);
  for (int i = 0; i < n_states; ++i) {
    const double mean = phi_A * mc.states[i];
    double* row = mc.transition.data() + static_cast<std::size_t>(i) * n_states;
    row[0] = normal_cdf((mc.states[0] - mean + 0.5 * step) / sigma_eps);
    row[n_states - 1] = 1.0 - normal_cdf((mc.states[n_states - 1] - mean - 0.5 * step) / sigma_eps);
    for (int j = 1; j < n_states - 1; ++j) {
      row[j] = normal_cdf((mc.states[j] - mean + 0.5 * step) / sigma_eps) -
               normal_cdf((mc.states[j] - mean - 0.5 * step) / sigma_eps);
    }
    double total = 0.0;
    for (int j = 0; j < n_states; ++j) total += row[j];
    for (int j = 0; j < n_states; ++j) row[j] /= total;
  }
  return mc;
}

MarkovChain degenerate_chain() {
  MarkovChain mc;
  mc.states = {0.0};
  mc.transition = {1.0};
  return mc;
}

}  // namespace fragsim
