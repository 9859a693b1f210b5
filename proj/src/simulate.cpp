#include "fragsim/simulate.hpp"

#include <cmath>

#include "fragsim/rng.hpp"

namespace fragsim {

void SimPath::reserve(int T) {
  for (auto* v : {&K, &logA, &Y, &L, &W, &R, &C, &investment, &theta, &omega, &phi, &labor_share,
                  &profit_share, &agg_markup, &n_conc, &measured_tfp, &savings})
    v->reserve(T);
}

namespace {

struct Stepper {
  const SavingsPolicy& pol;
  const GridSolution& grid;
  SimPath& path;

  // records the period and returns next-period capital
  double record(double K, double a, bool a_on_node, int a_index) {
    const ParamSet& p = grid.params;
    bool clip = false;
    const BlendedState st = query_state(grid, K, a, &clip);
    const double s = a_on_node ? pol.interp_K(grid.K_grid, K, a_index)
                               : pol.interp(grid.K_grid, grid.logA_grid, K, a);
    if (clip) ++path.clamp_events;
    const double C = (1.0 - s) * st.Y;
    const double inv = s * st.Y - st.fc_drain;
    path.K.push_back(K);
    path.logA.push_back(a);
    path.Y.push_back(st.Y);
    path.L.push_back(st.L);
    path.W.push_back(st.W);
    path.R.push_back(st.R);
    path.C.push_back(C);
    path.investment.push_back(inv);
    path.theta.push_back(st.theta);
    path.omega.push_back(st.omega);
    path.phi.push_back(st.phi);
    path.labor_share.push_back((1.0 - p.alpha) * st.omega);
    path.profit_share.push_back(1.0 - st.omega - st.fixed_bill / st.Y);
    path.agg_markup.push_back(1.0 / st.omega);
    path.n_conc.push_back(st.n_conc);
    path.measured_tfp.push_back(std::exp(a) * st.phi);
    path.savings.push_back(s);
    double Kp = (1.0 - p.delta) * K + inv;
    if (Kp < grid.K_grid.front()) {
      Kp = grid.K_grid.front();
      ++path.clamp_events;
    } else if (Kp > grid.K_grid.back()) {
      Kp = grid.K_grid.back();
      ++path.clamp_events;
    }
    return Kp;
  }
};

}  // namespace

SimPath simulate_chain(const SavingsPolicy& pol, const GridSolution& grid,
                       const MarkovChain& chain, std::uint64_t seed, int T, double K0,
                       int a0_index) {
  if (T < 1) throw DomainError("simulate_chain: T must be at least 1");
  if (K0 < grid.K_grid.front() || K0 > grid.K_grid.back())
    throw DomainError("simulate_chain: K0 outside grid");
  if (a0_index < 0 || a0_index >= chain.n())
    throw DomainError("simulate_chain: bad initial chain state");
  SimPath path;
  path.reserve(T);
  Stepper step{pol, grid, path};
  Rng rng(seed);
  double K = K0;
  int ia = a0_index;
  for (int t = 0; t < T; ++t) {
    K = step.record(K, chain.states[ia], true, ia);
    // next chain state by inverse CDF of the current row
    const double u = rng.next_uniform();
    const double* row = chain.row(ia);
    double acc = 0.0;
    int next = chain.n() - 1;
    for (int j = 0; j < chain.n(); ++j) {
      acc += row[j];
      if (u <= acc) { next = j; break; }
    }
    ia = next;
  }
  return path;
}

SimPath simulate_eps(const SavingsPolicy& pol, const GridSolution& grid,
                     const std::vector<double>& eps, double K0, double a0) {
  const int T = static_cast<int>(eps.size()) + 1;
  if (K0 < grid.K_grid.front() || K0 > grid.K_grid.back())
    throw DomainError("simulate_eps: K0 outside grid");
  SimPath path;
  path.reserve(T);
  Stepper step{pol, grid, path};
  const double phiA = grid.params.phi_A;
  double K = K0, a = a0;
  for (int t = 0; t < T; ++t) {
    K = step.record(K, a, false, 0);
    if (t + 1 < T) a = phiA * a + eps[t];
  }
  return path;
}

double stochastic_steady_state(const SavingsPolicy& pol, const GridSolution& grid,
                               double K_start, double tol, int max_iter) {
  const ParamSet& p = grid.params;
  double K = K_start;
  for (int it = 0; it < max_iter; ++it) {
    const BlendedState st = query_state(grid, K, 0.0);
    const double s = pol.interp(grid.K_grid, grid.logA_grid, K, 0.0);
    double Kp = (1.0 - p.delta) * K + s * st.Y - st.fc_drain;
    Kp = std::min(std::max(Kp, grid.K_grid.front()), grid.K_grid.back());
    if (std::fabs(Kp - K) < tol * std::max(1.0, K)) return Kp;
    K = Kp;
  }
  return K;
}

}  // namespace fragsim
