#include "fragsim/symmetric.hpp"

#include <cmath>
#include <limits>

#include "fragsim/market.hpp"

namespace fragsim {

namespace {

struct ClassEq {
  double tpow, omega_w, h, pihat_last, swmu;
};

ClassEq class_eq(const std::vector<double>& gamma, int n, const ParamSet& p) {
  const MarketEq eq = solve_market_auto(std::span<const double>(gamma.data(), (std::size_t)n), p);
  double swmu = 0.0;
  for (int j = 0; j < n; ++j) swmu += eq.shares[j] * eq.markups[j];
  return {eq.tpow, eq.omega_w, eq.h, eq.profit_coeff[n - 1], swmu};
}

double class_entrant_pihat(const std::vector<double>& gamma, int n_after, const ParamSet& p) {
  const MarketEq eq =
      solve_market_auto(std::span<const double>(gamma.data(), (std::size_t)n_after), p);
  return eq.profit_coeff[n_after - 1];
}

int max_feasible(const std::vector<double>& gamma, const ParamSet& p) {
  if (p.eta == 1.0)
    return feasible_n_eta1(std::span<const double>(gamma.data(), gamma.size()),
                           std::min<int>(p.M, gamma.size()), p.rho);
  return std::min<int>(p.M, gamma.size());
}

struct Mix {
  double T, U, CF, n_mean_conc, SW;
};

// m = fraction of concentrated markets at n+1 (0 for a pure symmetric state)
Mix mix_sums(const SymmetricEconomy& e, int n, double m) {
  const ParamSet& p = e.p;
  const double w = p.agg_weights == AggWeights::Mean ? 1.0 / p.I : 1.0;
  Mix s{0.0, 0.0, 0.0, 0.0, 0.0};
  const double wc = w * p.I * e.f, wu = w * p.I * (1.0 - e.f);
  if (e.f < 1.0) {
    const int nu_ = max_feasible(e.gamma_u, p);
    if (nu_ > 0) {
      const ClassEq u = class_eq(e.gamma_u, nu_, p);
      s.T += wu * u.tpow;
      s.U += wu * u.tpow * u.omega_w;
      s.SW += wu * u.tpow * u.swmu;
    }
  }
  if (e.f > 0.0 && n > 0) {
    const ClassEq lo = class_eq(e.gamma_c, n, p);
    s.T += wc * (1.0 - m) * lo.tpow;
    s.U += wc * (1.0 - m) * lo.tpow * lo.omega_w;
    s.SW += wc * (1.0 - m) * lo.tpow * lo.swmu;
    if (m > 0.0) {
      const ClassEq hi = class_eq(e.gamma_c, n + 1, p);
      s.T += wc * m * hi.tpow;
      s.U += wc * m * hi.tpow * hi.omega_w;
      s.SW += wc * m * hi.tpow * hi.swmu;
    }
  }
  // fixed-cost bill: concentrated markets are a count-f*I set of discrete
  // markets, each active firm paying c_eff
  s.n_mean_conc = n + m;
  s.CF = e.f * p.I * (n + m) * e.c_eff();
  return s;
}

SymAggregates assemble(const SymmetricEconomy& e, const Mix& s, double K, double A) {
  const ParamSet& p = e.p;
  if (!(s.T > 0.0)) throw DomainError("symmetric economy: no production");
  SymAggregates out;
  const double rr = p.rho / (1.0 - p.rho);
  out.theta1 = std::pow(s.T, 1.0 / rr);
  out.omega = s.U / s.T;
  out.phi = out.theta1 / out.omega;
  const double theta = A * out.theta1;
  const double wtheta = (1.0 - p.alpha) * theta;
  out.L = std::pow(wtheta, p.exp_L_theta()) * std::pow(K, p.exp_L_K());
  out.Y = A * out.phi * std::pow(wtheta, p.exp_Y_theta()) * std::pow(K, p.exp_Y_K());
  out.W = wtheta * std::pow(out.L, -p.alpha) * std::pow(K, p.alpha);
  out.R = p.alpha * theta * std::pow(out.L, 1.0 - p.alpha) * std::pow(K, p.alpha - 1.0);
  out.fc_drain = s.CF;
  out.n_mean_conc = s.n_mean_conc;
  out.salesw_markup = s.SW / s.T;
  return out;
}

// profit of a firm with coefficient pihat in a market of weight w
double profit_of(const SymmetricEconomy& e, double pihat, double theta1, double Y) {
  const ParamSet& p = e.p;
  const double w = p.agg_weights == AggWeights::Mean ? 1.0 / p.I : 1.0;
  return pihat * w * std::pow(theta1, -p.rho / (1.0 - p.rho)) * Y;
}

}  // namespace

int sym_max_n(const SymmetricEconomy& e) { return max_feasible(e.gamma_c, e.p); }

SymAggregates symmetric_state(const SymmetricEconomy& e, int n, double K, double A) {
  if (n > sym_max_n(e)) throw InfeasibleShares("symmetric_state: n exceeds feasibility cap");
  return assemble(e, mix_sums(e, n, 0.0), K, A);
}

double sym_marginal_profit(const SymmetricEconomy& e, int n, double K, double A) {
  const SymAggregates st = symmetric_state(e, n, K, A);
  const ClassEq c = class_eq(e.gamma_c, n, e.p);
  return profit_of(e, c.pihat_last, st.theta1, st.Y);
}

KBounds bounds_K(const SymmetricEconomy& e, int n, double A) {
  const ParamSet& p = e.p;
  if (n < 1 || n > sym_max_n(e)) throw InfeasibleShares("bounds_K: infeasible n");
  // profit of the class-marginal firm is Q * K^{exp_Y_K}; bounds solve
  // profit = c for the n-th firm (lower) and the (n+1)-entrant (upper)
  const Mix s = mix_sums(e, n, 0.0);
  const SymAggregates st = assemble(e, s, 1.0, A);
  const double q1 = profit_of(e, 1.0, st.theta1, st.Y);  // per unit pihat at K=1
  const double c = e.c_eff();
  KBounds b;
  const double pin = class_eq(e.gamma_c, n, p).pihat_last;
  b.lower = std::pow(c / (q1 * pin), 1.0 / p.exp_Y_K());
  if (n < sym_max_n(e)) {
    const double pent = class_entrant_pihat(e.gamma_c, n + 1, p);
    b.upper = std::pow(c / (q1 * pent), 1.0 / p.exp_Y_K());
  } else {
    b.upper = std::numeric_limits<double>::infinity();
  }
  return b;
}

KBounds bounds_K(const std::vector<double>& gamma_active, int n, double c, const ParamSet& p0) {
  SymmetricEconomy e;
  e.p = p0;
  e.p.c = c;
  e.f = 1.0;
  e.gamma_c = gamma_active;
  return bounds_K(e, n);
}

AsymState asymmetric_state_at_m(const SymmetricEconomy& e, int n, double m, double K, double A) {
  const SymAggregates st = assemble(e, mix_sums(e, n, m), K, A);
  return {m, st.Y, st.phi, st.theta1, st.omega, st.R};
}

AsymState asymmetric_region_solve(const SymmetricEconomy& e, int n, double K, double A) {
  const ParamSet& p = e.p;
  const double c = e.c_eff();
  const double pent = class_entrant_pihat(e.gamma_c, n + 1, p);
  auto surplus = [&](double m) {
    const SymAggregates st = assemble(e, mix_sums(e, n, m), K, A);
    return profit_of(e, pent, st.theta1, st.Y) - c;
  };
  const double s0 = surplus(0.0), s1 = surplus(1.0);
  if (s0 < 0.0 || s1 > 0.0) {
    // outside the transition band up to roundoff
    const double tol = 1e-9 * c;
    if (s0 < -tol && s1 < 0.0) throw DomainError("asymmetric_region_solve: K below the band");
    if (s1 > tol && s0 > 0.0) throw DomainError("asymmetric_region_solve: K above the band");
  }
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (surplus(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return asymmetric_state_at_m(e, n, 0.5 * (lo + hi), K, A);
}

SymPoint sym_rental_rate(const SymmetricEconomy& e, double K, double A) {
  const int cap = e.f > 0.0 ? sym_max_n(e) : 0;
  // max-firm-count selection: highest n whose lower bound is below K
  int n = 0;
  KBounds bn{0.0, std::numeric_limits<double>::infinity()};
  for (int k = cap; k >= 1; --k) {
    const KBounds b = bounds_K(e, k, A);
    if (K >= b.lower) { n = k; bn = b; break; }
  }
  if (n == 0 && e.f >= 1.0)
    throw DomainError("sym_rental_rate: no concentrated firm viable at this K");
  SymAggregates st{};
  double n_mean = 0.0;
  if (n == 0) {
    st = assemble(e, mix_sums(e, 0, 0.0), K, A);
  } else if (K <= bn.upper || n == cap) {
    st = symmetric_state(e, n, K, A);
    n_mean = n;
  } else {
    const AsymState as = asymmetric_region_solve(e, n, K, A);
    st = assemble(e, mix_sums(e, n, as.m), K, A);
    n_mean = n + as.m;
  }
  return {st.R, n_mean, st.theta1, st.Y, st.omega, st.phi, st.salesw_markup};
}

bool multiplicity_condition(const SymmetricEconomy& e, int n) {
  const ParamSet& p = e.p;
  (void)p;
  if (n < 1 || n >= sym_max_n(e)) return false;
  const KBounds bn = bounds_K(e, n);
  const KBounds bn1 = bounds_K(e, n + 1);
  const double theta_n = symmetric_state(e, n, 1.0).theta1;
  const double theta_n1 = symmetric_state(e, n + 1, 1.0).theta1;
  const double mid = p.r_star() / (p.alpha * std::pow(1.0 - p.alpha, p.exp_Y_theta()));
  const double lhs = std::pow(theta_n, p.exp_R_theta()) * std::pow(bn.upper, -p.exp_R_K());
  const double rhs = std::pow(theta_n1, p.exp_R_theta()) * std::pow(bn1.lower, -p.exp_R_K());
  return lhs < mid && mid < rhs;
}

bool multiplicity_condition(const std::vector<double>& gamma_active, int n, const ParamSet& p0) {
  SymmetricEconomy e;
  e.p = p0;
  e.f = 1.0;
  e.gamma_c = gamma_active;
  return multiplicity_condition(e, n);
}

std::vector<double> apply_mps(const std::vector<double>& gamma, double spread, double rho) {
  const int n = static_cast<int>(gamma.size());
  if (spread < 0.0) throw DomainError("apply_mps: spread must be nonnegative");
  if (spread == 0.0) return gamma;
  if (n < 2) throw DomainError("apply_mps: need at least two active firms");
  std::vector<double> out(gamma);
  if (n == 2) {
    out[0] = gamma[0] + spread;
    out[1] = gamma[1] - spread;
  } else {
    const double kappa = 1.0 + spread;
    double top = 0.0, total = 0.0;
    for (double g : gamma) total += g;
    for (int j = 0; j < n - 1; ++j) {
      out[j] = kappa * gamma[j];
      top += out[j];
    }
    out[n - 1] = total - top;
  }
  if (!(out[n - 1] > 0.0)) throw DomainError("apply_mps: spread drives the last firm negative");
  for (int j = 1; j < n; ++j)
    if (out[j] > out[j - 1]) throw DomainError("apply_mps: ordering violated");
  if (feasible_n_eta1(std::span<const double>(out.data(), out.size()), n, rho) < n)
    throw DomainError("apply_mps: spread makes the smallest share infeasible");
  return out;
}

ConditionFlags sufficient_conditions(const ParamSet& p) {
  ConditionFlags f;
  f.unique_lhs = p.rho / (1.0 - p.rho);
  f.unique_rhs = (1.0 - p.alpha) / (p.nu + p.alpha);
  f.unique_symmetric = f.unique_lhs > f.unique_rhs;
  f.mps2_lhs = p.rho;
  f.mps2_rhs = 1.0 - p.nu * (1.0 - p.alpha) / (1.0 + p.nu * p.alpha);
  f.mps_fragility_n2 = f.mps2_lhs > f.mps2_rhs;
  f.mpsn_lhs = p.rho;
  f.mpsn_rhs = (1.0 + p.nu * p.alpha) / (1.0 + p.nu);
  f.mps_fragility_gen = f.mpsn_lhs > f.mpsn_rhs;
  return f;
}

}  // namespace fragsim

// ---- smooth grid builder -------------------------------------------------

#include "fragsim/economy.hpp"
#include "fragsim/parallel.hpp"

namespace fragsim {

bool symmetric_path_eligible(const ParamSet& p) {
  return p.lambda == 0.0 && (p.f == 0.0 || p.f == 1.0);
}

SymmetricEconomy make_symmetric(const TechnologySet& tech, const ParamSet& p) {
  SymmetricEconomy e;
  e.p = p;
  e.f = p.f;
  e.gamma_c.assign(tech.row(0), tech.row(0) + tech.M);
  e.gamma_u = e.gamma_c;
  return e;
}

GridSolution solve_grid_symmetric(const SymmetricEconomy& e,
                                  const std::vector<double>& K_grid,
                                  const std::vector<double>& logA_grid) {
  const ParamSet& p = e.p;
  GridSolution g;
  g.params = p;
  g.tech_seed = 0;
  g.K_grid = K_grid;
  g.logA_grid = logA_grid;
  const int nK = g.nK(), nA = g.nA();
  g.nodes.resize(static_cast<std::size_t>(nK) * nA);
  g.counts.assign(static_cast<std::size_t>(nK) * nA * p.I, 0);

  const int nconc = static_cast<int>(std::lround(e.f * p.I));
  std::vector<std::string> errors(nK * nA);
  parallel_for(0, nK * nA, [&](int node, int) {
    try {
      const int ik = node % nK, ia = node / nK;
      const double A = std::exp(logA_grid[ia]);
      const SymPoint pt = sym_rental_rate(e, K_grid[ik], A);
      GridNode& n = g.nodes[node];
      n.theta1 = pt.theta1;
      n.phi = pt.phi;
      n.omega = pt.omega;
      const double theta = A * pt.theta1;
      const double wtheta = (1.0 - p.alpha) * theta;
      n.L = std::pow(wtheta, p.exp_L_theta()) * std::pow(K_grid[ik], p.exp_L_K());
      n.Y = pt.Y;
      n.W = wtheta * std::pow(n.L, -p.alpha) * std::pow(K_grid[ik], p.alpha);
      n.R = pt.R;
      n.fc_drain = nconc * pt.n_mean_conc * e.c_eff();
      n.fixed_bill = n.fc_drain;
      n.fc_factor = 0.0;
      n.salesw_markup = pt.salesw_markup;
      n.n_conc = nconc * pt.n_mean_conc;
      // unconcentrated markets sit at their feasibility cap
      const int ucap = e.f < 1.0 ? (p.eta == 1.0
                                        ? feasible_n_eta1(std::span<const double>(
                                                              e.gamma_u.data(), e.gamma_u.size()),
                                                          p.M, p.rho)
                                        : p.M)
                                 : 0;
      n.n_total = n.n_conc + (p.I - nconc) * static_cast<double>(ucap);
      // rounded allocation for the per-market count columns
      std::uint8_t* counts = g.counts.data() + static_cast<std::size_t>(node) * p.I;
      const int base = static_cast<int>(std::floor(pt.n_mean_conc));
      const int extra = static_cast<int>(std::lround((pt.n_mean_conc - base) * nconc));
      for (int i = 0; i < nconc; ++i)
        counts[i] = static_cast<std::uint8_t>(i < extra ? base + 1 : base);
      for (int i = nconc; i < p.I; ++i) counts[i] = static_cast<std::uint8_t>(ucap);
      n.warning = 0;
    } catch (const std::exception& ex) {
      errors[node] = ex.what();
    }
  });
  for (int node = 0; node < nK * nA; ++node)
    if (!errors[node].empty())
      throw DomainError("solve_grid_symmetric: node " + std::to_string(node) + ": " +
                        errors[node]);
  return g;
}

}  // namespace fragsim
