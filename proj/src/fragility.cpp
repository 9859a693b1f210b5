#include "fragsim/fragility.hpp"

#include <algorithm>
#include <cmath>

#include "fragsim/parallel.hpp"

namespace fragsim {

RentalCurve rental_rate_map(const TechnologySet& tech, const ParamSet& p,
                            const MarketTables& tables, const std::vector<double>& K_grid,
                            double A) {
  RentalCurve c;
  c.K = K_grid;
  c.R.resize(K_grid.size());
  c.n_mean_conc.resize(K_grid.size());
  parallel_for(0, static_cast<int>(K_grid.size()), [&](int i, int) {
    const FirmSetResult r = solve_firm_set(tech, p, tables, K_grid[i], A);
    c.R[i] = r.state.R;
    c.n_mean_conc[i] =
        tech.n_concentrated > 0 ? static_cast<double>(r.state.n_conc) / tech.n_concentrated : 0.0;
  });
  c.eval = [&tech, &p, &tables, A](double K) {
    return solve_firm_set(tech, p, tables, K, A).state.R;
  };
  return c;
}

RentalCurve rental_rate_map(const SymmetricEconomy& e, const std::vector<double>& K_grid,
                            double A) {
  RentalCurve c;
  c.K = K_grid;
  c.R.resize(K_grid.size());
  c.n_mean_conc.resize(K_grid.size());
  parallel_for(0, static_cast<int>(K_grid.size()), [&](int i, int) {
    const SymPoint pt = sym_rental_rate(e, K_grid[i], A);
    c.R[i] = pt.R;
    c.n_mean_conc[i] = pt.n_mean_conc;
  });
  SymmetricEconomy copy = e;
  c.eval = [copy, A](double K) { return sym_rental_rate(copy, K, A).R; };
  return c;
}

SteadyStateSet find_steady_states(const RentalCurve& curve, const ParamSet& p) {
  SteadyStateSet out;
  out.r_star = p.r_star();
  const double rs = out.r_star;
  const int n = static_cast<int>(curve.K.size());
  int crossings = 0;
  for (int i = 0; i + 1 < n; ++i) {
    const double d0 = curve.R[i] - rs, d1 = curve.R[i + 1] - rs;
    if (d0 == 0.0) continue;  // counted by its bracket neighbour
    if (d0 * d1 > 0.0) continue;
    ++crossings;
    double lo = curve.K[i], hi = curve.K[i + 1];
    double flo = d0;
    for (int it = 0; it < 200 && (hi - lo) / hi > 1e-9; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = curve.eval(mid) - rs;
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double K = 0.5 * (lo + hi);
    SteadyState ss;
    ss.K = K;
    ss.R = rs;
    // the bracket sign pattern classifies the crossing even across a jump
    ss.kind = d0 > 0.0 ? SSKind::Stable : SSKind::Unstable;
    out.states.push_back(ss);
  }
  if (out.states.empty())
    throw DomainError("find_steady_states: no crossings (grid range excludes all steady states)");
  return out;
}

FragilityReport chi(const SteadyStateSet& ss) {
  FragilityReport rep;
  const SteadyState* last_unstable = nullptr;
  for (const auto& s : ss.states) {
    if (s.kind == SSKind::Unstable) {
      last_unstable = &s;
    } else if (s.kind == SSKind::Stable && last_unstable != nullptr) {
      rep.entries.push_back({s.K, last_unstable->K, last_unstable->K / s.K});
      last_unstable = nullptr;
    }
  }
  return rep;
}

namespace {

template <typename EvalR>
double high_ss_from_eval(const ParamSet& p, double K_ref, EvalR eval) {
  // geometric scan down from above the full-entry benchmark
  const double rs = p.r_star();
  std::vector<double> Ks;
  for (double k = 4.0 * K_ref; k > 1e-5 * K_ref; k /= 1.12) Ks.push_back(k);
  double hi = -1.0, lo = -1.0;
  for (std::size_t i = 0; i + 1 < Ks.size(); ++i) {
    double r0, r1;
    try {
      r0 = eval(Ks[i]);
      r1 = eval(Ks[i + 1]);
    } catch (const DomainError&) {
      break;  // K so low the economy has no production
    }
    if (r0 < rs && r1 >= rs) {
      hi = Ks[i];
      lo = Ks[i + 1];
      break;
    }
  }
  if (hi < 0.0) throw DomainError("find_high_steady_state: no crossing located");
  for (int it = 0; it < 200 && (hi - lo) / hi > 1e-10; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (eval(mid) < rs) hi = mid;
    else lo = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace

double find_high_steady_state(const TechnologySet& tech, const ParamSet& p,
                              const MarketTables& tables) {
  // full-entry factor index bounds R from above; K_ref solves R = r_star there
  std::vector<std::uint8_t> full(tech.I);
  for (int i = 0; i < tech.I; ++i) full[i] = tables.max_n[i];
  const AggregateState st = static_equilibrium(tech, p, tables, full, 1.0, 1.0);
  const double K_ref = std::pow(
      p.alpha * std::pow(1.0 - p.alpha, p.exp_Y_theta()) * std::pow(st.theta1, p.exp_R_theta()) /
          p.r_star(),
      1.0 / p.exp_R_K());
  return high_ss_from_eval(p, K_ref, [&](double K) {
    return solve_firm_set(tech, p, tables, K, 1.0).state.R;
  });
}

double find_high_steady_state(const SymmetricEconomy& e) {
  const ParamSet& p = e.p;
  const SymAggregates st = symmetric_state(e, sym_max_n(e), 1.0);
  const double K_ref = std::pow(
      p.alpha * std::pow(1.0 - p.alpha, p.exp_Y_theta()) * std::pow(st.theta1, p.exp_R_theta()) /
          p.r_star(),
      1.0 / p.exp_R_K());
  return high_ss_from_eval(p, K_ref, [&](double K) { return sym_rental_rate(e, K).R; });
}

LawOfMotion law_of_motion_deterministic(const GridSolution& grid, const SavingsPolicy& policy) {
  const ParamSet& p = grid.params;
  if (grid.nA() != 1 || policy.nA != 1)
    throw DomainError("law_of_motion_deterministic: needs a degenerate (single-state) chain");
  auto kprime = [&](double K) {
    const BlendedState st = query_state(grid, K, grid.logA_grid[0]);
    const double s = policy.interp_K(grid.K_grid, K, 0);
    return (1.0 - p.delta) * K + s * st.Y - st.fc_drain;
  };
  LawOfMotion lom;
  lom.K = grid.K_grid;
  lom.Kprime.resize(lom.K.size());
  for (std::size_t i = 0; i < lom.K.size(); ++i) lom.Kprime[i] = kprime(lom.K[i]);

  for (std::size_t i = 0; i + 1 < lom.K.size(); ++i) {
    const double d0 = lom.Kprime[i] - lom.K[i], d1 = lom.Kprime[i + 1] - lom.K[i + 1];
    if (d0 == 0.0 || d0 * d1 > 0.0) continue;
    double lo = lom.K[i], hi = lom.K[i + 1], flo = d0;
    for (int it = 0; it < 200 && (hi - lo) / hi > 1e-10; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = kprime(mid) - mid;
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double K = 0.5 * (lo + hi);
    const double h = 0.05 * (lom.K[i + 1] - lom.K[i]);
    const double slope = (kprime(K + h) - kprime(K - h)) / (2.0 * h);
    lom.crossings.push_back(
        {K, slope, std::fabs(slope) < 1.0 ? SSKind::Stable : SSKind::Unstable});
  }
  return lom;
}

}  // namespace fragsim
