#include "fragsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include "fragsim/parallel.hpp"
#include "fragsim/rng.hpp"

namespace fragsim {

double percentile(std::vector<double> v, double pct) {
  if (v.empty()) throw DomainError("percentile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = pct / 100.0 * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= v.size()) return v.back();
  const double t = pos - lo;
  return (1.0 - t) * v[lo] + t * v[lo + 1];
}

SolvedModel solve_model(const TechnologySet& tech, const ParamSet& p,
                        const SolveOptionsModel& opt) {
  SolvedModel m;
  m.tech = tech;
  m.params = p;
  m.symmetric_path = symmetric_path_eligible(p);
  m.tables = build_market_tables(tech, p);

  SymmetricEconomy sym;
  if (m.symmetric_path) {
    sym = make_symmetric(tech, p);
    m.K_high_det = find_high_steady_state(sym);
  } else {
    m.K_high_det = find_high_steady_state(tech, p, m.tables);
  }

  std::vector<double> K_grid(opt.n_K);
  for (int i = 0; i < opt.n_K; ++i)
    K_grid[i] = m.K_high_det * (opt.k_lo + (opt.k_hi - opt.k_lo) * i /
                                               std::max(1, opt.n_K - 1));
  m.chain = (opt.n_A <= 1 || p.sigma_eps == 0.0)
                ? degenerate_chain()
                : tauchen(p.phi_A, p.sigma_eps, opt.n_A, opt.tauchen_width);
  m.grid = m.symmetric_path ? solve_grid_symmetric(sym, K_grid, m.chain.states)
                            : solve_grid(tech, p, m.tables, K_grid, m.chain.states);
  PolicyOptions popt;
  popt.tol = opt.policy_tol;
  m.policy = solve_policy(m.grid, m.chain, popt);
  m.a0_index = 0;
  for (int i = 1; i < m.chain.n(); ++i)
    if (std::fabs(m.chain.states[i]) < std::fabs(m.chain.states[m.a0_index])) m.a0_index = i;
  m.K_high = stochastic_steady_state(m.policy, m.grid, m.K_high_det);
  return m;
}

namespace {

// lean simulation step shared by the Monte Carlo exercises: identical
// arithmetic to simulate_chain but records only log Y
struct LeanSim {
  const SolvedModel& m;
  double logY_at(double K, int ia) const {
    const BlendedState st = query_state(m.grid, K, m.chain.states[ia]);
    return std::log(st.Y);
  }
  // advances (K, ia); returns log Y of the period just recorded
  double step(double& K, int& ia, Rng& rng) const {
    const ParamSet& p = m.params;
    const BlendedState st = query_state(m.grid, K, m.chain.states[ia]);
    const double s = m.policy.interp_K(m.grid.K_grid, K, ia);
    const double logY = std::log(st.Y);
    double Kp = (1.0 - p.delta) * K + s * st.Y - st.fc_drain;
    Kp = std::min(std::max(Kp, m.grid.K_grid.front()), m.grid.K_grid.back());
    K = Kp;
    const double u = rng.next_uniform();
    const double* row = m.chain.row(ia);
    double acc = 0.0;
    int next = m.chain.n() - 1;
    for (int j = 0; j < m.chain.n(); ++j) {
      acc += row[j];
      if (u <= acc) { next = j; break; }
    }
    ia = next;
    return logY;
  }
};

}  // namespace

ErgodicSummary ergodic(const SolvedModel& m, long T_long, long burn_in, std::uint64_t seed) {
  const LeanSim sim{m};
  const double logY_high = sim.logY_at(m.K_high, m.a0_index);

  Rng rng(seed);
  double K = m.K_high;
  int ia = m.a0_index;
  for (long t = 0; t < burn_in; ++t) sim.step(K, ia, rng);

  const double bin_w = 0.005;
  const double lo_edge = -2.0, hi_edge = 1.0;
  const int nbin = static_cast<int>((hi_edge - lo_edge) / bin_w);
  std::vector<double> hist(nbin, 0.0);
  double sum = 0.0, sum2 = 0.0;
  for (long t = 0; t < T_long; ++t) {
    const double dev = sim.step(K, ia, rng) - logY_high;
    sum += dev;
    sum2 += dev * dev;
    int b = static_cast<int>((dev - lo_edge) / bin_w);
    b = std::min(std::max(b, 0), nbin - 1);
    hist[b] += 1.0;
  }
  ErgodicSummary out;
  out.mean_gap = sum / T_long;
  out.std_logY = std::sqrt(std::max(0.0, sum2 / T_long - out.mean_gap * out.mean_gap));

  // double moving-average smoothing, then mode finding
  auto smooth = [&](const std::vector<double>& x) {
    std::vector<double> y(x.size(), 0.0);
    const int w = 2;
    for (int i = 0; i < static_cast<int>(x.size()); ++i) {
      double acc = 0.0;
      int cnt = 0;
      for (int j = std::max(0, i - w); j <= std::min<int>(x.size() - 1, i + w); ++j) {
        acc += x[j];
        ++cnt;
      }
      y[i] = acc / cnt;
    }
    return y;
  };
  std::vector<double> sm = smooth(smooth(hist));
  // trim to occupied range for reporting
  int first = 0, last = nbin - 1;
  while (first < nbin && sm[first] == 0.0) ++first;
  while (last > first && sm[last] == 0.0) --last;
  for (int b = first; b <= last; ++b) {
    out.hist_centers.push_back(lo_edge + (b + 0.5) * bin_w);
    out.hist_mass.push_back(sm[b] / T_long);
  }

  struct Peak {
    int bin;
    double height;
  };
  std::vector<Peak> peaks;
  for (int b = first + 1; b < last; ++b) {
    if (sm[b] > sm[b - 1] && sm[b] >= sm[b + 1]) {
      if (!peaks.empty() && b - peaks.back().bin <= 8) {
        if (sm[b] > peaks.back().height) peaks.back() = {b, sm[b]};
      } else {
        peaks.push_back({b, sm[b]});
      }
    }
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& a, const Peak& b) { return a.height > b.height; });
  const double hmax = peaks.empty() ? 0.0 : peaks.front().height;
  // a mode must be non-negligible and separated from a higher one by a real
  // trough (at most 80% of its own height)
  std::vector<Peak> main;
  for (const auto& pk : peaks) {
    if (pk.height < 0.08 * hmax) continue;
    bool distinct = true;
    for (const auto& acc : main) {
      const int b0 = std::min(pk.bin, acc.bin), b1 = std::max(pk.bin, acc.bin);
      double trough = pk.height;
      for (int b = b0; b <= b1; ++b) trough = std::min(trough, sm[b]);
      if (trough > 0.8 * pk.height) { distinct = false; break; }
    }
    if (distinct) main.push_back(pk);
  }
  out.n_modes = static_cast<int>(main.size());
  if (main.size() >= 2) {
    out.bimodal = true;
    out.mode_gap = std::fabs(main[1].bin - main[0].bin) * bin_w;
  }
  return out;
}

std::vector<RecessionCell> recession_probabilities(const SolvedModel& m, const RecessionSpec& spec,
                                                   std::uint64_t seed) {
  for (double thr : spec.thresholds)
    if (!(thr >= 0.0 && thr < 1.0)) throw DomainError("recession threshold must lie in [0,1)");
  if (spec.min_duration < 1) throw DomainError("recession min_duration must be >= 1");
  const int Tmax = *std::max_element(spec.horizons.begin(), spec.horizons.end());
  const LeanSim sim{m};
  const double logY0 = sim.logY_at(m.K_high, m.a0_index);
  const int ncell = static_cast<int>(spec.thresholds.size() * spec.horizons.size());

  // per-replication hit masks, filled in parallel, reduced in order
  std::vector<std::uint8_t> hits(static_cast<std::size_t>(spec.n_sims) * ncell, 0);
  parallel_for(0, spec.n_sims, [&](int rep, int) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    double K = m.K_high;
    int ia = m.a0_index;
    std::vector<double> dev(Tmax);
    for (int t = 0; t < Tmax; ++t) dev[t] = sim.step(K, ia, rng) - logY0;
    int cell = 0;
    for (double thr : spec.thresholds) {
      for (int T : spec.horizons) {
        int run = 0;
        bool hit = false;
        for (int t = 0; t < T && !hit; ++t) {
          run = dev[t] <= -thr ? run + 1 : 0;
          if (run >= spec.min_duration) hit = true;
        }
        hits[static_cast<std::size_t>(rep) * ncell + cell] = hit ? 1 : 0;
        ++cell;
      }
    }
  });

  std::vector<RecessionCell> out;
  int cell = 0;
  for (double thr : spec.thresholds) {
    for (int T : spec.horizons) {
      long count = 0;
      for (int rep = 0; rep < spec.n_sims; ++rep)
        count += hits[static_cast<std::size_t>(rep) * ncell + cell];
      const double prob = static_cast<double>(count) / spec.n_sims;
      out.push_back({thr, T, prob, 1.96 * std::sqrt(prob * (1.0 - prob) / spec.n_sims)});
      ++cell;
    }
  }
  return out;
}

IrfResult irf(const SolvedModel& m, const std::vector<double>& eps_profile, int horizon) {
  if (horizon < 1) throw DomainError("irf: horizon must be positive");
  std::vector<double> eps(horizon - 1, 0.0);
  std::vector<double> zero(horizon - 1, 0.0);
  for (std::size_t i = 0; i < eps_profile.size() && i < eps.size(); ++i) eps[i] = eps_profile[i];
  IrfResult out;
  out.base = simulate_eps(m.policy, m.grid, zero, m.K_high, 0.0);
  out.shocked = simulate_eps(m.policy, m.grid, eps, m.K_high, 0.0);
  out.dlogY.resize(horizon);
  out.dlogN_conc.resize(horizon);
  out.d_measured_tfp.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    out.dlogY[t] = std::log(out.shocked.Y[t] / out.base.Y[t]);
    out.dlogN_conc[t] = out.base.n_conc[t] > 0.0 && out.shocked.n_conc[t] > 0.0
                            ? std::log(out.shocked.n_conc[t] / out.base.n_conc[t])
                            : 0.0;
    out.d_measured_tfp[t] = std::log(out.shocked.measured_tfp[t] / out.base.measured_tfp[t]);
  }
  return out;
}

std::vector<double> invert_tfp_shocks(const SolvedModel& m, const std::vector<double>& target_dev,
                                      double tol) {
  const ParamSet& p = m.params;
  if (target_dev.size() > 24)
    throw DomainError("invert_tfp_shocks: target path longer than 24 quarters");
  const double span = m.chain.states.back() - m.chain.states.front();
  const double a_bound = m.chain.states.back() + 0.25 * span;

  const BlendedState st0 = query_state(m.grid, m.K_high, 0.0);
  const double log_m0 = std::log(st0.phi);  // log measured TFP at the start (a=0)

  std::vector<double> eps;
  double K = m.K_high, a = 0.0;
  for (std::size_t t = 0; t < target_dev.size(); ++t) {
    // K advances with the current state, independent of the next innovation
    const BlendedState st = query_state(m.grid, K, a);
    const double s = m.policy.interp(m.grid.K_grid, m.grid.logA_grid, K, a);
    double Kp = (1.0 - p.delta) * K + s * st.Y - st.fc_drain;
    Kp = std::min(std::max(Kp, m.grid.K_grid.front()), m.grid.K_grid.back());

    auto dev_of = [&](double e) {
      const double ap = p.phi_A * a + e;
      const BlendedState stp = query_state(m.grid, Kp, ap);
      return ap + std::log(stp.phi) - log_m0;
    };
    double lo = -0.5, hi = 0.5;
    if (dev_of(lo) > target_dev[t] || dev_of(hi) < target_dev[t])
      throw DomainError("invert_tfp_shocks: quarter " + std::to_string(t + 1) +
                        ": target outside the +/-0.5 innovation bound");
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (dev_of(mid) < target_dev[t]) lo = mid;
      else hi = mid;
    }
    const double e = 0.5 * (lo + hi);
    const double ap = p.phi_A * a + e;
    if (std::fabs(ap) > a_bound)
      throw DomainError("invert_tfp_shocks: quarter " + std::to_string(t + 1) +
                        ": required log A " + std::to_string(ap) +
                        " beyond the chain support bound " + std::to_string(a_bound));
    eps.push_back(e);
    K = Kp;
    a = ap;
  }
  return eps;
}

CrisisReport crisis_experiment(const SolvedModel& m, const std::vector<double>& target_dev,
                               int horizon, const std::vector<int>& offsets) {
  CrisisReport rep;
  rep.eps = invert_tfp_shocks(m, target_dev);
  std::vector<double> eps(horizon - 1, 0.0);
  for (std::size_t i = 0; i < rep.eps.size() && i < eps.size(); ++i) eps[i] = rep.eps[i];
  rep.path = simulate_eps(m.policy, m.grid, eps, m.K_high, 0.0);
  const SimPath& s = rep.path;
  for (int off : offsets) {
    if (off >= s.T()) continue;
    CrisisRow row;
    row.offset = off;
    row.output = std::log(s.Y[off] / s.Y[0]);
    row.measured_tfp = std::log(s.measured_tfp[off] / s.measured_tfp[0]);
    row.hours = std::log(s.L[off] / s.L[0]);
    row.investment = std::log(s.investment[off] / s.investment[0]);
    row.labor_share = s.labor_share[off] - s.labor_share[0];
    row.profit_share = s.profit_share[off] - s.profit_share[0];
    row.agg_markup = s.agg_markup[off] - s.agg_markup[0];
    row.log_firms_conc =
        s.n_conc[0] > 0.0 ? std::log(s.n_conc[off] / s.n_conc[0]) : 0.0;
    rep.rows.push_back(row);
  }
  return rep;
}

MomentReport moments_at(const TechnologySet& tech, const ParamSet& p, const MarketTables& tables,
                        double K, double A) {
  const FirmSetResult r = solve_firm_set(tech, p, tables, K, A);
  const std::vector<std::uint8_t>& counts = r.firm_set.counts;
  const double Y = r.state.Y;
  const double w = p.agg_weights == AggWeights::Mean ? 1.0 / p.I : 1.0;
  const double T = std::pow(r.state.theta1, p.rho / (1.0 - p.rho));
  const double cscale = p.c_unit * (static_cast<double>(p.I_ref > 0 ? p.I_ref : p.I) / p.I);

  MomentReport mom;
  std::vector<double> hhis;
  hhis.reserve(tech.I);
  double rev_mu = 0.0, rev_total = 0.0, cost_mu = 0.0, cost_total = 0.0;
  double emp_conc = 0.0, emp_all = 0.0;
  double logrev_sum = 0.0, logrev_sum2 = 0.0;
  long n_active = 0;
  std::vector<double> fr;
  long conc_markets = 0, conc_firms = 0;

  for (int i = 0; i < tech.I; ++i) {
    const int n = counts[i];
    const bool conc = tech.concentrated(i);
    if (conc) {
      ++conc_markets;
      conc_firms += n;
    }
    if (n == 0) continue;
    const MarketEq eq =
        solve_market_auto(std::span<const double>(tech.row(i), static_cast<std::size_t>(n)), p);
    const double si = w * eq.tpow / T;
    hhis.push_back(eq.hhi);
    const double cthr = tech.fixed_cost[i] * cscale;
    for (int j = 0; j < n; ++j) {
      const double rev = si * eq.shares[j];
      const double cost = rev / eq.markups[j];
      rev_mu += rev * eq.markups[j];
      rev_total += rev;
      cost_mu += cost * eq.markups[j];
      cost_total += cost;
      emp_all += cost;
      const double lr = std::log(rev * Y);
      logrev_sum += lr;
      logrev_sum2 += lr * lr;
      ++n_active;
      if (conc) {
        emp_conc += cost;
        fr.push_back(cthr / (cthr + cost * Y));
      }
    }
  }
  mom.sales_weighted_markup = rev_mu / rev_total;
  mom.cost_weighted_markup = cost_mu / cost_total;
  const double mean_lr = logrev_sum / n_active;
  mom.std_log_revenue = std::sqrt(std::max(0.0, logrev_sum2 / n_active - mean_lr * mean_lr));
  mom.fixed_total_cost_ratio =
      fr.empty() ? 0.0 : std::accumulate(fr.begin(), fr.end(), 0.0) / fr.size();
  mom.emp_share_concentrated = emp_conc / emp_all;
  mom.mean_firms_concentrated =
      conc_markets > 0 ? static_cast<double>(conc_firms) / conc_markets : 0.0;
  mom.hhi_p10 = percentile(hhis, 10);
  mom.hhi_p25 = percentile(hhis, 25);
  mom.hhi_p50 = percentile(hhis, 50);
  mom.hhi_p75 = percentile(hhis, 75);
  mom.hhi_p90 = percentile(hhis, 90);
  return mom;
}

MomentReport moments(const TechnologySet& tech, const ParamSet& p, const MarketTables& tables) {
  const double K_high = find_high_steady_state(tech, p, tables);
  return moments_at(tech, p, tables, K_high, 1.0);
}

namespace {

struct WelfarePaths {
  std::vector<double> utility;           // per replication, discounted
  std::vector<std::vector<double>> C, W; // baseline paths for the CEV solve
  double max_tau_pi = 0.0;
};

WelfarePaths welfare_sims(const SolvedModel& m, double K0, const WelfareOptions& wopt,
                          bool keep_paths) {
  const ParamSet& p = m.params;
  WelfarePaths out;
  out.utility.assign(wopt.reps, 0.0);
  if (keep_paths) {
    out.C.assign(wopt.reps, {});
    out.W.assign(wopt.reps, {});
  }
  std::vector<double> worst_tau(parallel_threads(), 0.0);
  std::vector<std::string> errs(parallel_threads());
  parallel_for(0, wopt.reps, [&](int rep, int thread) {
    if (!errs[thread].empty()) return;
    try {
      Rng rng(derive_seed(wopt.seed, static_cast<std::uint64_t>(rep)));
      double K = std::min(std::max(K0, m.grid.K_grid.front()), m.grid.K_grid.back());
      int ia = m.a0_index;
      double disc = 1.0, util = 0.0;
      std::vector<double>*Cp = nullptr, *Wp = nullptr;
      if (keep_paths) {
        Cp = &out.C[rep];
        Wp = &out.W[rep];
        Cp->reserve(wopt.T);
        Wp->reserve(wopt.T);
      }
      for (int t = 0; t < wopt.T; ++t) {
        const BlendedState st = query_state(m.grid, K, m.chain.states[ia]);
        const double s = m.policy.interp_K(m.grid.K_grid, K, ia);
        const double C = (1.0 - s) * st.Y;
        util += disc * ghh_utility(p, C, st.W);
        disc *= p.beta;
        if (keep_paths) {
          Cp->push_back(C);
          Wp->push_back(st.W);
        }
        // balanced-budget profit tax this period
        const double fcb = st.fixed_bill;
        if (p.entry_subsidy > 0.0 && fcb > 0.0) {
          const double profit_net = (1.0 - st.omega) * st.Y - (1.0 - p.entry_subsidy) * fcb;
          const double tau_pi = p.entry_subsidy * fcb / profit_net;
          worst_tau[thread] = std::max(worst_tau[thread], tau_pi);
        }
        double Kp = (1.0 - p.delta) * K + s * st.Y - st.fc_drain;
        Kp = std::min(std::max(Kp, m.grid.K_grid.front()), m.grid.K_grid.back());
        K = Kp;
        const double u = rng.next_uniform();
        const double* row = m.chain.row(ia);
        double acc = 0.0;
        int next = m.chain.n() - 1;
        for (int j = 0; j < m.chain.n(); ++j) {
          acc += row[j];
          if (u <= acc) { next = j; break; }
        }
        ia = next;
      }
      out.utility[rep] = util;
    } catch (const std::exception& e) {
      errs[thread] = e.what();
    }
  });
  for (const auto& e : errs)
    if (!e.empty()) throw DomainError(e);
  out.max_tau_pi = *std::max_element(worst_tau.begin(), worst_tau.end());
  return out;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / v.size();
}

}  // namespace

std::vector<PolicyPoint> policy_experiment(const TechnologySet& tech, const ParamSet& p0,
                                           const std::vector<double>& tau_f_grid,
                                           const SolveOptionsModel& sopt,
                                           const WelfareOptions& wopt) {
  std::vector<PolicyPoint> out;
  WelfarePaths base_paths;
  double K0 = 0.0;
  bool have_base = false;
  const ParamSet pbase = p0;

  for (double tf : tau_f_grid) {
    ParamSet p = p0;
    p.entry_subsidy = tf;
    check_invariants(p);
    const SolvedModel m = solve_model(tech, p, sopt);
    PolicyPoint pt;
    pt.tau_f = tf;
    pt.K_high = m.K_high;
    if (!have_base) {
      if (tf != 0.0)
        throw DomainError("policy_experiment: the tau_f grid must start at 0 (CEV baseline)");
      K0 = m.K_high;  // common starting capital for all policies
      base_paths = welfare_sims(m, K0, wopt, true);
      have_base = true;
      pt.welfare = mean_of(base_paths.utility);
      pt.cev = 0.0;
      pt.max_tau_pi = 0.0;
      out.push_back(pt);
      continue;
    }
    const WelfarePaths wp = welfare_sims(m, K0, wopt, false);
    pt.welfare = mean_of(wp.utility);
    pt.max_tau_pi = wp.max_tau_pi;
    pt.feasible = wp.max_tau_pi <= 1.0;

    // consumption-equivalent gain: scale baseline consumption by (1+lambda)
    auto welfare_scaled = [&](double lam) {
      double acc = 0.0;
      for (int rep = 0; rep < wopt.reps; ++rep) {
        double disc = 1.0, util = 0.0;
        const auto& C = base_paths.C[rep];
        const auto& W = base_paths.W[rep];
        for (int t = 0; t < static_cast<int>(C.size()); ++t) {
          util += disc * ghh_utility(pbase, (1.0 + lam) * C[t], W[t]);
          disc *= pbase.beta;
        }
        acc += util;
      }
      return acc / wopt.reps;
    };
    double lo = -0.5, hi = 2.0;
    while (welfare_scaled(hi) < pt.welfare && hi < 64.0) hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (welfare_scaled(mid) < pt.welfare) lo = mid;
      else hi = mid;
    }
    pt.cev = 0.5 * (lo + hi);
    out.push_back(pt);
  }
  return out;
}

}  // namespace fragsim
