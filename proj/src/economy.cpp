#include "fragsim/economy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "fragsim/kernels.hpp"
#include "fragsim/parallel.hpp"

namespace fragsim {

namespace {

double market_weight(const ParamSet& p) {
  return p.agg_weights == AggWeights::Mean ? 1.0 / p.I : 1.0;
}

struct Sums {
  double T = 0.0;   // sum_i w * g_i^{rho/(1-rho)}
  double U = 0.0;   // sum_i w * tpow_i * (eta - (eta-rho) HHI_i)
  double CF = 0.0;  // fixed-cost quantity over active firms (output units)
};

Sums full_sums(const TechnologySet& tech, const ParamSet& p, const MarketTables& tb,
               const std::uint8_t* counts, double cscale) {
  Sums s;
  const double w = market_weight(p);
  for (int i = 0; i < tech.I; ++i) {
    const int n = counts[i];
    if (n == 0) continue;
    const std::size_t k = tb.at(i, n);
    s.T += w * tb.tpow[k];
    s.U += w * tb.tpow[k] * tb.omega_w[k];
    s.CF += n * tech.fixed_cost[i] * cscale;
  }
  return s;
}

// Production-side quantities given the aggregate indices. In factor-bundle
// mode cf_out is the fixed-cost quantity to be produced from hired factors;
// the aggregate capital-labor ratio r solves r * L_supply(r) = K regardless
// of cf_out (fixed-cost bundles use the same factor mix as production).
struct Core {
  double theta, L, L_prod, K_prod, Y, W, R;
  bool feasible = true;
};

Core core_quantities(const ParamSet& p, double theta1, double phi, double K, double A,
                     double cf_out) {
  Core c;
  c.theta = A * theta1;
  const double wtheta = (1.0 - p.alpha) * c.theta;
  if (p.fixed_cost_mode == FixedCostMode::FinalGood || cf_out == 0.0) {
    c.L = std::pow(wtheta, p.exp_L_theta()) * std::pow(K, p.exp_L_K());
    c.L_prod = c.L;
    c.K_prod = K;
    c.Y = A * phi * std::pow(wtheta, p.exp_Y_theta()) * std::pow(K, p.exp_Y_K());
    c.W = wtheta * std::pow(c.L, -p.alpha) * std::pow(K, p.alpha);
    c.R = p.alpha * c.theta * std::pow(c.L, 1.0 - p.alpha) * std::pow(K, p.alpha - 1.0);
  } else {
    const double r = std::pow(K, p.nu / (p.nu + p.alpha)) *
                     std::pow(wtheta, -1.0 / (p.nu + p.alpha));
    c.L = std::pow(wtheta, 1.0 / p.nu) * std::pow(r, p.alpha / p.nu);
    c.L_prod = c.L - cf_out * std::pow(r, -p.alpha);
    if (!(c.L_prod > 1e-9 * c.L)) {
      c.feasible = false;
      c.L_prod = std::max(c.L_prod, 1e-300);
    }
    c.K_prod = r * c.L_prod;
    c.Y = A * phi * std::pow(c.L_prod, 1.0 - p.alpha) * std::pow(c.K_prod, p.alpha);
    c.W = wtheta * std::pow(r, p.alpha);
    c.R = p.alpha * c.theta * std::pow(r, p.alpha - 1.0);
  }
  return c;
}

AggregateState make_state(const TechnologySet& tech, const ParamSet& p, const MarketTables& tb,
                          const std::uint8_t* counts, double K, double A, const Sums& sums) {
  if (!(K > 0.0)) throw DomainError("static equilibrium: K must be positive");
  if (!(sums.T > 0.0)) throw DomainError("static equilibrium: no production (all markets empty)");
  AggregateState st;
  st.K = K;
  st.A = A;
  const double rr = p.rho / (1.0 - p.rho);
  st.theta1 = std::pow(sums.T, 1.0 / rr);
  st.omega = sums.U / sums.T;
  st.phi = st.theta1 / st.omega;
  const bool factor = p.fixed_cost_mode == FixedCostMode::FactorBundle;
  const Core c = core_quantities(p, st.theta1, st.phi, K, A, factor ? sums.CF : 0.0);
  if (!c.feasible)
    throw DomainError("static equilibrium: fixed costs exhaust factor capacity");
  st.theta = c.theta;
  st.L = c.L;
  st.L_prod = c.L_prod;
  st.K_prod = c.K_prod;
  st.Y = c.Y;
  st.W = c.W;
  st.R = c.R;
  st.gross_profit = (1.0 - st.omega) * st.Y;
  if (factor) {
    st.fixed_bill = st.theta * sums.CF;
    st.fc_drain = 0.0;
  } else {
    st.fixed_bill = sums.CF;
    st.fc_drain = sums.CF;
  }
  st.net_profit = st.gross_profit - st.fixed_bill;

  const double w = market_weight(p);
  double swmu = 0.0;
  int n_total = 0, n_conc = 0;
  for (int i = 0; i < tech.I; ++i) {
    const int n = counts[i];
    n_total += n;
    if (tech.concentrated(i)) n_conc += n;
    if (n == 0) continue;
    const std::size_t k = tb.at(i, n);
    swmu += w * tb.tpow[k] * tb.swmu[k];
  }
  st.salesw_markup = swmu / sums.T;
  st.n_total = n_total;
  st.n_conc = n_conc;
  return st;
}

// Lazy binary heap over (key, market); stale entries skipped via stamps.
template <typename Compare>
class LazyHeap {
 public:
  explicit LazyHeap(Compare cmp) : cmp_(cmp) {}
  void push(double key, int idx, std::vector<int>& stamps) {
    heap_.push_back({key, idx, ++stamps[idx]});
    std::push_heap(heap_.begin(), heap_.end(), cmp_);
  }
  // returns {key, idx} of the current best live entry, or idx=-1 if empty
  std::pair<double, int> top(const std::vector<int>& stamps) {
    while (!heap_.empty()) {
      const Entry& e = heap_.front();
      if (e.stamp == stamps[e.idx]) return {e.key, e.idx};
      std::pop_heap(heap_.begin(), heap_.end(), cmp_);
      heap_.pop_back();
    }
    return {0.0, -1};
  }

  struct Entry {
    double key;
    int idx;
    int stamp;
  };

 private:
  std::vector<Entry> heap_;
  Compare cmp_;
};

}  // namespace

int FirmSet::total() const {
  int n = 0;
  for (auto c : counts) n += c;
  return n;
}

int FirmSet::total_concentrated(const TechnologySet& t) const {
  int n = 0;
  for (int i = 0; i < t.I; ++i)
    if (t.concentrated(i)) n += counts[i];
  return n;
}

FirmSetResult solve_firm_set(const TechnologySet& tech, const ParamSet& p,
                             const MarketTables& tb, double K, double A) {
  if (!(K > 0.0)) throw DomainError("solve_firm_set: K must be positive");
  const double w = market_weight(p);
  const double rr = p.rho / (1.0 - p.rho);
  const double cscale = p.c_unit * (static_cast<double>(p.I_ref > 0 ? p.I_ref : p.I) / p.I);
  const bool factor = p.fixed_cost_mode == FixedCostMode::FactorBundle;

  FirmSet fs;
  fs.counts.resize(tech.I);
  for (int i = 0; i < tech.I; ++i) fs.counts[i] = tb.max_n[i];

  // markets with a positive fixed cost are the only ones with an extensive margin
  std::vector<int> conc;
  conc.reserve(tech.n_concentrated);
  for (int i = 0; i < tech.I; ++i)
    if (tech.concentrated(i)) conc.push_back(i);

  Sums sums = full_sums(tech, p, tb, fs.counts.data(), cscale);

  if (!conc.empty() && sums.T > 0.0) {
    const int nc = static_cast<int>(conc.size());
    // per concentrated market: profit coefficient of its marginal (last
    // active) firm, and of the would-be entrant
    auto cur_pi = [&](int j) {
      const int i = conc[j];
      const int n = fs.counts[i];
      return n == 0 ? std::numeric_limits<double>::infinity() : tb.pihat[tb.at(i, n)];
    };
    auto entry_pi = [&](int j) {
      const int i = conc[j];
      const int n = fs.counts[i];
      return n >= tb.max_n[i] ? -std::numeric_limits<double>::infinity()
                              : tb.pihat[tb.at(i, n + 1)];
    };
    auto cthr = [&](int j) { return tech.fixed_cost[conc[j]] * cscale; };

    // ordering by profit coefficient alone is exact when all concentrated
    // markets share one fixed cost (q and theta multiply every candidate)
    bool uniform_c = true;
    for (int j = 1; j < nc; ++j)
      if (cthr(j) != cthr(0)) { uniform_c = false; break; }

    auto mincmp = [](const auto& a, const auto& b) { return a.key > b.key; };
    auto maxcmp = [](const auto& a, const auto& b) { return a.key < b.key; };
    LazyHeap<decltype(mincmp)> worst_heap(mincmp);
    LazyHeap<decltype(maxcmp)> entry_heap(maxcmp);
    std::vector<int> wstamp(nc, 0), estamp(nc, 0);
    if (uniform_c) {
      for (int j = 0; j < nc; ++j) {
        worst_heap.push(cur_pi(j), j, wstamp);
        entry_heap.push(entry_pi(j), j, estamp);
      }
    }
    std::vector<double> scan(nc);

    const long round_cap = 10L * tech.I * tech.M;
    bool allow_entry = true;
    const double tol_del = 1e-10, tol_ent = 1e-8;

    auto update_market = [&](int j, int delta) {
      const int i = conc[j];
      const int n0 = fs.counts[i];
      if (n0 > 0) {
        const std::size_t k = tb.at(i, n0);
        sums.T -= w * tb.tpow[k];
        sums.U -= w * tb.tpow[k] * tb.omega_w[k];
        sums.CF -= n0 * cthr(j);
      }
      fs.counts[i] = static_cast<std::uint8_t>(n0 + delta);
      const int n1 = fs.counts[i];
      if (n1 > 0) {
        const std::size_t k = tb.at(i, n1);
        sums.T += w * tb.tpow[k];
        sums.U += w * tb.tpow[k] * tb.omega_w[k];
        sums.CF += n1 * cthr(j);
      }
      if (uniform_c) {
        worst_heap.push(cur_pi(j), j, wstamp);
        entry_heap.push(entry_pi(j), j, estamp);
      }
    };

    while (true) {
      if ((fs.rounds & 0xFFF) == 0xFFF)  // shed incremental fp drift
        sums = full_sums(tech, p, tb, fs.counts.data(), cscale);
      if (!(sums.T > 0.0)) break;  // economy died; caller sees the error below

      // aggregates for this round
      const double theta1 = std::pow(sums.T, 1.0 / rr);
      const double omega = sums.U / sums.T;
      const double phi = theta1 / omega;
      const Core c = core_quantities(p, theta1, phi, K, A, factor ? sums.CF : 0.0);
      if (!c.feasible)
        throw DomainError("solve_firm_set: fixed costs exhaust factor capacity");
      const double q = w * std::pow(theta1, -rr) * c.Y;
      // entry margin pays (1 - tau_f) of the cost; resource sums keep full c
      const double thr_scale = (factor ? c.theta : 1.0) * (1.0 - p.entry_subsidy);

      int jdel = -1, jent = -1;
      if (uniform_c) {
        auto [key, j] = worst_heap.top(wstamp);
        if (j >= 0 && key * q < (1.0 - tol_del) * thr_scale * cthr(j) &&
            !std::isinf(key))
          jdel = j;
        if (jdel < 0 && allow_entry) {
          auto [ekey, ej] = entry_heap.top(estamp);
          if (ej >= 0 && ekey * q > (1.0 + tol_ent) * thr_scale * cthr(ej)) jent = ej;
        }
      } else {
        for (int j = 0; j < nc; ++j) {
          const double pi = cur_pi(j);
          scan[j] = std::isinf(pi) ? std::numeric_limits<double>::infinity()
                                   : pi * q - thr_scale * cthr(j);
        }
        const int j = static_cast<int>(kernels().argmin(scan.data(), nc));
        if (scan[j] < -tol_del * thr_scale * cthr(j)) jdel = j;
        if (jdel < 0 && allow_entry) {
          for (int jj = 0; jj < nc; ++jj) {
            const double pi = entry_pi(jj);
            scan[jj] = std::isinf(pi) ? -std::numeric_limits<double>::infinity()
                                      : pi * q - thr_scale * cthr(jj);
          }
          const int je = static_cast<int>(kernels().argmax(scan.data(), nc));
          if (scan[je] > tol_ent * thr_scale * cthr(je)) jent = je;
        }
      }

      if (jdel >= 0) {
        update_market(jdel, -1);
      } else if (jent >= 0) {
        update_market(jent, +1);
      } else {
        break;  // free entry slack
      }
      if (++fs.rounds > round_cap && allow_entry) {
        // oscillation guard: finish with pure deletion to a loss-free config
        fs.warning = true;
        allow_entry = false;
      }
    }
    sums = full_sums(tech, p, tb, fs.counts.data(), cscale);
  }

  FirmSetResult out;
  out.state = make_state(tech, p, tb, fs.counts.data(), K, A, sums);
  out.firm_set = std::move(fs);
  return out;
}

AggregateState static_equilibrium(const TechnologySet& tech, const ParamSet& p,
                                  const MarketTables& tb,
                                  const std::vector<std::uint8_t>& counts, double K, double A) {
  const double cscale = p.c_unit * (static_cast<double>(p.I_ref > 0 ? p.I_ref : p.I) / p.I);
  return make_state(tech, p, tb, counts.data(), K, A,
                    full_sums(tech, p, tb, counts.data(), cscale));
}

AggregateState static_equilibrium_variable_fc(const TechnologySet& tech, const ParamSet& p,
                                              const MarketTables& tb,
                                              const std::vector<std::uint8_t>& counts, double K,
                                              double A) {
  if (p.fixed_cost_mode != FixedCostMode::FactorBundle)
    throw DomainError("static_equilibrium_variable_fc requires fixed_cost_mode=factor_bundle");
  return static_equilibrium(tech, p, tb, counts, K, A);
}

AggIndices aggregate_indices(const TechnologySet& tech, const ParamSet& p,
                             const std::vector<std::uint8_t>& counts, double A) {
  const double w = market_weight(p);
  const double rr = p.rho / (1.0 - p.rho);
  AggIndices out;
  std::vector<MarketEq> eqs(tech.I);
  parallel_for(0, tech.I, [&](int i, int) {
    const int n = counts[i];
    if (n == 0) return;
    eqs[i] = solve_market_auto(
        std::span<const double>(tech.row(i), static_cast<std::size_t>(n)), p);
  });
  double T = 0.0;
  for (int i = 0; i < tech.I; ++i)
    if (counts[i] > 0) T += w * eqs[i].tpow;
  if (!(T > 0.0)) throw DomainError("aggregate_indices: economy has no production");
  out.theta1 = std::pow(T, 1.0 / rr);
  out.theta = A * out.theta1;

  out.market_share.assign(tech.I, 0.0);
  double om11 = 0.0, om12 = 0.0;
  for (int i = 0; i < tech.I; ++i) {
    if (counts[i] == 0) continue;
    const MarketEq& eq = eqs[i];
    const double si = w * eq.tpow / T;
    out.market_share[i] = si;
    double inner = 0.0;  // sum_j s_ij / mu_ij
    for (int j = 0; j < eq.n; ++j) inner += eq.shares[j] / eq.markups[j];
    om11 += si * inner;
    om12 += si * (p.eta - (p.eta - p.rho) * eq.hhi);
  }
  out.omega_eq11 = om11;
  out.omega_eq12 = om12;
  out.omega = om11;
  out.phi_identity = out.theta1 / out.omega;

  // TFP-weight route: Phi = [sum_i w (sum_j (gamma_ij l_ij/L)^eta)^(rho/eta)]^(1/rho)
  // with labor allocated by variable-cost shares.
  double acc = 0.0;
  for (int i = 0; i < tech.I; ++i) {
    if (counts[i] == 0) continue;
    const MarketEq& eq = eqs[i];
    const double* g = tech.row(i);
    double inner = 0.0;
    for (int j = 0; j < eq.n; ++j) {
      const double lam = out.market_share[i] * eq.shares[j] / (eq.markups[j] * out.omega);
      inner += std::pow(g[j] * lam, p.eta);
    }
    acc += w * std::pow(inner, p.rho / p.eta);
  }
  out.phi = std::pow(acc, 1.0 / p.rho);
  return out;
}

MarketAggregates tfp_weights(const TechnologySet& tech, const ParamSet& p,
                             const std::vector<std::uint8_t>& counts, double A) {
  const AggIndices idx = aggregate_indices(tech, p, counts, A);
  MarketAggregates out;
  out.omega_weights.resize(tech.I);
  for (int i = 0; i < tech.I; ++i) {
    const int n = counts[i];
    if (n == 0) continue;
    const MarketEq eq = solve_market_auto(
        std::span<const double>(tech.row(i), static_cast<std::size_t>(n)), p);
    out.omega_weights[i].resize(n);
    const double* g = tech.row(i);
    for (int j = 0; j < n; ++j)
      out.omega_weights[i][j] =
          g[j] * idx.market_share[i] * eq.shares[j] / (eq.markups[j] * idx.omega);
  }
  out.phi_recomposed = idx.phi;
  return out;
}

SlacknessReport audit_free_entry(const TechnologySet& tech, const ParamSet& p,
                                 const std::vector<std::uint8_t>& counts, double K, double A,
                                 double tol) {
  const double cscale = p.c_unit * (static_cast<double>(p.I_ref > 0 ? p.I_ref : p.I) / p.I);
  const double w = market_weight(p);
  const AggIndices idx = aggregate_indices(tech, p, counts, A);
  // profits need Y: reconstruct from the closed forms
  double CF = 0.0;
  for (int i = 0; i < tech.I; ++i) CF += counts[i] * tech.fixed_cost[i] * cscale;
  const bool factor = p.fixed_cost_mode == FixedCostMode::FactorBundle;
  const Core c = core_quantities(p, idx.theta1, idx.theta1 / idx.omega, K, A, factor ? CF : 0.0);
  const double q = w * std::pow(idx.theta1, -p.rho / (1.0 - p.rho)) * c.Y;
  const double thr_scale = (factor ? c.theta : 1.0) * (1.0 - p.entry_subsidy);

  SlacknessReport rep;
  rep.worst_active_deficit = std::numeric_limits<double>::infinity();
  rep.best_entrant_surplus = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < tech.I; ++i) {
    if (!tech.concentrated(i)) continue;
    const double thr = thr_scale * tech.fixed_cost[i] * cscale;
    const int n = counts[i];
    std::span<const double> row(tech.row(i), static_cast<std::size_t>(tech.M));
    if (n > 0) {
      const MarketEq eq = solve_market_auto(row.subspan(0, n), p);
      for (int j = 0; j < n; ++j) {
        const double deficit = eq.profit_coeff[j] * q - thr;
        rep.worst_active_deficit = std::min(rep.worst_active_deficit, deficit);
        if (deficit < -tol * std::max(1.0, thr)) ++rep.violations;
      }
    }
    const int cap = p.eta == 1.0 ? feasible_n_eta1(row, tech.M, p.rho) : tech.M;
    if (n < cap) {
      const MarketEq eq = solve_market_auto(row.subspan(0, n + 1), p);
      const double surplus = eq.profit_coeff[n] * q - thr;
      rep.best_entrant_surplus = std::max(rep.best_entrant_surplus, surplus);
      if (surplus > tol * std::max(1.0, thr)) ++rep.violations;
    }
  }
  rep.ok = rep.violations == 0;
  return rep;
}

GridSolution solve_grid(const TechnologySet& tech, const ParamSet& p, const MarketTables& tb,
                        const std::vector<double>& K_grid, const std::vector<double>& logA_grid) {
  for (std::size_t i = 1; i < K_grid.size(); ++i)
    if (!(K_grid[i] > K_grid[i - 1])) throw DomainError("solve_grid: K grid not increasing");
  for (std::size_t i = 1; i < logA_grid.size(); ++i)
    if (!(logA_grid[i] > logA_grid[i - 1]))
      throw DomainError("solve_grid: log A grid not increasing");

  GridSolution g;
  g.params = p;
  g.tech_seed = tech.seed;
  g.K_grid = K_grid;
  g.logA_grid = logA_grid;
  const int nK = g.nK(), nA = g.nA();
  g.nodes.resize(static_cast<std::size_t>(nK) * nA);
  g.counts.resize(static_cast<std::size_t>(nK) * nA * tech.I);

  std::vector<std::string> errors(nK * nA);
  parallel_for(0, nK * nA, [&](int node, int) {
    const int ik = node % nK, ia = node / nK;
    try {
      const double A = std::exp(logA_grid[ia]);
      FirmSetResult r = solve_firm_set(tech, p, tb, K_grid[ik], A);
      GridNode& n = g.nodes[node];
      const AggregateState& st = r.state;
      n.theta1 = st.theta1;
      n.phi = st.phi;
      n.omega = st.omega;
      n.Y = st.Y;
      n.L = st.L;
      n.W = st.W;
      n.R = st.R;
      n.fc_drain = st.fc_drain;
      n.fixed_bill = st.fixed_bill;
      n.fc_factor = p.fixed_cost_mode == FixedCostMode::FactorBundle && st.theta > 0.0
                        ? st.fixed_bill / st.theta
                        : 0.0;
      n.salesw_markup = st.salesw_markup;
      n.n_total = st.n_total;
      n.n_conc = st.n_conc;
      n.warning = r.firm_set.warning ? 1 : 0;
      std::copy(r.firm_set.counts.begin(), r.firm_set.counts.end(),
                g.counts.begin() + static_cast<std::size_t>(node) * tech.I);
    } catch (const std::exception& e) {
      errors[node] = e.what();
    }
  });
  for (int node = 0; node < nK * nA; ++node)
    if (!errors[node].empty())
      throw DomainError("solve_grid: node (k=" + std::to_string(node % nK) +
                        ", a=" + std::to_string(node / nK) + "): " + errors[node]);
  return g;
}

BlendedState query_state(const GridSolution& grid, double K, double logA, bool* clamped) {
  const auto& Ks = grid.K_grid;
  const auto& As = grid.logA_grid;
  bool clip = false;
  auto locate = [&clip](const std::vector<double>& v, double x, int& lo, double& t) {
    const int n = static_cast<int>(v.size());
    if (n == 1) { lo = 0; t = 0.0; return; }
    if (x <= v.front()) { lo = 0; t = 0.0; clip = clip || x < v.front(); return; }
    if (x >= v.back()) { lo = n - 2; t = 1.0; clip = clip || x > v.back(); return; }
    lo = static_cast<int>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) - 1;
    t = (x - v[lo]) / (v[lo + 1] - v[lo]);
  };
  int k0, a0;
  double tk, ta;
  locate(Ks, K, k0, tk);
  locate(As, logA, a0, ta);
  const int k1 = std::min(k0 + 1, grid.nK() - 1), a1 = std::min(a0 + 1, grid.nA() - 1);

  auto blend = [&](auto f) {
    const double v00 = f(grid.node(k0, a0)), v10 = f(grid.node(k1, a0));
    const double v01 = f(grid.node(k0, a1)), v11 = f(grid.node(k1, a1));
    return (1.0 - ta) * ((1.0 - tk) * v00 + tk * v10) + ta * ((1.0 - tk) * v01 + tk * v11);
  };

  BlendedState b;
  b.theta1 = blend([](const GridNode& n) { return n.theta1; });
  b.phi = blend([](const GridNode& n) { return n.phi; });
  b.omega = blend([](const GridNode& n) { return n.omega; });
  b.fc_drain = blend([](const GridNode& n) { return n.fc_drain; });
  b.fixed_bill = blend([](const GridNode& n) { return n.fixed_bill; });
  b.n_conc = blend([](const GridNode& n) { return n.n_conc; });
  b.n_total = blend([](const GridNode& n) { return n.n_total; });
  b.salesw_markup = blend([](const GridNode& n) { return n.salesw_markup; });
  const double fc_factor = blend([](const GridNode& n) { return n.fc_factor; });

  const ParamSet& p = grid.params;
  const double A = std::exp(logA);
  const Core c = core_quantities(p, b.theta1, b.phi, K, A, fc_factor);
  b.theta = c.theta;
  b.Y = c.Y;
  b.L = c.L;
  b.W = c.W;
  b.R = c.R;
  if (fc_factor > 0.0) b.fixed_bill = c.theta * fc_factor;
  if (clamped) *clamped = clip;
  return b;
}

}  // namespace fragsim
