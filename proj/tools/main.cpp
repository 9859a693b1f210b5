// fragsim: solve, simulate and analyze the oligopolistic growth model.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fragsim/economy.hpp"
#include "fragsim/experiments.hpp"
#include "fragsim/io.hpp"
#include "fragsim/kernels.hpp"
#include "fragsim/parallel.hpp"

using namespace fragsim;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config;
  std::string preset_name;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  std::string cache;
  std::uint64_t seed = 20240101;
  int threads = 0;
  std::string kernel = "auto";
  std::string scale = "paper";  // paper | desk
  int n_K = 0, n_A = 0;         // 0 = scale default
  double tauchen_width = 3.0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "flat key=value config file");
  cmd->add_option("--preset", a.preset_name, "parameter preset: y1975, y1990, y2007");
  cmd->add_option("--set", a.sets, "override: key=value (repeatable)");
  cmd->add_option("--out-dir", a.out_dir, "output directory");
  cmd->add_option("--cache", a.cache, "grid cache file (load if compatible, else solve+save)");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--threads", a.threads, "worker threads (default: env FRAGSIM_THREADS or all)");
  cmd->add_option("--kernel", a.kernel, "kernel lane: auto, scalar, avx2");
  cmd->add_option("--scale", a.scale, "paper (I=10000,70x11) or desk (I=2000,50x7)");
  cmd->add_option("--nk", a.n_K, "capital grid points (overrides scale)");
  cmd->add_option("--na", a.n_A, "TFP grid points (overrides scale)");
  cmd->add_option("--tauchen-width", a.tauchen_width, "Tauchen span in unconditional stds");
}

ParamSet resolve_params(const CommonArgs& a) {
  std::map<std::string, std::string> raw;
  if (!a.config.empty()) raw = parse_config_file(a.config);
  if (!a.preset_name.empty()) raw["preset"] = a.preset_name;
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw DomainError("--set expects key=value, got '" + kv + "'");
    raw[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  ParamSet p = validate_params(raw);
  if (a.scale == "desk" && raw.find("I") == raw.end()) {
    p.I = std::min(p.I, 2000);
    check_invariants(p);
  }
  return p;
}

SolveOptionsModel resolve_sopt(const CommonArgs& a) {
  SolveOptionsModel o;
  if (a.scale == "desk") {
    o.n_K = 50;
    o.n_A = 7;
  } else if (a.scale == "paper") {
    o.n_K = 70;
    o.n_A = 11;
  } else {
    throw DomainError("--scale must be paper or desk");
  }
  if (a.n_K > 0) o.n_K = a.n_K;
  if (a.n_A > 0) o.n_A = a.n_A;
  o.tauchen_width = a.tauchen_width;
  return o;
}

void apply_runtime(const CommonArgs& a) {
  if (a.threads > 0) set_parallel_threads(a.threads);
  if (a.kernel == "scalar") set_kernel_mode(KernelMode::Scalar);
  else if (a.kernel == "avx2") set_kernel_mode(KernelMode::Avx2);
  else if (a.kernel == "auto") set_kernel_mode(KernelMode::Auto);
  else throw DomainError("--kernel must be auto, scalar or avx2");
}

std::string run_tag(const CommonArgs& a) {
  std::string tag = a.preset_name.empty() ? "custom" : a.preset_name;
  return tag + "_s" + std::to_string(a.seed);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double sec() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

SolvedModel build_model(const CommonArgs& a, const ParamSet& p, const SolveOptionsModel& sopt,
                        std::vector<std::string>* outputs) {
  const TechnologySet tech = draw_technology(p, a.seed);
  if (!a.cache.empty() && grid_cache_matches(a.cache, p, a.seed)) {
    std::cerr << "cache hit: " << a.cache << "\n";
    SolvedModel m;
    m.tech = tech;
    m.params = p;
    m.symmetric_path = symmetric_path_eligible(p);
    m.tables = build_market_tables(tech, p);
    m.grid = load_grid_cache(a.cache);
    m.chain = (sopt.n_A <= 1 || p.sigma_eps == 0.0)
                  ? degenerate_chain()
                  : tauchen(p.phi_A, p.sigma_eps, sopt.n_A, sopt.tauchen_width);
    if (m.chain.n() != m.grid.nA())
      throw DomainError("cache grid A-dimension does not match the requested chain");
    PolicyOptions popt;
    m.policy = solve_policy(m.grid, m.chain, popt);
    m.a0_index = 0;
    for (int i = 1; i < m.chain.n(); ++i)
      if (std::fabs(m.chain.states[i]) < std::fabs(m.chain.states[m.a0_index])) m.a0_index = i;
    m.K_high_det = 0.5 * (m.grid.K_grid.front() + m.grid.K_grid.back());
    m.K_high = stochastic_steady_state(m.policy, m.grid, m.K_high_det);
    return m;
  }
  SolvedModel m = solve_model(tech, p, sopt);
  if (!a.cache.empty()) {
    save_grid_cache(a.cache, m.grid);
    if (outputs) outputs->push_back(a.cache);
  }
  return m;
}

void finish(const CommonArgs& a, const ParamSet& p, const std::string& subcommand,
            const Timer& timer, std::vector<std::string> outputs) {
  RunManifest man;
  man.subcommand = subcommand;
  man.param_hash = param_hash(p);
  man.seeds = {a.seed};
  man.wall_clock_sec = timer.sec();
  man.outputs = std::move(outputs);
  man.kernel = kernel_mode_name();
  man.threads = parallel_threads();
  const std::string path =
      a.out_dir + "/" + subcommand + "_" + run_tag(a) + ".manifest.json";
  write_manifest(path, man);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    out.push_back(std::stod(s.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

json steady_states_json(const SteadyStateSet& ss) {
  json arr = json::array();
  for (const auto& s : ss.states) {
    arr.push_back({{"K", s.K},
                   {"kind", s.kind == SSKind::Stable     ? "stable"
                            : s.kind == SSKind::Unstable ? "unstable"
                                                         : "degenerate"}});
  }
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fragsim: oligopolistic growth, firm entry and macro fragility"};
  app.require_subcommand(1);

  CommonArgs a;
  // subcommand-specific knobs
  long erg_T = 10000000, erg_burn = 10000;
  int rec_sims = 0, irf_horizon = 100, crisis_horizon = 132;
  std::string irf_shock = "small", thresholds = "0.10,0.15,0.20", horizons = "40,100";
  std::string tau_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string crisis_target;
  double crisis_anchor = -0.039;
  int crisis_quarters = 6;
  int welfare_reps = 2000, welfare_T = 1200;
  double frag_klo = 0.0, frag_khi = 0.0;
  int frag_n = 200;

  auto* c_grid = app.add_subcommand("solve-grid", "solve the (K, A) grid and write the cache");
  auto* c_sim = app.add_subcommand("simulate", "simulate one seeded path");
  auto* c_erg = app.add_subcommand("ergodic", "long-run distribution of log output");
  auto* c_rec = app.add_subcommand("recessions", "deep recession probabilities");
  auto* c_irf = app.add_subcommand("irf", "impulse responses to TFP innovations");
  auto* c_frag = app.add_subcommand("fragility", "steady states, chi and curves");
  auto* c_crisis = app.add_subcommand("crisis", "measured-TFP-matched crisis experiment");
  auto* c_pol = app.add_subcommand("policy", "entry-subsidy welfare curve");
  auto* c_mom = app.add_subcommand("moments", "calibration moments at the high steady state");
  for (auto* c : {c_grid, c_sim, c_erg, c_rec, c_irf, c_frag, c_crisis, c_pol, c_mom})
    add_common(c, a);

  int sim_T = 1000;
  double sim_K0 = 0.0;
  c_sim->add_option("--T", sim_T, "path length (quarters)");
  c_sim->add_option("--K0", sim_K0, "initial capital (default: high steady state)");
  c_erg->add_option("--T", erg_T, "simulation length");
  c_erg->add_option("--burn-in", erg_burn, "burn-in periods");
  c_rec->add_option("--sims", rec_sims, "replications (default: scale-dependent)");
  c_rec->add_option("--thresholds", thresholds, "comma list of log drops");
  c_rec->add_option("--horizons", horizons, "comma list of horizons");
  c_irf->add_option("--shock", irf_shock, "small (-sigma x4), large (-2sigma x6) or eps list");
  c_irf->add_option("--horizon", irf_horizon, "IRF horizon");
  c_crisis->add_option("--target", crisis_target, "measured-TFP log-deviation list");
  c_crisis->add_option("--anchor", crisis_anchor, "terminal deviation of the default ramp");
  c_crisis->add_option("--quarters", crisis_quarters, "shock quarters of the default ramp");
  c_crisis->add_option("--horizon", crisis_horizon, "simulation horizon");
  c_pol->add_option("--tau-grid", tau_grid, "comma list of subsidy rates (starts at 0)");
  c_pol->add_option("--reps", welfare_reps, "welfare replications per tau");
  c_pol->add_option("--T", welfare_T, "welfare horizon");
  c_frag->add_option("--kmin", frag_klo, "scan lower bound (default 0.25 K_high)");
  c_frag->add_option("--kmax", frag_khi, "scan upper bound (default 2 K_high)");
  c_frag->add_option("--npoints", frag_n, "scan points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    apply_runtime(a);
    const ParamSet p = resolve_params(a);
    const SolveOptionsModel sopt = resolve_sopt(a);
    const Timer timer;
    std::filesystem::create_directories(a.out_dir);
    std::vector<std::string> outputs;
    const std::string tag = run_tag(a);

    if (c_grid->parsed()) {
      const std::string cache = a.cache.empty() ? a.out_dir + "/grid_" + tag + ".bin" : a.cache;
      if (grid_cache_matches(cache, p, a.seed)) {
        std::cout << "cache hit: " << cache << " (param hash " << hash_hex(param_hash(p))
                  << ")\n";
      } else {
        const TechnologySet tech = draw_technology(p, a.seed);
        SolvedModel m = solve_model(tech, p, sopt);
        save_grid_cache(cache, m.grid);
        outputs.push_back(cache);
        // CSV export of node aggregates
        const std::string csvpath = a.out_dir + "/grid_" + tag + ".csv";
        CsvWriter csv(csvpath, {"grid nodes, param hash " + hash_hex(param_hash(p))},
                      {"k_index", "a_index", "K", "A", "Theta", "Phi", "Omega", "Y", "L", "W",
                       "R", "n_total", "n_concentrated"});
        for (int ia = 0; ia < m.grid.nA(); ++ia)
          for (int ik = 0; ik < m.grid.nK(); ++ik) {
            const GridNode& n = m.grid.node(ik, ia);
            const double A = std::exp(m.grid.logA_grid[ia]);
            csv.row({static_cast<double>(ik), static_cast<double>(ia), m.grid.K_grid[ik], A,
                     A * n.theta1, n.phi, n.omega, n.Y, n.L, n.W, n.R, n.n_total, n.n_conc});
          }
        csv.close();
        outputs.push_back(csvpath);
      }
      finish(a, p, "solve-grid", timer, outputs);
      return 0;
    }

    SolvedModel m = build_model(a, p, sopt, &outputs);

    if (c_sim->parsed()) {
      const double K0 = sim_K0 > 0.0 ? sim_K0 : m.K_high;
      const SimPath path = simulate_chain(m.policy, m.grid, m.chain, a.seed, sim_T, K0,
                                          m.a0_index);
      const std::string out = a.out_dir + "/simulate_" + tag + ".csv";
      write_sim_path_csv(out, path, "seed=" + std::to_string(a.seed));
      outputs.push_back(out);
      finish(a, p, "simulate", timer, outputs);
    } else if (c_erg->parsed()) {
      const ErgodicSummary e = ergodic(m, erg_T, erg_burn, a.seed);
      const std::string out = a.out_dir + "/ergodic_" + tag + ".json";
      json j{{"mean_gap", e.mean_gap}, {"std_logY", e.std_logY},   {"n_modes", e.n_modes},
             {"bimodal", e.bimodal},   {"mode_gap", e.mode_gap},   {"T", erg_T},
             {"burn_in", erg_burn},    {"K_high", m.K_high}};
      std::ofstream(out) << j.dump(2) << "\n";
      const std::string hist = a.out_dir + "/ergodic_" + tag + ".csv";
      CsvWriter csv(hist, {"smoothed histogram of log Y deviations"}, {"center", "mass"});
      for (std::size_t i = 0; i < e.hist_centers.size(); ++i)
        csv.row({e.hist_centers[i], e.hist_mass[i]});
      csv.close();
      outputs.push_back(out);
      outputs.push_back(hist);
      finish(a, p, "ergodic", timer, outputs);
    } else if (c_rec->parsed()) {
      RecessionSpec spec;
      spec.thresholds = parse_list(thresholds);
      std::vector<int> hs;
      for (double h : parse_list(horizons)) hs.push_back(static_cast<int>(h));
      spec.horizons = hs;
      spec.n_sims = rec_sims > 0 ? rec_sims : (a.scale == "desk" ? 10000 : 100000);
      const auto cells = recession_probabilities(m, spec, a.seed);
      const std::string out = a.out_dir + "/recessions_" + tag + ".csv";
      CsvWriter csv(out, {"deep recession probabilities, seed " + std::to_string(a.seed)},
                    {"threshold", "horizon", "probability", "half_width"});
      for (const auto& c : cells)
        csv.row({c.threshold, static_cast<double>(c.horizon), c.prob, c.half_width});
      csv.close();
      outputs.push_back(out);
      finish(a, p, "recessions", timer, outputs);
    } else if (c_irf->parsed()) {
      std::vector<double> eps;
      if (irf_shock == "small") eps.assign(4, -p.sigma_eps);
      else if (irf_shock == "large") eps.assign(6, -2.0 * p.sigma_eps);
      else eps = parse_list(irf_shock);
      const IrfResult r = irf(m, eps, irf_horizon);
      const std::string out = a.out_dir + "/irf_" + tag + ".csv";
      CsvWriter csv(out, {"impulse responses vs zero-shock baseline"},
                    {"t", "dlogY", "dlog_n_concentrated", "dlog_measured_tfp"});
      for (int t = 0; t < irf_horizon; ++t)
        csv.row({static_cast<double>(t), r.dlogY[t], r.dlogN_conc[t], r.d_measured_tfp[t]});
      csv.close();
      outputs.push_back(out);
      const std::string shocked = a.out_dir + "/irf_path_" + tag + ".csv";
      write_sim_path_csv(shocked, r.shocked, "shocked path");
      outputs.push_back(shocked);
      finish(a, p, "irf", timer, outputs);
    } else if (c_frag->parsed()) {
      const double lo = frag_klo > 0.0 ? frag_klo : 0.25 * m.K_high_det;
      const double hi = frag_khi > 0.0 ? frag_khi : 2.0 * m.K_high_det;
      std::vector<double> Ks(frag_n);
      for (int i = 0; i < frag_n; ++i)
        Ks[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (frag_n - 1));
      const RentalCurve curve =
          m.symmetric_path ? rental_rate_map(make_symmetric(m.tech, p), Ks)
                           : rental_rate_map(m.tech, p, m.tables, Ks);
      const SteadyStateSet ss = find_steady_states(curve, p);
      const FragilityReport fr = chi(ss);
      const ConditionFlags flags = sufficient_conditions(p);
      const LawOfMotion lom = [&] {
        // law of motion on the deterministic policy over the scan range
        SolveOptionsModel so = sopt;
        so.n_A = 1;
        so.n_K = std::max(sopt.n_K, 120);
        so.k_lo = lo / m.K_high_det;
        so.k_hi = hi / m.K_high_det;
        const SolvedModel md = solve_model(m.tech, p, so);
        return law_of_motion_deterministic(md.grid, md.policy);
      }();
      json j;
      j["r_star"] = p.r_star();
      j["steady_states"] = steady_states_json(ss);
      json chij = json::array();
      for (const auto& e : fr.entries)
        chij.push_back({{"K_stable", e.K_stable},
                        {"K_unstable_pred", e.K_unstable_pred},
                        {"chi", e.chi},
                        {"min_shock", 1.0 - e.chi}});
      j["chi"] = chij;
      j["conditions"] = {{"unique_symmetric", flags.unique_symmetric},
                         {"unique_lhs", flags.unique_lhs},
                         {"unique_rhs", flags.unique_rhs},
                         {"mps_fragility_n2", flags.mps_fragility_n2},
                         {"mps2_lhs", flags.mps2_lhs},
                         {"mps2_rhs", flags.mps2_rhs}};
      j["rental_map"] = {{"K", curve.K}, {"R", curve.R}, {"n_mean_conc", curve.n_mean_conc}};
      j["law_of_motion"] = {{"K", lom.K}, {"K_prime", lom.Kprime}};
      json cr = json::array();
      for (const auto& c : lom.crossings)
        cr.push_back({{"K", c.K},
                      {"slope", c.slope},
                      {"kind", c.kind == SSKind::Stable ? "stable" : "unstable"}});
      j["law_of_motion_crossings"] = cr;
      const std::string out = a.out_dir + "/fragility_" + tag + ".json";
      std::ofstream(out) << j.dump(2) << "\n";
      outputs.push_back(out);
      finish(a, p, "fragility", timer, outputs);
    } else if (c_crisis->parsed()) {
      std::vector<double> target;
      if (!crisis_target.empty()) {
        target = parse_list(crisis_target);
      } else {
        for (int t = 1; t <= crisis_quarters; ++t)
          target.push_back(crisis_anchor * t / crisis_quarters);
      }
      const CrisisReport rep = crisis_experiment(m, target, crisis_horizon);
      const std::string out = a.out_dir + "/crisis_" + tag + ".csv";
      CsvWriter csv(out, {"crisis deviations from the pre-shock steady state"},
                    {"offset", "output", "measured_tfp", "hours", "investment", "labor_share",
                     "profit_share", "aggregate_markup", "log_firms_concentrated"});
      for (const auto& r : rep.rows)
        csv.row({static_cast<double>(r.offset), r.output, r.measured_tfp, r.hours, r.investment,
                 r.labor_share, r.profit_share, r.agg_markup, r.log_firms_conc});
      csv.close();
      outputs.push_back(out);
      const std::string pcsv = a.out_dir + "/crisis_path_" + tag + ".csv";
      write_sim_path_csv(pcsv, rep.path, "crisis path");
      outputs.push_back(pcsv);
      json j{{"eps", rep.eps}, {"target", target}};
      const std::string jout = a.out_dir + "/crisis_" + tag + ".json";
      std::ofstream(jout) << j.dump(2) << "\n";
      outputs.push_back(jout);
      finish(a, p, "crisis", timer, outputs);
    } else if (c_pol->parsed()) {
      WelfareOptions wopt;
      wopt.reps = welfare_reps;
      wopt.T = welfare_T;
      wopt.seed = a.seed;
      const auto points = policy_experiment(m.tech, p, parse_list(tau_grid), sopt, wopt);
      const std::string out = a.out_dir + "/policy_" + tag + ".csv";
      CsvWriter csv(out, {"entry-subsidy welfare curve"},
                    {"tau_f", "welfare", "cev", "max_tau_pi", "feasible", "K_high"});
      for (const auto& pt : points)
        csv.row({pt.tau_f, pt.welfare, pt.cev, pt.max_tau_pi, pt.feasible ? 1.0 : 0.0,
                 pt.K_high});
      csv.close();
      outputs.push_back(out);
      finish(a, p, "policy", timer, outputs);
    } else if (c_mom->parsed()) {
      const MomentReport mom = moments_at(m.tech, p, m.tables, m.K_high_det, 1.0);
      json j{{"sales_weighted_markup", mom.sales_weighted_markup},
             {"cost_weighted_markup", mom.cost_weighted_markup},
             {"std_log_revenue", mom.std_log_revenue},
             {"fixed_to_total_cost_ratio", mom.fixed_total_cost_ratio},
             {"emp_share_concentrated", mom.emp_share_concentrated},
             {"mean_firms_concentrated", mom.mean_firms_concentrated},
             {"hhi", {{"p10", mom.hhi_p10},
                      {"p25", mom.hhi_p25},
                      {"p50", mom.hhi_p50},
                      {"p75", mom.hhi_p75},
                      {"p90", mom.hhi_p90}}}};
      const std::string out = a.out_dir + "/moments_" + tag + ".json";
      std::ofstream(out) << j.dump(2) << "\n";
      outputs.push_back(out);
      finish(a, p, "moments", timer, outputs);
    }
    return 0;
  } catch (const std::exception& e) {
    json err{{"error", e.what()}, {"type", "domain"}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
