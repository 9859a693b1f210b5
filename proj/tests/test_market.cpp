#include <doctest.h>

#include <cmath>
#include <random>

#include "fragsim/market.hpp"
#include "oracles.hpp"

using namespace fragsim;

namespace {

ParamSet quant_params() {
  ParamSet p = preset("y2007");
  return p;
}

std::vector<double> descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<double>());
  return v;
}

}  // namespace

TEST_CASE("markup of share closed form") {
  CHECK(markup_of_share(1.0, 1.0, 0.75) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(markup_of_share(0.0, 1.0, 0.75) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(markup_of_share(0.5, 1.0, 0.75) == doctest::Approx(8.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("eta=1 closed form on the reference duopoly") {
  const std::vector<double> g{1.2, 1.0};
  const MarketEq eq = solve_market_eta1(g, 0.75);
  CHECK(eq.g == doctest::Approx(0.95454545454545459).epsilon(1e-14));
  CHECK(eq.shares[0] == doctest::Approx(0.81818181818181812).epsilon(1e-13));
  CHECK(eq.shares[1] == doctest::Approx(0.18181818181818182).epsilon(1e-13));
  CHECK(eq.markups[0] == doctest::Approx(1.2571428571428571).epsilon(1e-13));
  CHECK(eq.markups[1] == doctest::Approx(1.0476190476190477).epsilon(1e-13));
  // profits at Theta = 1, Y = 1 (profit_coeff * Theta^{-rho/(1-rho)} * Y)
  CHECK(eq.profit_coeff[0] == doctest::Approx(0.1455557944377868).epsilon(1e-12));
  CHECK(eq.profit_coeff[1] == doctest::Approx(0.007187940466063566).epsilon(1e-12));
  CHECK(oracle::foc_residual(g, eq.shares, 1.0, 0.75) < 1e-12);
  CHECK(eq.shares[0] + eq.shares[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("eta=1 symmetric duopoly") {
  const MarketEq eq = solve_market_eta1(std::vector<double>{1.0, 1.0}, 0.75);
  CHECK(eq.g == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(eq.shares[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eq.shares[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("eta=1 infeasible trailing firm") {
  // third firm too unproductive to keep a nonnegative share
  const std::vector<double> g{1.0, 1.0, 0.1};
  CHECK(feasible_n_eta1(g, 3, 0.75) == 2);
  CHECK_THROWS_AS(solve_market_eta1(g, 0.75), InfeasibleShares);
  CHECK_NOTHROW(solve_market_eta1(std::span<const double>(g.data(), 2), 0.75));
}

TEST_CASE("general solver: monopoly and symmetric cases") {
  const ParamSet p = quant_params();
  const MarketEq mono = solve_market(std::vector<double>{1.7}, p.eta, p.rho);
  CHECK(mono.shares[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mono.markups[0] == doctest::Approx(1.0 / p.rho).epsilon(1e-13));

  const int n = 5;
  const MarketEq sym = solve_market(std::vector<double>(n, 1.3), p.eta, p.rho);
  for (int j = 0; j < n; ++j) {
    CHECK(sym.shares[j] == doctest::Approx(1.0 / n).epsilon(1e-12));
    CHECK(sym.markups[j] ==
          doctest::Approx(markup_of_share(1.0 / n, p.eta, p.rho)).epsilon(1e-12));
  }
}

TEST_CASE("general solver FOC residuals and share adding-up on random markets") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> glog(-0.8, 0.8);
  std::uniform_int_distribution<int> nsize(1, 20);
  const ParamSet p = quant_params();
  for (int rep = 0; rep < 300; ++rep) {
    const int n = nsize(rng);
    std::vector<double> g(n);
    for (auto& x : g) x = std::exp(glog(rng));
    g = descending(g);
    const MarketEq eq = solve_market(g, p.eta, p.rho);
    double total = 0.0;
    for (double s : eq.shares) total += s;
    CHECK(std::fabs(total - 1.0) < 1e-12);
    CHECK(oracle::foc_residual(g, eq.shares, p.eta, p.rho) < 1e-10);
    // monotonicity: shares and markups ordered with gamma
    for (int j = 1; j < n; ++j) {
      CHECK(eq.shares[j] <= eq.shares[j - 1] + 1e-12);
      CHECK(eq.markups[j] <= eq.markups[j - 1] + 1e-12);
    }
  }
}

TEST_CASE("eta -> 1 continuity of the general solver") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> glog(-0.5, 0.5);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 4);
    std::vector<double> g(n);
    for (auto& x : g) x = std::exp(glog(rng));
    g = descending(g);
    if (feasible_n_eta1(g, n, 0.75) < n) continue;
    const MarketEq lim = solve_market(g, 1.0 - 1e-6, 0.75);
    const MarketEq ref = solve_market_eta1(g, 0.75);
    for (int j = 0; j < n; ++j) CHECK(std::fabs(lim.shares[j] - ref.shares[j]) < 1e-4);
  }
}

TEST_CASE("best-response oracle agrees with the analytic solutions (n <= 3)") {
  const double Theta = 1.0, Y = 1.0;
  SUBCASE("eta = 1") {
    for (auto g : {std::vector<double>{1.2, 1.0}, std::vector<double>{1.0, 1.0},
                   std::vector<double>{1.3, 1.1, 1.0}}) {
      const MarketEq eq = solve_market_eta1(g, 0.75);
      const auto br = oracle::best_response_shares(g, 1.0, 0.75, Theta, Y);
      for (std::size_t j = 0; j < g.size(); ++j)
        CHECK(std::fabs(br[j] - eq.shares[j]) < 1e-3);
    }
  }
  SUBCASE("eta < 1") {
    const ParamSet p = quant_params();
    for (auto g : {std::vector<double>{1.2, 1.0}, std::vector<double>{1.4, 1.0, 0.8}}) {
      const MarketEq eq = solve_market(g, p.eta, p.rho);
      const auto br = oracle::best_response_shares(g, p.eta, p.rho, Theta, Y);
      for (std::size_t j = 0; j < g.size(); ++j)
        CHECK(std::fabs(br[j] - eq.shares[j]) < 1e-3);
    }
  }
}

TEST_CASE("bracketing: eta=0.95 duopoly shares sit between the analytic limits") {
  // spec example: s_1 between the eta=1 value and the monopolistic-competition
  // limit (markups equalized), which gives the widest admissible band
  const std::vector<double> g{1.2, 1.0};
  const double rho = 0.75, eta = 0.95;
  const MarketEq eq = solve_market(g, eta, rho);
  CHECK(oracle::foc_residual(g, eq.shares, eta, rho) < 1e-10);
  const double s_eta1 = solve_market_eta1(g, rho).shares[0];
  // monopolistic-competition limit: all firms price at constant markup, so
  // shares follow gamma^(eta/(1-eta)) normalized
  const double pexp = eta / (1.0 - eta);
  const double s_mc = std::pow(g[0], pexp) / (std::pow(g[0], pexp) + std::pow(g[1], pexp));
  CHECK(eq.shares[0] < std::max(s_eta1, s_mc));
  CHECK(eq.shares[0] > std::min(s_eta1, s_mc));
}

TEST_CASE("market_n_star on the unit triopoly") {
  ParamSet p;
  p.rho = 0.75;
  p.eta = 1.0;
  p.M = 3;
  p.I = 1;
  p.f = 1.0;
  p.c = 0.0;  // unused here
  const std::vector<double> g{1.0, 1.0, 1.0};
  // monopoly profit 0.10547 >= 0.05; duopoly per-firm 0.04187 < 0.05
  CHECK(market_n_star(g, 0.05, 1.0, 1.0, p) == 1);
  // duopoly 0.04187 >= 0.03, triopoly 0.02140 < 0.03
  CHECK(market_n_star(g, 0.03, 1.0, 1.0, p) == 2);
  CHECK(market_n_star(g, 0.0, 1.0, 1.0, p) == 3);  // c = 0: all enter
  CHECK(market_n_star(g, 1.0, 1.0, 1.0, p) == 0);  // nobody covers c
}

TEST_CASE("profit monotonicity in n (lemma check, closed form)") {
  // per-firm profit falls as the market gets more crowded
  const std::vector<double> g{1.0, 1.0, 1.0};
  double prev = 1e300;
  for (int n = 1; n <= 3; ++n) {
    const MarketEq eq = solve_market_eta1(std::span<const double>(g.data(), n), 0.75);
    CHECK(eq.profit_coeff[n - 1] < prev);
    prev = eq.profit_coeff[n - 1];
  }
}

TEST_CASE("lemma A.1 profit properties on randomized eta=1 markets") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> glog(-0.25, 0.25);
  int checked = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 3);
    std::vector<double> g(n);
    for (auto& x : g) x = std::exp(glog(rng));
    g = descending(g);
    if (feasible_n_eta1(g, n, 0.75) < n) continue;
    const MarketEq base = solve_market_eta1(g, 0.75);
    const int j = static_cast<int>(rng() % n);

    // own-productivity increase raises own profit
    auto up = g;
    up[j] *= 1.02;
    up = descending(up);
    // find the moved firm's new position (gamma values unique a.s.)
    const int jn = static_cast<int>(std::find(up.begin(), up.end(), g[j] * 1.02) - up.begin());
    if (feasible_n_eta1(up, n, 0.75) < n) continue;
    const MarketEq bumped = solve_market_eta1(up, 0.75);
    CHECK(bumped.profit_coeff[jn] > base.profit_coeff[j]);

    // rival-productivity increase lowers everyone else's profit
    for (int k = 0; k < n; ++k) {
      if (k == jn) continue;
      const int korig = k < jn ? k : k;  // positions of others preserved by sort
      if (up[k] != g[korig]) continue;   // skip reshuffled edge cases
      CHECK(bumped.profit_coeff[k] < base.profit_coeff[korig] + 1e-15);
    }

    // per-firm profit at n firms exceeds per-firm profit at n+1
    std::vector<double> bigger = g;
    bigger.push_back(g.back() * 0.999);
    if (feasible_n_eta1(bigger, n + 1, 0.75) < n + 1) continue;
    const MarketEq crowded = solve_market_eta1(bigger, 0.75);
    CHECK(crowded.profit_coeff[n] < base.profit_coeff[n - 1]);
    ++checked;
  }
  CHECK(checked >= 500);
}

TEST_CASE("market tables match direct solves and cache feasibility caps") {
  ParamSet p = quant_params();
  p.I = 40;
  check_invariants(p);
  const TechnologySet tech = draw_technology(p, 5);
  const MarketTables tb = build_market_tables(tech, p);
  CHECK(tb.max_foc_residual < 1e-12);
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 60; ++rep) {
    const int i = static_cast<int>(rng() % tech.I);
    const int n = 1 + static_cast<int>(rng() % tech.M);
    const MarketEq eq = solve_market_auto(
        std::span<const double>(tech.row(i), static_cast<std::size_t>(n)), p);
    CHECK(tb.tpow[tb.at(i, n)] == doctest::Approx(eq.tpow).epsilon(1e-11));
    CHECK(tb.pihat[tb.at(i, n)] ==
          doctest::Approx(eq.profit_coeff[n - 1]).epsilon(1e-10));
  }
}
