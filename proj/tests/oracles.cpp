#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "fragsim/market.hpp"

namespace fragsim::oracle {

namespace {

double market_output(const std::vector<double>& y, double eta) {
  double acc = 0.0;
  for (double q : y) acc += std::pow(q, eta);
  return std::pow(acc, 1.0 / eta);
}

}  // namespace

std::vector<double> best_response_shares(std::span<const double> gamma, double eta, double rho,
                                         double Theta, double Y, int grid_points,
                                         int max_rounds) {
  const int n = static_cast<int>(gamma.size());
  // rough quantity scale: symmetric split of the market demanded at a
  // representative price
  double gbar = 0.0;
  for (double g : gamma) gbar += g;
  gbar /= n;
  const double p_rep = Theta / gbar;
  const double y_scale = std::pow(p_rep, -1.0 / (1.0 - rho)) * Y / n;
  std::vector<double> grid(grid_points);
  for (int k = 0; k < grid_points; ++k)
    grid[k] = y_scale * std::pow(10.0, -4.0 + 6.0 * k / (grid_points - 1.0));

  std::vector<double> y(n, y_scale);
  for (int round = 0; round < max_rounds; ++round) {
    bool moved = false;
    for (int j = 0; j < n; ++j) {
      double rivals = 0.0;
      for (int k = 0; k < n; ++k)
        if (k != j) rivals += std::pow(y[k], eta);
      const double mc = Theta / gamma[j];
      double best_profit = -1e300, best_y = y[j];
      for (double cand : grid) {
        const double yi = std::pow(rivals + std::pow(cand, eta), 1.0 / eta);
        const double price = std::pow(Y / yi, 1.0 - rho) * std::pow(yi / cand, 1.0 - eta);
        const double profit = (price - mc) * cand;
        if (profit > best_profit) {
          best_profit = profit;
          best_y = cand;
        }
      }
      if (best_profit < 0.0) best_y = grid.front();  // produce (almost) nothing
      if (best_y != y[j]) moved = true;
      y[j] = best_y;
    }
    if (!moved) break;
  }
  // revenue shares
  const double yi = market_output(y, eta);
  std::vector<double> rev(n);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    const double price = std::pow(Y / yi, 1.0 - rho) * std::pow(yi / y[j], 1.0 - eta);
    rev[j] = price * y[j];
    total += rev[j];
  }
  for (auto& r : rev) r /= total;
  return rev;
}

double foc_residual(std::span<const double> gamma, const std::vector<double>& shares, double eta,
                    double rho) {
  // composite-good demand implies p_j proportional to mu_j / gamma_j within
  // the market; the FOC says the proportionality constant is common across
  // firms, so shares must satisfy s_j = x_j / sum x with
  // x_j = (gamma_j/mu_j)^(eta/(1-eta)) (limit: equal g/mu at eta=1)
  const int n = static_cast<int>(gamma.size());
  double worst = 0.0;
  if (eta == 1.0) {
    // all firms sell at one price p: p (1-(1-rho)s_j) = Theta/gamma_j; check
    // the implied p is common
    std::vector<double> pj(n);
    for (int j = 0; j < n; ++j) pj[j] = 1.0 / (gamma[j] * (1.0 - (1.0 - rho) * shares[j]));
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::fabs(pj[j] / pj[0] - 1.0));
    return worst;
  }
  const double pexp = eta / (1.0 - eta);
  std::vector<double> x(n);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    const double mu = 1.0 / (eta - (eta - rho) * shares[j]);
    x[j] = std::pow(gamma[j] / mu, pexp);
    total += x[j];
  }
  for (int j = 0; j < n; ++j) worst = std::max(worst, std::fabs(x[j] / total - shares[j]));
  return worst;
}

double phi_from_allocation(const std::vector<std::vector<double>>& gamma_rows,
                           const std::vector<int>& counts, const ParamSet& p) {
  const int I = static_cast<int>(gamma_rows.size());
  const double w = p.agg_weights == AggWeights::Mean ? 1.0 / I : 1.0;
  const double rr = p.rho / (1.0 - p.rho);

  // market solutions and revenue shares
  std::vector<MarketEq> eqs(I);
  double T = 0.0;
  for (int i = 0; i < I; ++i) {
    if (counts[i] == 0) continue;
    eqs[i] = solve_market_auto(
        std::span<const double>(gamma_rows[i].data(), static_cast<std::size_t>(counts[i])), p);
    T += w * eqs[i].tpow;
  }

  // physical allocation at W = R = 1 (so Theta0 is the Cobb-Douglas constant)
  const double total_rev = 1.0;  // scale-free
  double L = 0.0, K = 0.0, agg = 0.0;
  for (int i = 0; i < I; ++i) {
    if (counts[i] == 0) continue;
    const double si = w * eqs[i].tpow / T;
    double inner = 0.0;
    for (int j = 0; j < counts[i]; ++j) {
      const double cost = si * eqs[i].shares[j] / eqs[i].markups[j] * total_rev;
      const double l = (1.0 - p.alpha) * cost;
      const double k = p.alpha * cost;
      const double y = gamma_rows[i][j] * std::pow(k, p.alpha) * std::pow(l, 1.0 - p.alpha);
      L += l;
      K += k;
      inner += std::pow(y, p.eta);
    }
    agg += w * std::pow(inner, p.rho / p.eta);
  }
  const double Y_ces = std::pow(agg, 1.0 / p.rho);
  return Y_ces / (std::pow(L, 1.0 - p.alpha) * std::pow(K, p.alpha));
}

}  // namespace fragsim::oracle
