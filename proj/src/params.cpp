#include "fragsim/params.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fragsim {

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw DomainError("parameter '" + key + "': cannot parse '" + v + "' as a number");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  double x = parse_double(key, v);
  if (x != std::floor(x)) throw DomainError("parameter '" + key + "' must be an integer");
  return static_cast<int>(x);
}

}  // namespace

bool is_preset_name(const std::string& name) {
  return name == "y1975" || name == "y1990" || name == "y2007";
}

ParamSet preset(const std::string& name) {
  ParamSet p;
  p.beta = 0.99;
  p.psi = 1.0;
  p.nu = 0.352;
  p.alpha = 0.3;
  p.delta = 0.025;
  p.I = 10000;
  p.M = 20;
  p.rho = 1.0 - 1.0 / 1.38;    // sigma_I = 1.38
  p.eta = 1.0 - 1.0 / 11.13;   // sigma_G = 11.13
  p.phi_A = 0.95;
  p.sigma_eps = 0.003;
  p.agg_weights = AggWeights::Mean;
  p.I_ref = 10000;
  if (name == "y1975") {
    p.f = 0.110; p.lambda = 0.190; p.c = 0.00047;
  } else if (name == "y1990") {
    p.f = 0.135; p.lambda = 0.283; p.c = 0.00096;
  } else if (name == "y2007") {
    p.f = 0.140; p.lambda = 0.328; p.c = 0.00134;
  } else {
    throw DomainError("unknown preset '" + name + "' (expected y1975, y1990 or y2007)");
  }
  check_invariants(p);
  return p;
}

void check_invariants(const ParamSet& p) {
  if (!(p.beta > 0.0 && p.beta < 1.0)) throw DomainError("beta must lie in (0,1)");
  if (!(p.delta >= 0.0 && p.delta <= 1.0)) throw DomainError("delta must lie in [0,1]");
  if (!(p.nu > 0.0)) throw DomainError("nu must be positive");
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (!(p.rho > 0.0)) throw DomainError("rho must be positive (sigma_I > 1)");
  if (!(p.eta <= 1.0)) throw DomainError("eta cannot exceed 1");
  if (!(p.rho < p.eta))
    throw DomainError("within-market substitution must exceed across-market (rho < eta)");
  if (p.I < 1) throw DomainError("I must be at least 1");
  if (p.M < 1) throw DomainError("M must be at least 1");
  if (!(p.f >= 0.0 && p.f <= 1.0)) throw DomainError("f must lie in [0,1]");
  if (!(p.lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
  if (!(p.c >= 0.0)) throw DomainError("c must be nonnegative");
  if (!(p.phi_A >= 0.0 && p.phi_A < 1.0)) throw DomainError("phi_A must lie in [0,1)");
  if (!(p.sigma_eps >= 0.0)) throw DomainError("sigma_eps must be nonnegative");
  if (!(p.psi >= 0.0 && p.psi <= 1.0)) throw DomainError("psi must lie in [0,1]");
  if (!(p.c_unit > 0.0)) throw DomainError("c_unit must be positive");
  if (p.I_ref < 0) throw DomainError("I_ref must be nonnegative");
  if (!(p.entry_subsidy >= 0.0 && p.entry_subsidy < 1.0))
    throw DomainError("entry_subsidy must lie in [0,1)");
}

ParamSet validate_params(const std::map<std::string, std::string>& raw) {
  ParamSet p;
  auto it = raw.find("preset");
  if (it != raw.end()) p = preset(it->second);

  bool saw_sigma = false, saw_exponent = false;
  for (const auto& [key, value] : raw) {
    if (key == "preset") continue;
    if (key == "beta") p.beta = parse_double(key, value);
    else if (key == "psi") p.psi = parse_double(key, value);
    else if (key == "nu") p.nu = parse_double(key, value);
    else if (key == "alpha") p.alpha = parse_double(key, value);
    else if (key == "delta") p.delta = parse_double(key, value);
    else if (key == "rho") { p.rho = parse_double(key, value); saw_exponent = true; }
    else if (key == "eta") { p.eta = parse_double(key, value); saw_exponent = true; }
    else if (key == "sigma_I") {
      double s = parse_double(key, value);
      if (!(s > 1.0)) throw DomainError("sigma_I must exceed 1");
      p.rho = 1.0 - 1.0 / s;
      saw_sigma = true;
    } else if (key == "sigma_G") {
      double s = parse_double(key, value);
      if (!(s > 1.0)) throw DomainError("sigma_G must exceed 1");
      p.eta = 1.0 - 1.0 / s;
      saw_sigma = true;
    }
    else if (key == "I") p.I = parse_int(key, value);
    else if (key == "M") p.M = parse_int(key, value);
    else if (key == "f") p.f = parse_double(key, value);
    else if (key == "lambda") p.lambda = parse_double(key, value);
    else if (key == "c") p.c = parse_double(key, value);
    else if (key == "phi_A") p.phi_A = parse_double(key, value);
    else if (key == "sigma_eps") p.sigma_eps = parse_double(key, value);
    else if (key == "fixed_cost_mode") {
      if (value == "final_good") p.fixed_cost_mode = FixedCostMode::FinalGood;
      else if (value == "factor_bundle") p.fixed_cost_mode = FixedCostMode::FactorBundle;
      else throw DomainError("fixed_cost_mode must be final_good or factor_bundle");
    } else if (key == "agg_weights") {
      if (value == "sum") p.agg_weights = AggWeights::Sum;
      else if (value == "mean") p.agg_weights = AggWeights::Mean;
      else throw DomainError("agg_weights must be sum or mean");
    }
    else if (key == "I_ref") p.I_ref = parse_int(key, value);
    else if (key == "c_unit") p.c_unit = parse_double(key, value);
    else if (key == "entry_subsidy") p.entry_subsidy = parse_double(key, value);
    else throw DomainError("unknown parameter key '" + key + "'");
  }
  if (saw_sigma && saw_exponent)
    throw DomainError("supply either (sigma_I, sigma_G) or (rho, eta), not both");
  check_invariants(p);
  return p;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DomainError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw DomainError(path + ":" + std::to_string(lineno) + ": empty key");
    raw[key] = value;
  }
  return raw;
}

std::string to_string(FixedCostMode m) {
  return m == FixedCostMode::FinalGood ? "final_good" : "factor_bundle";
}
std::string to_string(AggWeights w) { return w == AggWeights::Sum ? "sum" : "mean"; }

std::string canonical_params(const ParamSet& p) {
  char buf[64];
  std::ostringstream os;
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << key << '=' << buf << '\n';
  };
  put("alpha", p.alpha);
  os << "agg_weights=" << to_string(p.agg_weights) << '\n';
  put("beta", p.beta);
  put("c", p.c);
  put("c_unit", p.c_unit);
  put("delta", p.delta);
  put("entry_subsidy", p.entry_subsidy);
  put("eta", p.eta);
  put("f", p.f);
  os << "fixed_cost_mode=" << to_string(p.fixed_cost_mode) << '\n';
  os << "I=" << p.I << '\n';
  os << "I_ref=" << (p.I_ref > 0 ? p.I_ref : p.I) << '\n';
  put("lambda", p.lambda);
  os << "M=" << p.M << '\n';
  put("nu", p.nu);
  put("phi_A", p.phi_A);
  put("psi", p.psi);
  put("rho", p.rho);
  put("sigma_eps", p.sigma_eps);
  return os.str();
}

std::uint64_t param_hash(const ParamSet& p) {
  const std::string s = canonical_params(p);
  std::uint64_t h = 14695981039346656037ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace fragsim
