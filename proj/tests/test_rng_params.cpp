#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fragsim/params.hpp"
#include "fragsim/rng.hpp"
#include "fragsim/tech.hpp"

using namespace fragsim;

TEST_CASE("normal inverse cdf hits textbook quantiles") {
  CHECK(normal_icdf(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_icdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_icdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(normal_icdf(0.84134474606854293) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(normal_icdf(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-9));
}

TEST_CASE("rng streams are deterministic and seed-sensitive") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
  }
  CHECK(a.next_u64() != c.next_u64());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
}

TEST_CASE("preset values match the calibration table") {
  const ParamSet p = preset("y2007");
  CHECK(p.beta == 0.99);
  CHECK(p.psi == 1.0);
  CHECK(p.nu == 0.352);
  CHECK(p.alpha == 0.3);
  CHECK(p.delta == 0.025);
  CHECK(p.I == 10000);
  CHECK(p.M == 20);
  CHECK(p.lambda == 0.328);
  CHECK(p.c == 0.00134);
  CHECK(p.f == 0.140);
  CHECK(p.phi_A == 0.95);
  CHECK(p.sigma_eps == 0.003);
  CHECK(p.sigma_I() == doctest::Approx(1.38).epsilon(1e-12));
  CHECK(p.sigma_G() == doctest::Approx(11.13).epsilon(1e-12));

  const ParamSet p75 = preset("y1975");
  CHECK(p75.lambda == 0.190);
  CHECK(p75.c == 0.00047);
  CHECK(p75.f == 0.110);
  const ParamSet p90 = preset("y1990");
  CHECK(p90.lambda == 0.283);
  CHECK(p90.c == 0.00096);
  CHECK(p90.f == 0.135);
  CHECK(p90.phi_A == 0.95);
  CHECK(p90.sigma_eps == 0.003);
  CHECK_THROWS_AS(preset("y2008"), DomainError);
}

TEST_CASE("validate_params derives the CES exponents from elasticities") {
  std::map<std::string, std::string> raw{{"sigma_I", "1.38"}, {"sigma_G", "11.13"},
                                         {"nu", "0.4"},       {"alpha", "0.3"},
                                         {"lambda", "0.1"},   {"c", "0.001"}};
  const ParamSet p = validate_params(raw);
  CHECK(p.rho == doctest::Approx(0.2753623188405796).epsilon(1e-15));
  CHECK(p.eta == doctest::Approx(0.9101527403414196).epsilon(1e-15));

  raw["sigma_G"] = raw["sigma_I"];  // rho = eta violates the ordering
  CHECK_THROWS_AS(validate_params(raw), DomainError);
  raw["sigma_G"] = "11.13";
  raw["rho"] = "0.3";  // both forms supplied
  CHECK_THROWS_AS(validate_params(raw), DomainError);
}

TEST_CASE("full preset round-trips through validation unchanged") {
  const ParamSet p = preset("y2007");
  std::map<std::string, std::string> raw{{"preset", "y2007"}};
  const ParamSet q = validate_params(raw);
  CHECK(canonical_params(p) == canonical_params(q));
  CHECK(param_hash(p) == param_hash(q));
  // any field change must change the hash
  std::map<std::string, std::string> raw2{{"preset", "y2007"}, {"c", "0.00135"}};
  CHECK(param_hash(validate_params(raw2)) != param_hash(p));
}

TEST_CASE("invariant violations are rejected") {
  std::map<std::string, std::string> base{{"preset", "y2007"}};
  for (auto [k, v] : std::map<std::string, std::string>{{"beta", "1.0"},
                                                        {"beta", "0"},
                                                        {"c", "-1e-5"},
                                                        {"lambda", "-0.1"},
                                                        {"sigma_eps", "-0.1"},
                                                        {"f", "1.5"},
                                                        {"phi_A", "1.0"}}) {
    auto raw = base;
    raw[k] = v;
    CHECK_THROWS_AS(validate_params(raw), DomainError);
  }
}

TEST_CASE("config file parsing: comments, whitespace, errors") {
  const std::string path = "/tmp/fragsim_test_config.txt";
  {
    std::ofstream f(path);
    f << "# a comment\n";
    f << "preset = y1990\n";
    f << "  c=0.001  # trailing comment\n";
    f << "\n";
  }
  const auto raw = parse_config_file(path);
  CHECK(raw.at("preset") == "y1990");
  CHECK(raw.at("c") == "0.001");
  const ParamSet p = validate_params(raw);
  CHECK(p.c == 0.001);
  CHECK(p.lambda == 0.283);
  {
    std::ofstream f(path);
    f << "not a key value line\n";
  }
  CHECK_THROWS_AS(parse_config_file(path), DomainError);
  std::remove(path.c_str());
}

TEST_CASE("technology draws: determinism, sorting, concentration count") {
  ParamSet p = preset("y2007");
  p.I = 500;
  check_invariants(p);
  const TechnologySet a = draw_technology(p, 7);
  const TechnologySet b = draw_technology(p, 7);
  const TechnologySet c = draw_technology(p, 8);
  CHECK(a.gamma == b.gamma);  // bit identical
  CHECK(a.gamma != c.gamma);
  CHECK(a.n_concentrated == 70);  // round(0.140 * 500)
  int with_cost = 0;
  for (int i = 0; i < a.I; ++i)
    if (a.fixed_cost[i] > 0.0) {
      ++with_cost;
      CHECK(a.fixed_cost[i] == p.c);
    }
  CHECK(with_cost == 70);
  for (int i = 0; i < a.I; ++i)
    for (int j = 1; j < a.M; ++j) CHECK(a.row(i)[j] <= a.row(i)[j - 1]);
}

TEST_CASE("lambda = 0 gives unit productivities exactly") {
  ParamSet p = preset("y2007");
  p.I = 10;
  p.lambda = 0.0;
  const TechnologySet t = draw_technology(p, 1);
  for (double g : t.gamma) CHECK(g == 1.0);
}

TEST_CASE("sample std of log draws matches the population parameter") {
  ParamSet p = preset("y2007");  // lambda = 0.328, I*M = 200000 draws
  const TechnologySet t = draw_technology(p, 123);
  double sum = 0.0, sum2 = 0.0;
  for (double g : t.gamma) {
    const double lg = std::log(g);
    sum += lg;
    sum2 += lg * lg;
  }
  const double n = static_cast<double>(t.gamma.size());
  const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  CHECK(sd == doctest::Approx(0.328).epsilon(0.01));  // within 1%
}

TEST_CASE("desk-scale fixed-cost equivalence via I_ref") {
  ParamSet p = preset("y2007");
  p.I = 2000;
  check_invariants(p);
  // margin-preserving scale: c_effective = c * I_ref / I
  CHECK(p.c_effective() == doctest::Approx(0.00134 * 5.0).epsilon(1e-15));
  ParamSet q = preset("y2007");
  CHECK(q.c_effective() == doctest::Approx(0.00134).epsilon(1e-15));
}
