#include "fragsim/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

namespace fragsim {

std::string fmt17(double x) {
  if (!std::isfinite(x)) throw DomainError("attempted to emit a non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct CsvWriter::Impl {
  std::ofstream out;
  std::string path;
  std::size_t ncols = 0;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& comments,
                     const std::vector<std::string>& columns)
    : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary);  // binary: byte-identical line endings
  impl_->path = path;
  impl_->ncols = columns.size();
  if (!impl_->out) throw DomainError("cannot open '" + path + "' for writing");
  for (const auto& c : comments) impl_->out << "# " << c << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    impl_->out << columns[i] << (i + 1 == columns.size() ? "\n" : ",");
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != impl_->ncols) throw DomainError("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    impl_->out << fmt17(values[i]) << (i + 1 == values.size() ? "\n" : ",");
}

void CsvWriter::close() {
  if (impl_->out.is_open()) {
    impl_->out.flush();
    if (!impl_->out) throw DomainError("write failure on '" + impl_->path + "'");
    impl_->out.close();
  }
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
  delete impl_;
}

void write_sim_path_csv(const std::string& path, const SimPath& sim,
                        const std::string& run_info) {
  CsvWriter csv(path, {std::string("fragsim ") + kVersion + " " + run_info},
                {"t", "K", "log_A", "Y", "L", "W", "R", "C", "investment", "theta", "omega",
                 "phi", "labor_share", "profit_share", "aggregate_markup",
                 "n_firms_concentrated", "measured_tfp", "savings_rate"});
  for (int t = 0; t < sim.T(); ++t) {
    csv.row({static_cast<double>(t), sim.K[t], sim.logA[t], sim.Y[t], sim.L[t], sim.W[t],
             sim.R[t], sim.C[t], sim.investment[t], sim.theta[t], sim.omega[t], sim.phi[t],
             sim.labor_share[t], sim.profit_share[t], sim.agg_markup[t], sim.n_conc[t],
             sim.measured_tfp[t], sim.savings[t]});
  }
  csv.close();
}

namespace {

constexpr char kMagic[9] = "FRAGGRD1";

struct Writer {
  std::ofstream out;
  explicit Writer(const std::string& path) : out(path, std::ios::binary) {}
  void bytes(const void* p, std::size_t n) { out.write(static_cast<const char*>(p), n); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
};

struct Reader {
  std::ifstream in;
  std::string path;
  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {}
  void bytes(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), n);
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw DomainError("grid cache '" + path + "': truncated at offset " +
                        std::to_string(static_cast<long long>(in.tellg())) + " (wanted " +
                        std::to_string(n) + " bytes)");
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > (1ull << 24)) throw DomainError("grid cache '" + path + "': corrupt string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
};

}  // namespace

void save_grid_cache(const std::string& path, const GridSolution& grid) {
  Writer w(path);
  if (!w.out) throw DomainError("cannot open '" + path + "' for writing");
  w.bytes(kMagic, 8);
  w.str(kVersion);
  w.u64(param_hash(grid.params));
  w.str(canonical_params(grid.params));
  w.u64(grid.tech_seed);
  w.u64(grid.K_grid.size());
  w.u64(grid.logA_grid.size());
  w.u64(static_cast<std::uint64_t>(grid.params.I));
  for (double k : grid.K_grid) w.f64(k);
  for (double a : grid.logA_grid) w.f64(a);
  for (const GridNode& n : grid.nodes) {
    for (double v : {n.theta1, n.phi, n.omega, n.Y, n.L, n.W, n.R, n.fc_drain, n.fixed_bill,
                     n.fc_factor, n.salesw_markup, n.n_total, n.n_conc})
      w.f64(v);
    w.bytes(&n.warning, 1);
  }
  w.bytes(grid.counts.data(), grid.counts.size());
  w.out.flush();
  if (!w.out) throw DomainError("write failure on '" + path + "'");
}

GridSolution load_grid_cache(const std::string& path) {
  Reader r(path);
  if (!r.in) throw DomainError("cannot open grid cache '" + path + "'");
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw DomainError("grid cache '" + path + "': bad magic (not a fragsim grid cache)");
  const std::string version = r.str();
  if (version != kVersion)
    throw DomainError("grid cache '" + path + "': version '" + version + "' != '" + kVersion +
                      "'");
  GridSolution g;
  const std::uint64_t hash = r.u64();
  const std::string canon = r.str();
  // reconstruct params from the canonical serialization
  std::map<std::string, std::string> raw;
  std::size_t pos = 0;
  while (pos < canon.size()) {
    const auto nl = canon.find('\n', pos);
    const std::string line = canon.substr(pos, nl - pos);
    pos = nl + 1;
    const auto eq = line.find('=');
    raw[line.substr(0, eq)] = line.substr(eq + 1);
  }
  g.params = validate_params(raw);
  if (param_hash(g.params) != hash)
    throw DomainError("grid cache '" + path + "': parameter hash mismatch");
  g.tech_seed = r.u64();
  const std::uint64_t nK = r.u64(), nA = r.u64(), I = r.u64();
  if (nK == 0 || nA == 0 || nK > (1 << 20) || nA > (1 << 20) ||
      I != static_cast<std::uint64_t>(g.params.I))
    throw DomainError("grid cache '" + path + "': corrupt dimensions");
  g.K_grid.resize(nK);
  g.logA_grid.resize(nA);
  for (auto& k : g.K_grid) k = r.f64();
  for (auto& a : g.logA_grid) a = r.f64();
  g.nodes.resize(nK * nA);
  for (GridNode& n : g.nodes) {
    n.theta1 = r.f64();
    n.phi = r.f64();
    n.omega = r.f64();
    n.Y = r.f64();
    n.L = r.f64();
    n.W = r.f64();
    n.R = r.f64();
    n.fc_drain = r.f64();
    n.fixed_bill = r.f64();
    n.fc_factor = r.f64();
    n.salesw_markup = r.f64();
    n.n_total = r.f64();
    n.n_conc = r.f64();
    r.bytes(&n.warning, 1);
  }
  g.counts.resize(nK * nA * I);
  r.bytes(g.counts.data(), g.counts.size());
  return g;
}

bool grid_cache_matches(const std::string& path, const ParamSet& p, std::uint64_t tech_seed) {
  try {
    Reader r(path);
    if (!r.in) return false;
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) return false;
    if (r.str() != kVersion) return false;
    if (r.u64() != param_hash(p)) return false;
    r.str();
    return r.u64() == tech_seed;
  } catch (const std::exception&) {
    return false;
  }
}

std::string hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  nlohmann::json j;
  j["tool"] = "fragsim";
  j["version"] = kVersion;
  j["subcommand"] = m.subcommand;
  j["param_hash"] = hash_hex(m.param_hash);
  j["seeds"] = m.seeds;
  j["wall_clock_sec"] = m.wall_clock_sec;
  j["outputs"] = m.outputs;
  j["kernel"] = m.kernel;
  j["threads"] = m.threads;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace fragsim
