#pragma once

#include <string>
#include <vector>

#include "fragsim/economy.hpp"
#include "fragsim/simulate.hpp"

namespace fragsim {

inline constexpr const char* kVersion = "1.0.0";

// %.17g with '.' decimal; throws DomainError on non-finite values so NaN/Inf
// never reach disk silently.
std::string fmt17(double x);

// Simple CSV sink: comment lines start with '#', then a header row, then
// rows of fmt17 numbers.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& comments,
            const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void close();
  ~CsvWriter();

 private:
  struct Impl;
  Impl* impl_;
};

void write_sim_path_csv(const std::string& path, const SimPath& sim, const std::string& run_info);

// Versioned binary cache for GridSolution. Layout: magic, version string,
// param hash, canonical params, tech seed, grids, nodes, counts. Loads fail
// with byte-offset diagnostics on truncation or corruption.
void save_grid_cache(const std::string& path, const GridSolution& grid);
GridSolution load_grid_cache(const std::string& path);
bool grid_cache_matches(const std::string& path, const ParamSet& p, std::uint64_t tech_seed);

// Run manifest JSON: version, parameter hash, seeds, subcommand, wall clock,
// kernel lane, threads and the emitted file list.
struct RunManifest {
  std::string subcommand;
  std::uint64_t param_hash = 0;
  std::vector<std::uint64_t> seeds;
  double wall_clock_sec = 0.0;
  std::vector<std::string> outputs;
  std::string kernel;
  int threads = 1;
};
void write_manifest(const std::string& path, const RunManifest& m);

std::string hash_hex(std::uint64_t h);

}  // namespace fragsim
