#pragma once

#include "amdyn/am_sim/am.hpp"
#include "amdyn/am_sim/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace amdyn {

inline constexpr const char* kCodeVersion = "amdyn 0.1.0";

/// Empirical trajectory of one (cell, seed) run.
struct RunRecord {
  double m0 = 0.0;
  double kappa = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string engine = "full";  // "full" or "online"
  EmpiricalStats stats;         // index t-1 holds iteration t
  double wall_seconds = 0.0;

  int t_max() const { return static_cast<int>(stats.m_cos.size()); }
  /// Throws ContractViolation when the per-t series have different lengths.
  void validate() const;
};

/// Header line of the record CSV.
std::string records_csv_header();

/// One row per (record, t) in record order, values printed with 17 significant digits.
std::string records_to_csv(const std::vector<RunRecord>& records);

/// Parses rows produced by records_to_csv. Rows are grouped into records by seed in order
/// of first appearance; the cell fields of the result are left at their defaults.
std::vector<RunRecord> records_from_csv(const std::string& text);

/// Atomic write of records_to_csv.
void write_records(const std::string& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records(const std::string& path);

/// Runs AM for one seed: the instance comes from RngStream(seed, 0), online batches from
/// RngStream(seed, 1).
RunRecord simulate_seed(const ModelConfig& config, AmMode mode, std::uint64_t seed,
                        const AmOptions& opts = {});

/// simulate_seed for every seed, up to `workers` seeds at a time. Records come back in
/// seed-list order. 0 workers picks default_workers().
std::vector<RunRecord> simulate_seeds(const ModelConfig& config, AmMode mode,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::size_t workers = 0, const AmOptions& opts = {});

/// Seeds first, first+1, ..., first+count-1.
std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count);

}  // namespace amdyn
