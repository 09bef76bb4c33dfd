#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mivabo/acquisition.hpp"
#include "mivabo/benchmarks.hpp"

namespace mivabo {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct TaskSpec {
  /// synthetic_c1, synthetic_c2_card2, xgboost_like_table, or "table" for a
  /// user CSV with an explicit domain.
  std::string name;
  std::uint64_t task_seed = 0;
  double noise_beta = 100.0;
  int table_rows = 10000;
  std::string csv_path;
  std::string metric_column = "y";
  nlohmann::json domain;  // only for "table"
};

struct MethodSpec {
  std::string name;  // label in outputs
  std::string type;  // mivabo | mivabo_sa | random | sa
  BoLoopConfig bo;
  FeatureConfig features;  // ignored on synthetic tasks, which use their own map
  MixedAnnealSchedule sa;
  bool constraint_aware = true;  // random and sa only
};

struct ExperimentConfig {
  TaskSpec task;
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds;
  int T = 80;
  std::string output_dir = "results";
  std::optional<double> penalty;
  int workers = 0;  // 0: hardware concurrency

  /// Throws ConfigError on any schema or validation problem. Relative paths
  /// resolve against base_dir.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
  static ExperimentConfig load_file(const std::string& path);
  [[nodiscard]] nlohmann::json to_json() const;
};

std::vector<std::string> builtin_task_names();

struct ExperimentOutcome {
  std::vector<RunTrace> traces;  // method-major, seeds in config order
  std::vector<MetricRow> metrics;
  std::optional<double> oracle;
  double penalty = 0.0;
};

/// Runs every (method, seed) cell. With write_outputs, each finished cell's
/// trace lands atomically in output_dir, followed by metrics.csv and
/// manifest.json. A failing cell stops the run after the other cells'
/// traces are flushed; the first error is rethrown.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool write_outputs = true);

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& is);

/// Writes through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

struct ReplayReport {
  std::size_t rows = 0;
  std::vector<int> mismatched_rows;  // 1-based t of bad incumbent cells
  [[nodiscard]] bool ok() const { return mismatched_rows.empty(); }
};

ReplayReport replay_trace(std::istream& is);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& s);

}  // namespace mivabo
