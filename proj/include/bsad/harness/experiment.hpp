#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bsad/algorithm.hpp"
#include "bsad/harness/baselines.hpp"
#include "bsad/instance.hpp"

namespace bsad {

enum class AlgorithmKind { bsad, peps, q_learning };

struct AlgorithmSpec {
  std::string name;
  AlgorithmKind kind = AlgorithmKind::bsad;
  BsadConfig bsad;        // bsad and peps (peps uses the fixed-budget fields)
  QLearningConfig q;      // q_learning
  nlohmann::json raw;     // as given, for the metadata echo
};

struct ExperimentConfig {
  nlohmann::json environment;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::uint64_t> seeds;
  std::int64_t episode_budget = 100'000;
  std::int64_t cadence = 1'000;
  std::filesystem::path output_dir = "results";
  int parallelism = 0;  // 0: hardware concurrency; BSAD_PARALLELISM overrides
  int bootstrap_resamples = 10'000;
  double confidence = 0.95;
  std::uint64_t bootstrap_seed = 7;

  /// `base_dir` resolves relative spec-file and output paths.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;
  void validate() const;
};

/// Builds an instance from {"builder": "counterexample" | "random", ...} or {"spec": path}.
Instance make_environment(const nlohmann::json& env, const std::filesystem::path& base_dir = {});

/// Value trace of one (algorithm, seed) cell: episode 0, every cadence, and the budget.
struct CellTrace {
  std::vector<TracePoint> points;
  std::string termination;
  double final_value = 0.0;
};
CellTrace run_cell(const Instance& instance, const AlgorithmSpec& spec, std::uint64_t seed, std::int64_t budget,
                   std::int64_t cadence);

struct CellResult {
  std::string algorithm;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  CellTrace trace;
  double wall_seconds = 0.0;
};

std::string cell_file_name(const std::string& algorithm, std::uint64_t seed);

int effective_parallelism(int configured);

/// Runs every cell, writes per-cell CSVs, cells.csv, aggregate.csv, metadata.json and
/// timing.json into config.output_dir. Failed cells are reported, not thrown.
std::vector<CellResult> run_experiment(const ExperimentConfig& config);

/// Rebuilds aggregate.csv in `dir` from cells.csv and the per-cell CSVs.
void aggregate_directory(const std::filesystem::path& dir, int resamples, double confidence, std::uint64_t seed);

}  // namespace bsad
