#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "featforge/config.hpp"
#include "featforge/dataset.hpp"
#include "featforge/evaluator.hpp"
#include "featforge/generation.hpp"

namespace featforge {

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::vector<std::string> group1;
  std::string operation;
  std::vector<std::string> group2;
  double reward_group1 = 0.0;
  double reward_operation = 0.0;
  double reward_group2 = 0.0;
  double utility_before = 0.0;
  double utility_after = 0.0;
  double downstream = 0.0;  // V_A on the search split
  std::size_t feature_count = 0;
  std::size_t group_count = 0;
  std::size_t generated = 0;  // columns added after postprocessing
  bool size_controlled = false;
};

struct RunReport {
  std::string method;  // "grfg" or "rdg"
  std::string task;
  std::string agent;
  std::string state;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t steps_per_epoch = 0;
  std::size_t original_feature_count = 0;

  double baseline_score = 0.0;  // original features, search split
  std::vector<StepRecord> steps;
  double best_score = 0.0;
  std::size_t best_step = 0;  // index into steps
  std::vector<std::string> best_feature_names;

  EvalResult baseline_cv;
  EvalResult best_cv;

  std::string to_json() const;
};

struct RunResult {
  RunReport report;
  FeatureTable best;
};

/// Reinforcement-guided group-wise generation and selection.
RunResult run_grfg(const Dataset& data, const PipelineConfig& config);

/// Same loop shape and budget with uniformly random feature, operation, feature choices.
RunResult run_rdg_baseline(const Dataset& data, const PipelineConfig& config);

/// Writes trace.jsonl and best_features.csv (expression headers, target last) into `dir`.
void export_trace(const FeatureTable& best, const Dataset& original, const std::filesystem::path& dir,
                  const std::string& target_name = "target");

/// Writes report.json, trace.jsonl and best_features.csv.
void write_run_outputs(const RunResult& result, const Dataset& original, const std::filesystem::path& dir,
                       const std::string& target_name = "target");

/// Resolves the downstream model for a task, applying the configured override.
ModelSpec effective_model(const PipelineConfig& config, TaskKind task);

}  // namespace featforge
