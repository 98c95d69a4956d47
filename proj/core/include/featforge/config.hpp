#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "featforge/agents.hpp"
#include "featforge/dataset.hpp"
#include "featforge/evaluator.hpp"
#include "featforge/generation.hpp"
#include "featforge/grouping.hpp"
#include "featforge/measures.hpp"
#include "featforge/state_rep.hpp"

namespace featforge {

struct AblationFlags {
  bool no_cluster = false;          // every group is a singleton
  bool euclidean_distance = false;  // mean-vector distance for grouping
  bool random_unary = false;
  bool random_binary = false;
};

struct PipelineConfig {
  std::size_t epochs = 30;
  std::size_t steps_per_epoch = 15;
  bool reset_per_epoch = false;
  std::uint64_t seed = 0;

  StateSpec state = StateSpec::ds;
  EncoderConfig encoder;
  agents::AgentConfig agent;
  /// Overrides the per-agent seeds otherwise derived from `seed`.
  std::optional<std::uint64_t> agent_seed;

  GenerationConfig generation;
  ClusterConfig cluster;
  BinningSpec binning;
  UtilityOptions utility;

  /// nullopt picks the task's default model.
  std::optional<ModelKind> model_kind;
  ModelSpec model;

  AblationFlags ablation;
  double test_fraction = 0.2;
  std::size_t cv_folds = 5;

  // Input and output locations, used by the command-line front end.
  std::string data_path;
  std::string target_column;
  std::optional<TaskKind> task;
  std::string output_dir;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Sets one key. Throws std::invalid_argument for unknown keys or bad values.
void apply_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// Flat "key = value" document; blank lines and lines starting with '#' are skipped.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});

/// Renders every key in a form parse_config accepts.
std::string to_config_text(const PipelineConfig& config);

}  // namespace featforge
