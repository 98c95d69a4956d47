#include "featforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace featforge {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("invalid value for " + std::string(key) + ": '" + std::string(value) + "'");
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_real(std::string_view key, std::string_view v) {
  std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_value(key, v);
  }
  if (used != s.size() || !std::isfinite(out)) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::vector<std::size_t> to_size_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  while (!v.empty()) {
    auto comma = v.find(',');
    out.push_back(to_size(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) bad_value(key, v);
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string real_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void PipelineConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (steps_per_epoch < 1) throw std::invalid_argument("steps must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("split.test_fraction must lie in (0, 1)");
  if (cv_folds < 2) throw std::invalid_argument("cv.folds must be at least 2");
  if (binning.max_bins < 2) throw std::invalid_argument("measures.max_bins must be at least 2");
  if (!(generation.size_tolerance_factor >= 1.0))
    throw std::invalid_argument("generation.size_factor must be at least 1");
  if (generation.top_k_pairs && *generation.top_k_pairs == 0)
    throw std::invalid_argument("generation.top_k must be positive");
  if (!(agent.gamma > 0.0 && agent.gamma < 1.0)) throw std::invalid_argument("agent.gamma must lie in (0, 1)");
  if (agent.batch_size == 0 || agent.memory_capacity == 0 || agent.target_sync_every == 0)
    throw std::invalid_argument("agent memory, batch and target_sync must be positive");
  if (agent.hidden.empty() || std::count(agent.hidden.begin(), agent.hidden.end(), 0u) > 0)
    throw std::invalid_argument("agent.hidden must list positive layer widths");
  if (encoder.ae_col_dim == 0 || encoder.ae_row_dim == 0 || encoder.gae_dim == 0)
    throw std::invalid_argument("encoder dimensions must be positive");
  if (encoder.row_subsample_cap < 2) throw std::invalid_argument("state.row_cap must be at least 2");
  model.validate();
}

void apply_config_value(PipelineConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  if (key == "epochs") c.epochs = to_size(key, v);
  else if (key == "steps" || key == "steps_per_epoch") c.steps_per_epoch = to_size(key, v);
  else if (key == "reset_per_epoch") c.reset_per_epoch = to_bool(key, v);
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "data") c.data_path = std::string(v);
  else if (key == "target") c.target_column = std::string(v);
  else if (key == "task") c.task = parse_task(v);
  else if (key == "out") c.output_dir = std::string(v);
  else if (key == "state.method") c.state = parse_state_spec(v);
  else if (key == "state.ae_k") c.encoder.ae_col_dim = to_size(key, v);
  else if (key == "state.ae_d") c.encoder.ae_row_dim = to_size(key, v);
  else if (key == "state.gae_k") c.encoder.gae_dim = to_size(key, v);
  else if (key == "state.train_epochs") c.encoder.train_epochs = to_size(key, v);
  else if (key == "state.incremental_epochs") c.encoder.incremental_epochs = to_size(key, v);
  else if (key == "state.row_cap") c.encoder.row_subsample_cap = to_size(key, v);
  else if (key == "state.lr") c.encoder.learning_rate = to_real(key, v);
  else if (key == "agent.kind") c.agent.kind = agents::parse_agent_kind(v);
  else if (key == "agent.gamma") c.agent.gamma = to_real(key, v);
  else if (key == "agent.epsilon_start") c.agent.epsilon_start = to_real(key, v);
  else if (key == "agent.epsilon_min") c.agent.epsilon_min = to_real(key, v);
  else if (key == "agent.epsilon_decay") c.agent.epsilon_decay = to_real(key, v);
  else if (key == "agent.memory") c.agent.memory_capacity = to_size(key, v);
  else if (key == "agent.batch") c.agent.batch_size = to_size(key, v);
  else if (key == "agent.target_sync") c.agent.target_sync_every = to_size(key, v);
  else if (key == "agent.beta") c.agent.entropy_beta = to_real(key, v);
  else if (key == "agent.lr") c.agent.learning_rate = to_real(key, v);
  else if (key == "agent.hidden") c.agent.hidden = to_size_list(key, v);
  else if (key == "agent.seed") c.agent_seed = to_u64(key, v);
  else if (key == "agent.group1_reward") {
    if (v == "utility") c.agent.group1_reward = agents::Group1Reward::utility;
    else if (v == "delta" || v == "utility_delta") c.agent.group1_reward = agents::Group1Reward::utility_delta;
    else bad_value(key, v);
  } else if (key == "generation.top_k") {
    if (v == "auto") c.generation.top_k_pairs.reset();
    else c.generation.top_k_pairs = to_size(key, v);
  } else if (key == "generation.size_factor") c.generation.size_tolerance_factor = to_real(key, v);
  else if (key == "generation.dedup") c.generation.dedup = to_bool(key, v);
  else if (key == "generation.kbest_target") {
    if (v == "cap") c.generation.kbest_target = KbestTarget::cap;
    else if (v == "original") c.generation.kbest_target = KbestTarget::original;
    else bad_value(key, v);
  } else if (key == "cluster.threshold") {
    if (v == "auto") c.cluster.stop_threshold.reset();
    else c.cluster.stop_threshold = to_real(key, v);
  } else if (key == "cluster.epsilon") c.cluster.epsilon = to_real(key, v);
  else if (key == "measures.max_bins") c.binning.max_bins = to_size(key, v);
  else if (key == "measures.include_diagonal") c.utility.include_diagonal = to_bool(key, v);
  else if (key == "model.kind") c.model_kind = parse_model_kind(v);
  else if (key == "model.n_trees") c.model.n_trees = to_size(key, v);
  else if (key == "model.max_depth") c.model.max_depth = to_size(key, v);
  else if (key == "model.min_samples_leaf") c.model.min_samples_leaf = to_size(key, v);
  else if (key == "model.ridge_lambda") c.model.ridge_lambda = to_real(key, v);
  else if (key == "model.knn_k") c.model.knn_k = to_size(key, v);
  else if (key == "model.seed") c.model.seed = to_u64(key, v);
  else if (key == "ablation.no_cluster") c.ablation.no_cluster = to_bool(key, v);
  else if (key == "ablation.euclidean_distance") c.ablation.euclidean_distance = to_bool(key, v);
  else if (key == "ablation.random_unary") c.ablation.random_unary = to_bool(key, v);
  else if (key == "ablation.random_binary") c.ablation.random_binary = to_bool(key, v);
  else if (key == "split.test_fraction") c.test_fraction = to_real(key, v);
  else if (key == "cv.folds") c.cv_folds = to_size(key, v);
  else throw std::invalid_argument("unknown config key: " + std::string(key));
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      apply_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_config_text(const PipelineConfig& c) {
  std::ostringstream os;
  auto kv = [&](std::string_view k, const std::string& v) { os << k << " = " << v << '\n'; };
  kv("epochs", std::to_string(c.epochs));
  kv("steps", std::to_string(c.steps_per_epoch));
  kv("reset_per_epoch", bool_text(c.reset_per_epoch));
  kv("seed", std::to_string(c.seed));
  if (!c.data_path.empty()) kv("data", c.data_path);
  if (!c.target_column.empty()) kv("target", c.target_column);
  if (c.task) kv("task", std::string(task_name(*c.task)));
  if (!c.output_dir.empty()) kv("out", c.output_dir);
  kv("state.method", std::string(state_spec_name(c.state)));
  kv("state.ae_k", std::to_string(c.encoder.ae_col_dim));
  kv("state.ae_d", std::to_string(c.encoder.ae_row_dim));
  kv("state.gae_k", std::to_string(c.encoder.gae_dim));
  kv("state.train_epochs", std::to_string(c.encoder.train_epochs));
  kv("state.incremental_epochs", std::to_string(c.encoder.incremental_epochs));
  kv("state.row_cap", std::to_string(c.encoder.row_subsample_cap));
  kv("state.lr", real_text(c.encoder.learning_rate));
  kv("agent.kind", std::string(agents::agent_kind_name(c.agent.kind)));
  kv("agent.gamma", real_text(c.agent.gamma));
  kv("agent.epsilon_start", real_text(c.agent.epsilon_start));
  kv("agent.epsilon_min", real_text(c.agent.epsilon_min));
  kv("agent.epsilon_decay", real_text(c.agent.epsilon_decay));
  kv("agent.memory", std::to_string(c.agent.memory_capacity));
  kv("agent.batch", std::to_string(c.agent.batch_size));
  kv("agent.target_sync", std::to_string(c.agent.target_sync_every));
  kv("agent.beta", real_text(c.agent.entropy_beta));
  kv("agent.lr", real_text(c.agent.learning_rate));
  std::string hidden;
  for (std::size_t i = 0; i < c.agent.hidden.size(); ++i)
    hidden += (i ? "," : "") + std::to_string(c.agent.hidden[i]);
  kv("agent.hidden", hidden);
  if (c.agent_seed) kv("agent.seed", std::to_string(*c.agent_seed));
  kv("agent.group1_reward", c.agent.group1_reward == agents::Group1Reward::utility ? "utility" : "delta");
  kv("generation.top_k", c.generation.top_k_pairs ? std::to_string(*c.generation.top_k_pairs) : "auto");
  kv("generation.size_factor", real_text(c.generation.size_tolerance_factor));
  kv("generation.dedup", bool_text(c.generation.dedup));
  kv("generation.kbest_target", c.generation.kbest_target == KbestTarget::cap ? "cap" : "original");
  kv("cluster.threshold", c.cluster.stop_threshold ? real_text(*c.cluster.stop_threshold) : "auto");
  kv("cluster.epsilon", real_text(c.cluster.epsilon));
  kv("measures.max_bins", std::to_string(c.binning.max_bins));
  kv("measures.include_diagonal", bool_text(c.utility.include_diagonal));
  if (c.model_kind) kv("model.kind", std::string(model_kind_name(*c.model_kind)));
  kv("model.n_trees", std::to_string(c.model.n_trees));
  kv("model.max_depth", std::to_string(c.model.max_depth));
  kv("model.min_samples_leaf", std::to_string(c.model.min_samples_leaf));
  kv("model.ridge_lambda", real_text(c.model.ridge_lambda));
  kv("model.knn_k", std::to_string(c.model.knn_k));
  kv("model.seed", std::to_string(c.model.seed));
  kv("ablation.no_cluster", bool_text(c.ablation.no_cluster));
  kv("ablation.euclidean_distance", bool_text(c.ablation.euclidean_distance));
  kv("ablation.random_unary", bool_text(c.ablation.random_unary));
  kv("ablation.random_binary", bool_text(c.ablation.random_binary));
  kv("split.test_fraction", real_text(c.test_fraction));
  kv("cv.folds", std::to_string(c.cv_folds));
  return os.str();
}

}  // namespace featforge
