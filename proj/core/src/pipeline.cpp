#include "featforge/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "featforge/agents.hpp"
#include "featforge/grouping.hpp"
#include "featforge/measures.hpp"
#include "featforge/operators.hpp"
#include "featforge/state_rep.hpp"

namespace featforge {

ModelSpec effective_model(const PipelineConfig& config, TaskKind task) {
  ModelSpec spec = config.model;
  spec.kind = config.model_kind.value_or(default_model(task));
  spec.seed = Rng::derive(config.seed ^ Rng::mix(config.model.seed), "model");
  return spec;
}

namespace {

/// MI statistics of the current table on the search split's train rows.
struct MiSnapshot {
  std::vector<std::vector<double>> columns;
  std::vector<std::span<const double>> views;
  std::unique_ptr<MiTable> mi;
};

MiSnapshot snapshot(const FeatureTable& table, std::span<const std::size_t> rows,
                    std::span<const double> y_rows, const BinningSpec& binning) {
  MiSnapshot s;
  s.columns = table.columns_at_rows(rows);
  s.views.assign(s.columns.begin(), s.columns.end());
  s.mi = std::make_unique<MiTable>(s.views, y_rows, binning);
  return s;
}

std::vector<std::string> group_names(const FeatureGroup& g, const FeatureTable& table) {
  std::vector<std::string> out;
  for (auto i : g.indices) out.push_back(table.expr(i).to_string());
  return out;
}

/// State shared by both search loops.
class SearchRun {
 public:
  SearchRun(const Dataset& data, const PipelineConfig& config, std::string method)
      : data_(data), config_(config), model_(effective_model(config, data.task())) {
    config_.validate();
    split_ = make_split(data, config_.test_fraction, Rng::derive(config_.seed, "split"));
    for (auto r : split_.train_indices) y_train_.push_back(data.target()[r]);
    original_ = FeatureTable::from_dataset(data);
    table_ = original_;
    generation_ = config_.generation;
    generation_.random_unary = generation_.random_unary || config_.ablation.random_unary;
    generation_.random_binary = generation_.random_binary || config_.ablation.random_binary;

    auto& r = result_.report;
    r.method = std::move(method);
    r.task = std::string(task_name(data.task()));
    r.agent = std::string(agents::agent_kind_name(config_.agent.kind));
    r.state = std::string(state_spec_name(config_.state));
    r.seed = config_.seed;
    r.epochs = config_.epochs;
    r.steps_per_epoch = config_.steps_per_epoch;
    r.original_feature_count = data.cols();
    r.baseline_score = score(original_);
  }

  const PipelineConfig& config() const { return config_; }
  FeatureTable& table() { return table_; }
  const GenerationConfig& generation() const { return generation_; }
  std::span<const std::size_t> mi_rows() const { return split_.train_indices; }
  MiSnapshot current_mi() const { return snapshot(table_, split_.train_indices, y_train_, config_.binning); }

  void begin_epoch(std::size_t epoch) {
    if (epoch > 0 && config_.reset_per_epoch) table_ = original_;
  }

  double score(const FeatureTable& t) const {
    return downstream_performance(t.matrix(), data_.target(), data_.task(), model_, split_);
  }

  /// Postprocesses, applies size control, scores the new set and returns the
  /// partially filled record.
  StepRecord finish_step(std::vector<GeneratedFeature> generated, long step_index, StepRecord rec) {
    rec.generated = postprocess(table_, std::move(generated), step_index, generation_.dedup).added;
    rec.size_controlled =
        size_control(table_, data_.cols(), data_.target(), split_.train_indices, generation_, config_.binning);
    rec.downstream = score(table_);
    rec.utility_after = utility_u(*current_mi().mi, config_.utility);
    rec.feature_count = table_.size();
    return rec;
  }

  void record(StepRecord rec) {
    auto& r = result_.report;
    if (r.steps.empty() || rec.downstream > r.best_score) {
      r.best_score = rec.downstream;
      r.best_step = r.steps.size();
      result_.best = table_;
    }
    r.steps.push_back(std::move(rec));
  }

  RunResult finish() {
    auto& r = result_.report;
    r.best_feature_names = result_.best.names();
    const SplitPlan folds = make_folds(data_, config_.cv_folds, Rng::derive(config_.seed, "folds"));
    r.baseline_cv = cross_validate(original_.matrix(), data_.target(), data_.task(), model_, folds.folds);
    r.best_cv = cross_validate(result_.best.matrix(), data_.target(), data_.task(), model_, folds.folds);
    return std::move(result_);
  }

 private:
  const Dataset& data_;
  PipelineConfig config_;
  ModelSpec model_;
  SplitPlan split_;
  std::vector<double> y_train_;
  FeatureTable original_;
  FeatureTable table_;
  GenerationConfig generation_;
  RunResult result_;
};

std::uint64_t agent_seed(const PipelineConfig& c, std::string_view label) {
  return Rng::derive(c.agent_seed.value_or(Rng::derive(c.seed, "agents")), label);
}

}  // namespace

RunResult run_grfg(const Dataset& data, const PipelineConfig& config) {
  SearchRun run(data, config, "grfg");
  const PipelineConfig& cfg = run.config();

  EncoderConfig enc_cfg = cfg.encoder;
  enc_cfg.seed = Rng::derive(cfg.seed, "state");
  StateEncoder encoder(cfg.state, enc_cfg);
  const std::size_t len = encoder.length();

  auto make = [&](std::string_view label, std::size_t state_dim, std::size_t cand_dim) {
    agents::AgentConfig ac = cfg.agent;
    ac.seed = agent_seed(cfg, label);
    return agents::make_agent(ac, state_dim, cand_dim);
  };
  auto group1_agent = make("agent.group1", len, len);
  auto op_agent = make("agent.operation", 2 * len, kOperationCount);
  auto group2_agent = make("agent.group2", 2 * len + kOperationCount, len);

  std::vector<StateVector> op_reps;
  for (std::size_t o = 0; o < kOperationCount; ++o) op_reps.push_back(rep_operation(o, kOperationCount));

  ClusterConfig cluster = cfg.cluster;
  if (cfg.ablation.euclidean_distance) cluster.metric = GroupMetric::euclidean;
  Rng gen_rng(Rng::derive(cfg.seed, "generation"));

  long step_index = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    run.begin_epoch(epoch);
    for (std::size_t step = 0; step < cfg.steps_per_epoch; ++step, ++step_index) {
      FeatureTable& table = run.table();
      MiSnapshot before = run.current_mi();
      const GroupPartition partition = cfg.ablation.no_cluster
                                           ? singleton_partition(table.size())
                                           : m_cluster(*before.mi, before.views, cluster);
      const auto& groups = partition.groups;

      StepRecord rec;
      rec.epoch = epoch;
      rec.step = step;
      rec.group_count = groups.size();
      rec.utility_before = utility_u(*before.mi, cfg.utility);

      const StateVector whole = encoder.encode(table.matrix());
      std::vector<StateVector> group_reps;
      for (const auto& g : groups) group_reps.push_back(encoder.encode(table.matrix(g.indices)));

      const StateVector s1 = compose_state(StateRole::group1, std::span(&whole, 1));
      const std::size_t a1 = group1_agent->act(s1, group_reps);
      const FeatureGroup& c1 = groups[a1];

      const std::vector<StateVector> op_parts{whole, group_reps[a1]};
      const std::size_t o = op_agent->act(compose_state(StateRole::operation, op_parts), op_reps);
      const OperationKind op = operation_from_index(o);

      std::vector<std::size_t> valid;
      if (!is_unary(op)) {
        for (std::size_t j = 0; j < groups.size(); ++j)
          if (has_binary_pairs(c1, groups[j])) valid.push_back(j);
      }
      if (valid.empty()) {
        for (std::size_t j = 0; j < groups.size(); ++j) valid.push_back(j);
      }
      std::vector<StateVector> cand2;
      for (auto j : valid) cand2.push_back(group_reps[j]);
      const std::vector<StateVector> g2_parts{whole, group_reps[a1], op_reps[o]};
      const std::size_t a2 = valid[group2_agent->act(compose_state(StateRole::group2, g2_parts), cand2)];
      const FeatureGroup& c2 = groups[a2];

      rec.group1 = group_names(c1, table);
      rec.operation = std::string(operation_token(op));
      rec.group2 = group_names(c2, table);

      std::vector<GeneratedFeature> generated;
      if (is_unary(op)) {
        generated = generate_unary(op, c1, c2, table, *before.mi, run.generation(), gen_rng);
      } else if (has_binary_pairs(c1, c2)) {
        generated = cross_binary_topk(op, c1, c2, table, run.generation(), gen_rng);
      }
      rec = run.finish_step(std::move(generated), step_index, std::move(rec));

      const agents::Rewards rw = agents::compute_rewards(rec.utility_before, rec.utility_after,
                                                         rec.downstream, cfg.agent.group1_reward);
      group1_agent->reward(rw.group1);
      op_agent->reward(rw.operation);
      group2_agent->reward(rw.group2);
      rec.reward_group1 = rw.group1;
      rec.reward_operation = rw.operation;
      rec.reward_group2 = rw.group2;
      run.record(std::move(rec));
    }
  }
  return run.finish();
}

RunResult run_rdg_baseline(const Dataset& data, const PipelineConfig& config) {
  SearchRun run(data, config, "rdg");
  const PipelineConfig& cfg = run.config();
  Rng rng(Rng::derive(cfg.seed, "rdg"));

  long step_index = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    run.begin_epoch(epoch);
    for (std::size_t step = 0; step < cfg.steps_per_epoch; ++step, ++step_index) {
      FeatureTable& table = run.table();
      StepRecord rec;
      rec.epoch = epoch;
      rec.step = step;
      rec.group_count = table.size();
      rec.utility_before = utility_u(*run.current_mi().mi, cfg.utility);

      const std::size_t i = rng.index(table.size());
      const OperationKind op = operation_from_index(rng.index(kOperationCount));
      const std::size_t j = rng.index(table.size());
      rec.group1 = {table.expr(i).to_string()};
      rec.operation = std::string(operation_token(op));

      std::vector<GeneratedFeature> generated;
      if (is_unary(op)) {
        generated.push_back({apply_unary(op, table.column(i)), FeatureExpr::unary(op, table.expr(i))});
      } else {
        rec.group2 = {table.expr(j).to_string()};
        generated.push_back({apply_binary(op, table.column(i), table.column(j)),
                             FeatureExpr::binary(op, table.expr(i), table.expr(j))});
      }
      rec = run.finish_step(std::move(generated), step_index, std::move(rec));
      const agents::Rewards rw = agents::compute_rewards(rec.utility_before, rec.utility_after,
                                                         rec.downstream, cfg.agent.group1_reward);
      rec.reward_group1 = rw.group1;
      rec.reward_operation = rw.operation;
      rec.reward_group2 = rw.group2;
      run.record(std::move(rec));
    }
  }
  return run.finish();
}

// --- reporting ------------------------------------------------------------------

namespace {

nlohmann::json eval_json(const EvalResult& r) {
  return {{"primary_metric", r.primary_name}, {"primary", r.primary}, {"auxiliary", r.auxiliary}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string RunReport::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["task"] = task;
  j["agent"] = agent;
  j["state"] = state;
  j["seed"] = seed;
  j["epochs"] = epochs;
  j["steps_per_epoch"] = steps_per_epoch;
  j["original_feature_count"] = original_feature_count;
  j["baseline_score"] = baseline_score;
  j["best_score"] = best_score;
  j["best_step"] = best_step;
  j["best_feature_names"] = best_feature_names;
  j["baseline_cv"] = eval_json(baseline_cv);
  j["best_cv"] = eval_json(best_cv);
  auto& records = j["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    records.push_back({{"epoch", s.epoch},
                       {"step", s.step},
                       {"group1", s.group1},
                       {"operation", s.operation},
                       {"group2", s.group2},
                       {"r1", s.reward_group1},
                       {"r_op", s.reward_operation},
                       {"r2", s.reward_group2},
                       {"u_before", s.utility_before},
                       {"u_after", s.utility_after},
                       {"v_a", s.downstream},
                       {"feature_count", s.feature_count},
                       {"group_count", s.group_count},
                       {"generated", s.generated},
                       {"size_controlled", s.size_controlled}});
  }
  return j.dump(2);
}

void export_trace(const FeatureTable& best, const Dataset& original, const std::filesystem::path& dir,
                  const std::string& target_name) {
  if (best.size() == 0) throw std::invalid_argument("export_trace: empty feature set");
  if (best.rows() != original.rows()) throw std::invalid_argument("export_trace: row count mismatch");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  auto trace = open_output(dir / "trace.jsonl");
  for (std::size_t i = 0; i < best.size(); ++i) {
    const auto& e = best.expr(i);
    trace << to_json_line({e.to_string(), e.to_string(), e.depth(), best.created_at(i)}) << '\n';
  }

  auto csv = open_output(dir / "best_features.csv");
  for (std::size_t i = 0; i < best.size(); ++i) csv << csv_field(best.expr(i).to_string()) << ',';
  csv << csv_field(target_name) << '\n';
  for (std::size_t r = 0; r < best.rows(); ++r) {
    for (std::size_t i = 0; i < best.size(); ++i) csv << number(best.column(i)[r]) << ',';
    csv << number(original.target()[r]) << '\n';
  }
  if (!csv || !trace) throw std::runtime_error("failed writing trace outputs in " + dir.string());
}

void write_run_outputs(const RunResult& result, const Dataset& original, const std::filesystem::path& dir,
                       const std::string& target_name) {
  export_trace(result.best, original, dir, target_name);
  auto report = open_output(dir / "report.json");
  report << result.report.to_json() << '\n';
  if (!report) throw std::runtime_error("failed writing " + (dir / "report.json").string());
}

}  // namespace featforge
