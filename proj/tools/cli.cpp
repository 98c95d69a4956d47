#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "featforge/config.hpp"
#include "featforge/dataset.hpp"
#include "featforge/evaluator.hpp"
#include "featforge/grouping.hpp"
#include "featforge/operators.hpp"
#include "featforge/pipeline.hpp"

namespace featforge {

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raw flag values; every one maps onto a config key.
struct Flags {
  std::string data, target, task, agent, state, config, out, method, seed, epochs, steps;
  bool reset_per_epoch = false;
  bool no_cluster = false;
  bool euclidean = false;
  bool random_unary = false;
  bool random_binary = false;
};

void add_io_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--data", f.data, "CSV file with a header row");
  sub.add_option("--target", f.target, "Name of the target column");
  sub.add_option("--task", f.task, "cls, reg or outlier");
  sub.add_option("--config", f.config, "Flat key=value config file; flags override it");
  sub.add_option("--seed", f.seed, "Run seed (falls back to FEATFORGE_SEED)");
}

void add_search_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--agent", f.agent, "dqn, ddqn or ac");
  sub.add_option("--state", f.state, "ds, ae, gae, ds+ae or ds+ae+gae");
  sub.add_option("--epochs", f.epochs, "Number of epochs");
  sub.add_option("--steps", f.steps, "Exploration steps per epoch");
  sub.add_option("--out", f.out, "Output directory for report.json, trace.jsonl, best_features.csv");
  sub.add_flag("--reset-per-epoch", f.reset_per_epoch, "Restart from the original features each epoch");
  sub.add_flag("--no-cluster", f.no_cluster, "Use singleton groups");
  sub.add_flag("--euclidean-distance", f.euclidean, "Group by mean-vector Euclidean distance");
  sub.add_flag("--random-unary", f.random_unary, "Random member choice for unary operations");
  sub.add_flag("--random-binary", f.random_binary, "Random pairs for binary operations");
}

PipelineConfig build_config(const Flags& f) {
  PipelineConfig cfg;
  try {
    if (const char* env = std::getenv("FEATFORGE_SEED"); env && *env) apply_config_value(cfg, "seed", env);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("FEATFORGE_SEED: ") + e.what());
  }
  if (!f.config.empty()) cfg = load_config_file(f.config, cfg);
  const std::pair<const char*, const std::string*> values[] = {
      {"data", &f.data},       {"target", &f.target},        {"task", &f.task},
      {"agent.kind", &f.agent}, {"state.method", &f.state},  {"seed", &f.seed},
      {"epochs", &f.epochs},   {"steps", &f.steps},          {"out", &f.out}};
  for (const auto& [key, value] : values) {
    if (!value->empty()) apply_config_value(cfg, key, *value);
  }
  if (f.reset_per_epoch) cfg.reset_per_epoch = true;
  if (f.no_cluster) cfg.ablation.no_cluster = true;
  if (f.euclidean) cfg.ablation.euclidean_distance = true;
  if (f.random_unary) cfg.ablation.random_unary = true;
  if (f.random_binary) cfg.ablation.random_binary = true;
  return cfg;
}

Dataset load_input(const PipelineConfig& cfg) {
  if (cfg.data_path.empty()) throw UsageError("--data is required");
  if (cfg.target_column.empty()) throw UsageError("--target is required");
  if (!cfg.task) throw UsageError("--task is required");
  return load_csv(cfg.data_path, cfg.target_column, *cfg.task);
}

void print_summary(const RunResult& r, std::ostream& out) {
  const auto& rep = r.report;
  out << "method " << rep.method << '\n'
      << "steps " << rep.steps.size() << '\n'
      << "baseline_score " << rep.baseline_score << '\n'
      << "best_score " << rep.best_score << '\n'
      << "best_cv_" << rep.best_cv.primary_name << ' ' << rep.best_cv.primary << '\n'
      << "best_features " << rep.best_feature_names.size() << '\n';
  for (const auto& name : rep.best_feature_names) out << "  " << name << '\n';
}

int finish_run(const RunResult& result, const Dataset& data, const PipelineConfig& cfg, std::ostream& out) {
  if (cfg.output_dir.empty()) {
    out << result.report.to_json() << '\n';
  } else {
    write_run_outputs(result, data, cfg.output_dir, cfg.target_column);
    print_summary(result, out);
  }
  return kExitOk;
}

int cmd_cluster(const PipelineConfig& cfg, std::ostream& out) {
  const Dataset data = load_input(cfg);
  std::vector<std::span<const double>> cols;
  for (std::size_t j = 0; j < data.cols(); ++j) cols.push_back(data.column(j));
  ClusterConfig cc = cfg.cluster;
  if (cfg.ablation.euclidean_distance) cc.metric = GroupMetric::euclidean;
  const GroupPartition p = cfg.ablation.no_cluster ? singleton_partition(data.cols())
                                                   : m_cluster(cols, data.target(), cc, cfg.binning);
  nlohmann::json j;
  j["threshold"] = p.threshold_used;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : p.groups) {
    nlohmann::json names = nlohmann::json::array();
    for (auto i : g.indices) names.push_back(data.feature_names()[i]);
    j["groups"].push_back(names);
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_evaluate(const PipelineConfig& cfg, std::ostream& out) {
  const Dataset data = load_input(cfg);
  const SplitPlan folds = make_folds(data, cfg.cv_folds, Rng::derive(cfg.seed, "folds"));
  const EvalResult r = cross_validate(data.samples(), data.target(), data.task(),
                                      effective_model(cfg, data.task()), folds.folds);
  out << r.to_json() << '\n';
  return kExitOk;
}

int cmd_trace(const PipelineConfig& cfg, std::ostream& out) {
  if (cfg.output_dir.empty()) throw UsageError("--out (the run directory) is required");
  const std::filesystem::path dir = cfg.output_dir;
  std::ifstream in(dir / "trace.jsonl");
  if (!in) throw DataError("cannot read " + (dir / "trace.jsonl").string());
  std::vector<TraceRecord> records;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      records.push_back(trace_record_from_json(line));
    } catch (const std::exception& e) {
      throw DataError("malformed trace line: " + std::string(e.what()));
    }
  }
  for (const auto& r : records) out << r.depth << '\t' << r.created_at_step << '\t' << r.expression << '\n';
  if (cfg.data_path.empty()) return kExitOk;

  // Re-evaluate every expression on the original data and compare with the export.
  const Dataset original = load_input(cfg);
  const Dataset exported = load_csv(dir / "best_features.csv", cfg.target_column, *cfg.task);
  if (exported.rows() != original.rows()) throw DataError("exported table has a different row count");
  double worst = 0.0;
  for (std::size_t j = 0; j < exported.cols(); ++j) {
    const FeatureExpr e = parse_expr(exported.feature_names()[j], original.feature_names());
    const auto values = evaluate_expr(e, original);
    const auto stored = exported.column(j);
    for (std::size_t r = 0; r < values.size(); ++r) {
      const double scale = std::max(1.0, std::abs(stored[r]));
      worst = std::max(worst, std::abs(values[r] - stored[r]) / scale);
    }
  }
  out << "max_relative_error " << std::setprecision(3) << worst << '\n';
  if (worst > 1e-9) throw DataError("trace does not reproduce the exported values");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"featforge: group-wise reinforced feature generation and selection", "featforge"};
  app.require_subcommand(1);
  Flags f;
  auto* run = app.add_subcommand("run", "Run the reinforced search");
  auto* baseline = app.add_subcommand("baseline", "Run a matched-budget baseline");
  auto* cluster = app.add_subcommand("cluster", "Print feature groups as JSON");
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate the raw features; prints JSON");
  auto* trace = app.add_subcommand("trace", "Print and optionally verify a run's trace");
  for (auto* sub : {run, baseline, cluster, evaluate, trace}) add_io_flags(*sub, f);
  add_search_flags(*run, f);
  add_search_flags(*baseline, f);
  baseline->add_option("--method", f.method, "Baseline method (rdg)")->required();
  cluster->add_flag("--no-cluster", f.no_cluster, "Use singleton groups");
  cluster->add_flag("--euclidean-distance", f.euclidean, "Group by mean-vector Euclidean distance");
  trace->add_option("--out", f.out, "Run directory");

  std::vector<const char*> argv{"featforge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    PipelineConfig cfg = build_config(f);
    if (*run || *baseline) {
      if (*baseline && f.method != "rdg") throw UsageError("unknown baseline method: " + f.method);
      cfg.validate();
      const Dataset data = load_input(cfg);
      const RunResult result = *run ? run_grfg(data, cfg) : run_rdg_baseline(data, cfg);
      return finish_run(result, data, cfg, out);
    }
    if (*cluster) return cmd_cluster(cfg, out);
    if (*evaluate) return cmd_evaluate(cfg, out);
    return cmd_trace(cfg, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n' << app.get_subcommands().front()->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace featforge
