#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "featforge/common.hpp"
#include "featforge/dataset.hpp"
#include "featforge/evaluator.hpp"
#include "featforge/grouping.hpp"
#include "featforge/measures.hpp"
#include "featforge/pipeline.hpp"
#include "featforge/state_rep.hpp"

using namespace featforge;

namespace {

Eigen::MatrixXd normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

std::vector<double> product_target(const Eigen::MatrixXd& x, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> y(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[static_cast<std::size_t>(i)] = x(i, 0) * x(i, 1) + 0.05 * rng.normal();
  return y;
}

std::vector<std::span<const double>> column_views(const Eigen::MatrixXd& x) {
  std::vector<std::span<const double>> cols;
  for (Eigen::Index j = 0; j < x.cols(); ++j) cols.emplace_back(x.col(j).data(), static_cast<std::size_t>(x.rows()));
  return cols;
}

void BM_MutualInformation(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto x = normal_matrix(rows, 2, 1);
  const std::span<const double> a(x.col(0).data(), rows), b(x.col(1).data(), rows);
  for (auto _ : state) benchmark::DoNotOptimize(mutual_information(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_MutualInformation)->Arg(500)->Arg(5000)->Arg(50000);

void BM_MiTable(benchmark::State& state) {
  const auto x = normal_matrix(500, static_cast<std::size_t>(state.range(0)), 2);
  const auto y = product_target(x, 3);
  const auto cols = column_views(x);
  for (auto _ : state) benchmark::DoNotOptimize(MiTable(cols, y));
}
BENCHMARK(BM_MiTable)->Arg(10)->Arg(40);

void BM_MCluster(benchmark::State& state) {
  const auto x = normal_matrix(500, static_cast<std::size_t>(state.range(0)), 4);
  const auto y = product_target(x, 5);
  const auto cols = column_views(x);
  const MiTable mi(cols, y);
  for (auto _ : state) benchmark::DoNotOptimize(m_cluster(mi, cols));
}
BENCHMARK(BM_MCluster)->Arg(10)->Arg(40);

void BM_RepDs(benchmark::State& state) {
  const auto x = normal_matrix(static_cast<std::size_t>(state.range(0)), 20, 6);
  for (auto _ : state) benchmark::DoNotOptimize(rep_ds(x));
}
BENCHMARK(BM_RepDs)->Arg(500)->Arg(5000);

void BM_RandomForestSplit(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto x = normal_matrix(rows, 10, 7);
  const auto y = product_target(x, 8);
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < rows; ++i) (i % 5 == 0 ? test : train).push_back(i);
  ModelSpec spec;
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate_split(x, y, TaskKind::regression, spec, train, test));
}
BENCHMARK(BM_RandomForestSplit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_PipelineEpoch(benchmark::State& state) {
  auto x = normal_matrix(500, 5, 9);
  auto y = product_target(x, 10);
  std::vector<std::string> names;
  for (int j = 0; j < 5; ++j) names.push_back("f" + std::to_string(j + 1));
  const Dataset data(std::move(x), std::move(names), std::move(y), TaskKind::regression);
  PipelineConfig cfg;
  cfg.epochs = 1;
  cfg.steps_per_epoch = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_grfg(data, cfg));
}
BENCHMARK(BM_PipelineEpoch)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
