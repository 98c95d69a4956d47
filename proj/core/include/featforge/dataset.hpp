#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "featforge/common.hpp"

namespace featforge {

enum class TaskKind { classification, regression, outlier_detection };

/// Accepts "cls"/"classification", "reg"/"regression", "outlier"/"outlier_detection".
TaskKind parse_task(std::string_view text);
std::string_view task_name(TaskKind task);

/// Tabular dataset: m samples by n features plus a target column.
///
/// Samples are stored column-major, so a feature column is contiguous and can
/// be viewed with column().
class Dataset {
 public:
  /// Validates every invariant; throws DataError when one is violated.
  Dataset(Eigen::MatrixXd samples, std::vector<std::string> feature_names,
          std::vector<double> target, TaskKind task);

  std::size_t rows() const { return static_cast<std::size_t>(samples_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(samples_.cols()); }

  const Eigen::MatrixXd& samples() const { return samples_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<double>& target() const { return target_; }
  TaskKind task() const { return task_; }

  std::span<const double> column(std::size_t j) const {
    return {samples_.col(static_cast<Eigen::Index>(j)).data(), rows()};
  }
  std::optional<std::size_t> find_feature(std::string_view name) const;

  /// Copy restricted to the given rows, in the given order.
  Dataset subset(std::span<const std::size_t> row_ids) const;

 private:
  Eigen::MatrixXd samples_;
  std::vector<std::string> feature_names_;
  std::vector<double> target_;
  TaskKind task_;
};

struct CsvLoadStats {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::vector<std::string> encoded_columns;
};

/// Loads a header-first, comma-separated file. Rows with any empty cell are
/// dropped; non-numeric columns are integer coded by first appearance.
Dataset load_csv(const std::filesystem::path& path, std::string_view target_column,
                 TaskKind task, CsvLoadStats* stats = nullptr);

/// Writes features followed by the target column, full round-trip precision.
void write_csv(const Dataset& data, const std::filesystem::path& path,
               std::string_view target_name = "target");

/// Splits one CSV record. Double-quoted fields may contain commas; "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct SplitPlan {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
};

/// Single seeded train/test split, stratified for classification.
SplitPlan make_split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// k disjoint test folds covering all rows, stratified for classification.
SplitPlan make_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

}  // namespace featforge
