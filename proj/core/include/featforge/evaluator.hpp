#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "featforge/dataset.hpp"

namespace featforge {

enum class ModelKind { random_forest, ridge, knn_anomaly };
ModelKind parse_model_kind(std::string_view text);
std::string_view model_kind_name(ModelKind kind);
/// random_forest for classification and regression, knn_anomaly for outliers.
ModelKind default_model(TaskKind task);

struct ModelSpec {
  ModelKind kind = ModelKind::random_forest;
  std::size_t n_trees = 10;
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 2;
  double ridge_lambda = 1.0;
  std::size_t knn_k = 5;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on a non-positive hyperparameter.
  void validate() const;
};

/// Bagged CART ensemble. Classification targets must be integer coded.
class RandomForest {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  static RandomForest train(const Eigen::MatrixXd& x, std::span<const double> y,
                            bool classification, const ModelSpec& spec);

  std::vector<double> predict(const Eigen::MatrixXd& x) const;
  double predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const;

  const std::vector<Tree>& trees() const { return trees_; }
  bool classification() const { return classification_; }
  bool operator==(const RandomForest& other) const;

 private:
  std::vector<Tree> trees_;
  bool classification_ = false;
};

struct RidgeModel {
  std::vector<double> coefficients;  // original feature scale
  double intercept = 0.0;

  std::vector<double> predict(const Eigen::MatrixXd& x) const;
};

/// Penalized least squares on z-scored features with an unpenalized intercept.
RidgeModel ridge_fit(const Eigen::MatrixXd& x, std::span<const double> y, double lambda);
std::vector<double> ridge_fit_predict(const Eigen::MatrixXd& train_x, std::span<const double> train_y,
                                      const Eigen::MatrixXd& test_x, double lambda);

/// Mean Euclidean distance to the k nearest other rows, on z-scored features.
std::vector<double> knn_anomaly_scores(const Eigen::MatrixXd& x, std::size_t k);
/// Scores `query` rows against `reference` rows, z-scored on reference statistics.
std::vector<double> knn_anomaly_scores(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& query,
                                       std::size_t k);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro
  /// Per-class values for class 1; only meaningful for binary labels.
  double positive_precision = 0.0;
  double positive_recall = 0.0;
  double positive_f1 = 0.0;
};

/// Macro averages run over the union of classes seen in either vector.
ClassificationMetrics classification_metrics(std::span<const double> predicted,
                                             std::span<const double> truth);
double metric_f1(std::span<const double> predicted, std::span<const double> truth);
/// 1 - sum|y - p| / sum|y - mean(y)|. Unclamped.
double metric_1rae(std::span<const double> predicted, std::span<const double> truth);
double metric_1mae(std::span<const double> predicted, std::span<const double> truth);
double metric_1rmse(std::span<const double> predicted, std::span<const double> truth);
/// Mann-Whitney statistic with average ranks for ties; truth in {0,1}.
double metric_auc(std::span<const double> scores, std::span<const double> truth);

struct EvalResult {
  std::string primary_name;
  double primary = 0.0;
  std::map<std::string, double> auxiliary;

  std::string to_json() const;
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows);

/// Trains on `train` rows and scores the task's primary metric on `test` rows.
EvalResult evaluate_split(const Eigen::MatrixXd& x, std::span<const double> y, TaskKind task,
                          const ModelSpec& spec, std::span<const std::size_t> train,
                          std::span<const std::size_t> test);

/// Search-time reward: primary metric on the plan's train/test split, with
/// regression 1-RAE clamped at 0.
double downstream_performance(const Eigen::MatrixXd& x, std::span<const double> y, TaskKind task,
                              const ModelSpec& spec, const SplitPlan& split);

/// Fold means of every metric.
EvalResult cross_validate(const Eigen::MatrixXd& x, std::span<const double> y, TaskKind task,
                          const ModelSpec& spec, std::span<const Fold> folds);

}  // namespace featforge
