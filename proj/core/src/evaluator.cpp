#include "featforge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "featforge/common.hpp"

namespace featforge {

ModelKind parse_model_kind(std::string_view text) {
  if (text == "random_forest" || text == "rf") return ModelKind::random_forest;
  if (text == "ridge") return ModelKind::ridge;
  if (text == "knn_anomaly" || text == "knn") return ModelKind::knn_anomaly;
  throw std::invalid_argument("unknown model kind: " + std::string(text));
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::ridge: return "ridge";
    case ModelKind::knn_anomaly: return "knn_anomaly";
  }
  return "random_forest";
}

ModelKind default_model(TaskKind task) {
  return task == TaskKind::outlier_detection ? ModelKind::knn_anomaly : ModelKind::random_forest;
}

void ModelSpec::validate() const {
  if (n_trees == 0) throw std::invalid_argument("n_trees must be positive");
  if (max_depth == 0) throw std::invalid_argument("max_depth must be positive");
  if (min_samples_leaf == 0) throw std::invalid_argument("min_samples_leaf must be positive");
  if (!(ridge_lambda > 0.0)) throw std::invalid_argument("ridge_lambda must be positive");
  if (knn_k == 0) throw std::invalid_argument("knn_k must be positive");
}

// --- random forest -----------------------------------------------------------

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  std::span<const double> y;
  bool classification;
  const ModelSpec& spec;
  std::span<const double> classes;
  Rng& rng;
  RandomForest::Tree nodes;

  std::size_t class_of(double v) const {
    return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), v) - classes.begin());
  }

  double leaf_value(const std::vector<std::size_t>& ids) const {
    if (!classification) {
      double s = 0.0;
      for (auto i : ids) s += y[i];
      return s / static_cast<double>(ids.size());
    }
    std::vector<std::size_t> counts(classes.size(), 0);
    for (auto i : ids) ++counts[class_of(y[i])];
    return classes[static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin())];
  }

  // Weighted impurity n * impurity, for a node summarized by its statistics.
  double impurity(const std::vector<double>& counts, double n) const {
    if (n <= 0) return 0.0;
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    return n - sq / n;
  }
  static double sse(double sum, double sumsq, double n) {
    return n <= 0 ? 0.0 : std::max(0.0, sumsq - sum * sum / n);
  }

  int build(std::vector<std::size_t> ids, std::size_t depth) {
    const int index = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[static_cast<std::size_t>(index)].value = leaf_value(ids);

    const std::size_t n = ids.size();
    const bool pure = std::all_of(ids.begin(), ids.end(), [&](std::size_t i) { return y[i] == y[ids[0]]; });
    if (depth >= spec.max_depth || n < 2 * spec.min_samples_leaf || pure) return index;

    const auto n_features = static_cast<std::size_t>(x.cols());
    const std::size_t mtry = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features)))));
    std::vector<std::size_t> features(n_features);
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t i = 0; i < std::min(mtry, n_features); ++i)
      std::swap(features[i], features[i + rng.index(n_features - i)]);
    features.resize(std::min(mtry, n_features));

    double parent = 0.0;
    std::vector<double> total_counts(classes.size(), 0.0);
    double total_sum = 0.0, total_sq = 0.0;
    if (classification) {
      for (auto i : ids) total_counts[class_of(y[i])] += 1.0;
      parent = impurity(total_counts, static_cast<double>(n));
    } else {
      for (auto i : ids) {
        total_sum += y[i];
        total_sq += y[i] * y[i];
      }
      parent = sse(total_sum, total_sq, static_cast<double>(n));
    }

    double best = parent;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order = ids;
    std::vector<double> left_counts(classes.size());
    for (std::size_t f : features) {
      const auto col = static_cast<Eigen::Index>(f);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x(static_cast<Eigen::Index>(a), col), vb = x(static_cast<Eigen::Index>(b), col);
        return va < vb || (va == vb && a < b);
      });
      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      double ls = 0.0, lq = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const double yk = y[order[k]];
        if (classification) {
          left_counts[class_of(yk)] += 1.0;
        } else {
          ls += yk;
          lq += yk * yk;
        }
        const double v = x(static_cast<Eigen::Index>(order[k]), col);
        const double next = x(static_cast<Eigen::Index>(order[k + 1]), col);
        const std::size_t nl = k + 1, nr = n - nl;
        if (!(v < next) || nl < spec.min_samples_leaf || nr < spec.min_samples_leaf) continue;
        double children;
        if (classification) {
          std::vector<double> right(classes.size());
          for (std::size_t c = 0; c < classes.size(); ++c) right[c] = total_counts[c] - left_counts[c];
          children = impurity(left_counts, static_cast<double>(nl)) + impurity(right, static_cast<double>(nr));
        } else {
          children = sse(ls, lq, static_cast<double>(nl)) +
                     sse(total_sum - ls, total_sq - lq, static_cast<double>(nr));
        }
        if (children < best - 1e-12) {
          best = children;
          best_feature = static_cast<int>(f);
          double thr = 0.5 * (v + next);
          if (!(thr < next)) thr = v;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto i : ids) {
      (x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right).push_back(i);
    }
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    auto& node = nodes[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return index;
  }
};

double tree_predict(const RandomForest::Tree& tree, const Eigen::MatrixXd& x, Eigen::Index row) {
  std::size_t i = 0;
  while (tree[i].feature >= 0) {
    i = static_cast<std::size_t>(x(row, tree[i].feature) <= tree[i].threshold ? tree[i].left : tree[i].right);
  }
  return tree[i].value;
}

bool nodes_equal(const RandomForest::Node& a, const RandomForest::Node& b) {
  return a.feature == b.feature && a.threshold == b.threshold && a.left == b.left &&
         a.right == b.right && a.value == b.value;
}

}  // namespace

RandomForest RandomForest::train(const Eigen::MatrixXd& x, std::span<const double> y,
                                 bool classification, const ModelSpec& spec) {
  spec.validate();
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("random forest: empty training set");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw std::invalid_argument("random forest: row count does not match target length");
  if (x.rows() < 2) throw std::invalid_argument("random forest: need at least 2 training rows");

  std::vector<double> classes;
  if (classification) {
    classes.assign(y.begin(), y.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  }

  RandomForest forest;
  forest.classification_ = classification;
  const auto m = static_cast<std::size_t>(x.rows());
  for (std::size_t t = 0; t < spec.n_trees; ++t) {
    Rng rng(Rng::derive(spec.seed, "rf.tree." + std::to_string(t)));
    std::vector<std::size_t> sample(m);
    for (auto& s : sample) s = rng.index(m);
    std::sort(sample.begin(), sample.end());
    TreeBuilder builder{x, y, classification, spec, classes, rng, {}};
    builder.build(std::move(sample), 0);
    forest.trees_.push_back(std::move(builder.nodes));
  }
  return forest;
}

double RandomForest::predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const {
  if (!classification_) {
    double s = 0.0;
    for (const auto& tree : trees_) s += tree_predict(tree, x, row);
    return s / static_cast<double>(trees_.size());
  }
  std::map<double, std::size_t> votes;
  for (const auto& tree : trees_) ++votes[tree_predict(tree, x, row)];
  double best = votes.begin()->first;
  std::size_t most = 0;
  for (const auto& [value, count] : votes) {
    if (count > most) {
      most = count;
      best = value;
    }
  }
  return best;
}

std::vector<double> RandomForest::predict(const Eigen::MatrixXd& x) const {
  if (trees_.empty()) throw std::logic_error("random forest is not trained");
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = predict_row(x, r);
  return out;
}

bool RandomForest::operator==(const RandomForest& other) const {
  if (classification_ != other.classification_ || trees_.size() != other.trees_.size()) return false;
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    if (!std::equal(trees_[t].begin(), trees_[t].end(), other.trees_[t].begin(), other.trees_[t].end(),
                    nodes_equal))
      return false;
  }
  return true;
}

// --- ridge ---------------------------------------------------------------------

namespace {

struct ColumnScaling {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 1 for constant columns
};

ColumnScaling fit_scaling(const Eigen::MatrixXd& x) {
  ColumnScaling s;
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().mean();
    const double sd = std::sqrt(var);
    s.scale(j) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd apply_scaling(const Eigen::MatrixXd& x, const ColumnScaling& s) {
  return (x.rowwise() - s.mean).array().rowwise() / s.scale.array();
}

}  // namespace

RidgeModel ridge_fit(const Eigen::MatrixXd& x, std::span<const double> y, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge lambda must be positive");
  if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != y.size())
    throw std::invalid_argument("ridge: row count does not match target length");
  const ColumnScaling scaling = fit_scaling(x);
  const Eigen::MatrixXd z = apply_scaling(x, scaling);
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const double y_mean = yv.mean();
  Eigen::MatrixXd gram = z.transpose() * z;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd beta = gram.ldlt().solve(z.transpose() * (yv.array() - y_mean).matrix());

  RidgeModel model;
  model.intercept = y_mean;
  model.coefficients.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double c = beta(j) / scaling.scale(j);
    model.coefficients[static_cast<std::size_t>(j)] = c;
    model.intercept -= c * scaling.mean(j);
  }
  return model;
}

std::vector<double> RidgeModel::predict(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != coefficients.size())
    throw std::invalid_argument("ridge: feature count mismatch");
  Eigen::Map<const Eigen::VectorXd> c(coefficients.data(), static_cast<Eigen::Index>(coefficients.size()));
  Eigen::VectorXd p = (x * c).array() + intercept;
  return {p.data(), p.data() + p.size()};
}

std::vector<double> ridge_fit_predict(const Eigen::MatrixXd& train_x, std::span<const double> train_y,
                                      const Eigen::MatrixXd& test_x, double lambda) {
  return ridge_fit(train_x, train_y, lambda).predict(test_x);
}

// --- knn anomaly --------------------------------------------------------------

namespace {

std::vector<double> knn_scores_impl(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& query,
                                    std::size_t k, bool exclude_self) {
  std::vector<double> out(static_cast<std::size_t>(query.rows()));
  std::vector<double> dist;
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    dist.clear();
    for (Eigen::Index r = 0; r < ref.rows(); ++r) {
      if (exclude_self && r == q) continue;
      dist.push_back((ref.row(r) - query.row(q)).norm());
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k));
    out[static_cast<std::size_t>(q)] =
        std::accumulate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / static_cast<double>(k);
  }
  return out;
}

}  // namespace

std::vector<double> knn_anomaly_scores(const Eigen::MatrixXd& x, std::size_t k) {
  if (k == 0 || k >= static_cast<std::size_t>(x.rows()))
    throw std::invalid_argument("knn: k must satisfy 0 < k < rows");
  const ColumnScaling s = fit_scaling(x);
  const Eigen::MatrixXd z = apply_scaling(x, s);
  return knn_scores_impl(z, z, k, true);
}

std::vector<double> knn_anomaly_scores(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& query,
                                       std::size_t k) {
  if (k == 0 || k > static_cast<std::size_t>(reference.rows()))
    throw std::invalid_argument("knn: k must satisfy 0 < k <= reference rows");
  if (reference.cols() != query.cols()) throw std::invalid_argument("knn: feature count mismatch");
  const ColumnScaling s = fit_scaling(reference);
  return knn_scores_impl(apply_scaling(reference, s), apply_scaling(query, s), k, false);
}

// --- metrics --------------------------------------------------------------------

namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("metric: length mismatch");
  if (a == 0) throw std::invalid_argument("metric: empty input");
}

double safe_ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

}  // namespace

ClassificationMetrics classification_metrics(std::span<const double> predicted,
                                             std::span<const double> truth) {
  require_same_length(predicted.size(), truth.size());
  std::vector<double> classes(truth.begin(), truth.end());
  classes.insert(classes.end(), predicted.begin(), predicted.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  ClassificationMetrics out;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  out.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  for (double c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = predicted[i] == c, t = truth[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const double precision = safe_ratio(tp, tp + fp);
    const double recall = safe_ratio(tp, tp + fn);
    const double f1 = safe_ratio(2 * tp, 2 * tp + fp + fn);
    out.precision += precision;
    out.recall += recall;
    out.f1 += f1;
    if (c == 1.0) {
      out.positive_precision = precision;
      out.positive_recall = recall;
      out.positive_f1 = f1;
    }
  }
  const double k = static_cast<double>(classes.size());
  out.precision /= k;
  out.recall /= k;
  out.f1 /= k;
  return out;
}

double metric_f1(std::span<const double> predicted, std::span<const double> truth) {
  return classification_metrics(predicted, truth).f1;
}

double metric_1rae(std::span<const double> predicted, std::span<const double> truth) {
  require_same_length(predicted.size(), truth.size());
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    num += std::abs(truth[i] - predicted[i]);
    den += std::abs(truth[i] - mean);
  }
  if (den == 0.0) return num == 0.0 ? 1.0 : 0.0;
  return 1.0 - num / den;
}

double metric_1mae(std::span<const double> predicted, std::span<const double> truth) {
  require_same_length(predicted.size(), truth.size());
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - predicted[i]);
  return 1.0 - s / static_cast<double>(truth.size());
}

double metric_1rmse(std::span<const double> predicted, std::span<const double> truth) {
  require_same_length(predicted.size(), truth.size());
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
  return 1.0 - std::sqrt(s / static_cast<double>(truth.size()));
}

double metric_auc(std::span<const double> scores, std::span<const double> truth) {
  require_same_length(scores.size(), truth.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> ranks(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1.0) {
      pos += 1;
      rank_sum += ranks[i];
    } else if (truth[i] == 0.0) {
      neg += 1;
    } else {
      throw std::invalid_argument("auc: labels must be 0 or 1");
    }
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("auc: undefined for single-class truth");
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

// --- evaluation -------------------------------------------------------------------

std::string EvalResult::to_json() const {
  nlohmann::json j;
  j["primary_metric"] = primary_name;
  j["primary"] = primary;
  j["auxiliary"] = auxiliary;
  return j.dump(2);
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(x.rows())) throw std::out_of_range("row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

namespace {

std::vector<double> take(std::span<const double> y, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

EvalResult evaluate_split(const Eigen::MatrixXd& x, std::span<const double> y, TaskKind task,
                          const ModelSpec& spec, std::span<const std::size_t> train,
                          std::span<const std::size_t> test) {
  spec.validate();
  if (train.empty() || test.empty()) throw DataError("degenerate split: empty train or test side");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw std::invalid_argument("evaluate: row count does not match target length");
  const Eigen::MatrixXd xtr = take_rows(x, train), xte = take_rows(x, test);
  const std::vector<double> ytr = take(y, train), yte = take(y, test);

  EvalResult result;
  if (task == TaskKind::outlier_detection) {
    if (spec.kind != ModelKind::knn_anomaly)
      throw std::invalid_argument("outlier detection requires the knn_anomaly model");
    const bool pos = std::count(yte.begin(), yte.end(), 1.0) > 0;
    const bool neg = std::count(yte.begin(), yte.end(), 0.0) > 0;
    if (!pos || !neg) throw DataError("degenerate split: test side holds a single class");
    const std::size_t k = std::min(spec.knn_k, xtr.rows() > 0 ? static_cast<std::size_t>(xtr.rows()) : 1);
    const auto scores = knn_anomaly_scores(xtr, xte, k);
    result.primary_name = "auc";
    result.primary = metric_auc(scores, yte);
    result.auxiliary["auc"] = result.primary;
    return result;
  }

  const bool cls = task == TaskKind::classification;
  std::vector<double> pred;
  if (spec.kind == ModelKind::random_forest) {
    pred = RandomForest::train(xtr, ytr, cls, spec).predict(xte);
  } else if (spec.kind == ModelKind::ridge && !cls) {
    pred = ridge_fit_predict(xtr, ytr, xte, spec.ridge_lambda);
  } else {
    throw std::invalid_argument("model kind " + std::string(model_kind_name(spec.kind)) +
                                " does not support task " + std::string(task_name(task)));
  }

  if (cls) {
    const auto m = classification_metrics(pred, yte);
    result.primary_name = "f1";
    result.primary = m.f1;
    result.auxiliary = {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
                        {"f1", m.f1}, {"positive_precision", m.positive_precision},
                        {"positive_recall", m.positive_recall}, {"positive_f1", m.positive_f1}};
  } else {
    result.primary_name = "1-rae";
    result.primary = metric_1rae(pred, yte);
    result.auxiliary = {{"1-rae", result.primary}, {"1-mae", metric_1mae(pred, yte)},
                        {"1-rmse", metric_1rmse(pred, yte)}};
  }
  return result;
}

double downstream_performance(const Eigen::MatrixXd& x, std::span<const double> y, TaskKind task,
                              const ModelSpec& spec, const SplitPlan& split) {
  const double v = evaluate_split(x, y, task, spec, split.train_indices, split.test_indices).primary;
  return task == TaskKind::regression ? std::max(0.0, v) : v;
}

EvalResult cross_validate(const Eigen::MatrixXd& x, std::span<const double> y, TaskKind task,
                          const ModelSpec& spec, std::span<const Fold> folds) {
  if (folds.empty()) throw std::invalid_argument("cross_validate: no folds");
  EvalResult mean;
  for (const auto& fold : folds) {
    EvalResult r = evaluate_split(x, y, task, spec, fold.train, fold.test);
    mean.primary_name = r.primary_name;
    mean.primary += r.primary;
    for (const auto& [k, v] : r.auxiliary) mean.auxiliary[k] += v;
  }
  const double k = static_cast<double>(folds.size());
  mean.primary /= k;
  for (auto& [name, v] : mean.auxiliary) v /= k;
  return mean;
}

}  // namespace featforge
