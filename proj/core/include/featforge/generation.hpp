#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "featforge/common.hpp"
#include "featforge/dataset.hpp"
#include "featforge/grouping.hpp"
#include "featforge/measures.hpp"
#include "featforge/operators.hpp"

namespace featforge {

/// Current feature columns with their provenance.
class FeatureTable {
 public:
  FeatureTable() = default;
  /// Every original column as a depth-0 leaf.
  static FeatureTable from_dataset(const Dataset& data);

  std::size_t size() const { return columns_.size(); }
  std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().size(); }
  std::span<const double> column(std::size_t i) const { return columns_.at(i); }
  const FeatureExpr& expr(std::size_t i) const { return exprs_.at(i); }
  long created_at(std::size_t i) const { return created_at_.at(i); }
  std::vector<std::string> names() const;

  std::vector<std::span<const double>> column_views() const;
  /// Column views restricted to the given rows (materialized copies).
  std::vector<std::vector<double>> columns_at_rows(std::span<const std::size_t> rows) const;
  Eigen::MatrixXd matrix() const;
  Eigen::MatrixXd matrix(std::span<const std::size_t> cols) const;

  void add(std::vector<double> column, FeatureExpr expr, long created_at);
  /// Keeps only the listed column ids, in the listed order.
  void retain(std::span<const std::size_t> keep);
  bool contains_expression(const std::string& text) const;

 private:
  std::vector<std::vector<double>> columns_;
  std::vector<FeatureExpr> exprs_;
  std::vector<long> created_at_;
};

struct GeneratedFeature {
  std::vector<double> column;
  FeatureExpr expr;
};

enum class KbestTarget { cap, original };

struct GenerationConfig {
  /// nullopt selects min(|C1|, |C2|, 8).
  std::optional<std::size_t> top_k_pairs;
  double size_tolerance_factor = 2.0;
  bool dedup = true;
  bool random_unary = false;   // GRFG^-u
  bool random_binary = false;  // GRFG^-b
  KbestTarget kbest_target = KbestTarget::cap;
};

/// Crosses two groups with a binary operation on the K pairs of lowest
/// |cosine similarity|. Identical groups use their distinct unordered pairs.
std::vector<GeneratedFeature> cross_binary_topk(OperationKind op, const FeatureGroup& c1,
                                                const FeatureGroup& c2, const FeatureTable& table,
                                                const GenerationConfig& config, Rng& rng);

/// True when cross_binary_topk has at least one pair to work with.
bool has_binary_pairs(const FeatureGroup& c1, const FeatureGroup& c2);

/// Applies a unary operation to every member of the more target-relevant group
/// (ties go to c1).
std::vector<GeneratedFeature> generate_unary(OperationKind op, const FeatureGroup& c1,
                                             const FeatureGroup& c2, const FeatureTable& table,
                                             const MiTable& mi, const GenerationConfig& config,
                                             Rng& rng);

struct PostprocessStats {
  std::size_t added = 0;
  std::size_t constant = 0;
  std::size_t expression_duplicates = 0;
  std::size_t value_duplicates = 0;
};

/// Appends generated columns that are not constant and not duplicates (by
/// expression or by value) of anything already present.
PostprocessStats postprocess(FeatureTable& table, std::vector<GeneratedFeature> generated,
                             long step, bool dedup = true);

/// Ids of the k columns with highest target MI (ties to lower id), ascending.
std::vector<std::size_t> kbest_select(std::span<const double> scores, std::size_t k);
std::vector<std::size_t> kbest_select(std::span<const std::span<const double>> columns,
                                      std::span<const double> target, std::size_t k,
                                      const BinningSpec& spec = {});

/// Caps the table at floor(factor * d0) columns by target MI when exceeded.
/// Returns true when selection ran.
bool size_control(FeatureTable& table, std::size_t original_count, std::span<const double> target,
                  std::span<const std::size_t> mi_rows, const GenerationConfig& config,
                  const BinningSpec& spec = {});

}  // namespace featforge
