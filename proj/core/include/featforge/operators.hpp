#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "featforge/dataset.hpp"

namespace featforge {

enum class OperationKind {
  sqrt,
  square,
  cosine,
  sine,
  tangent,
  exp,
  cube,
  log,
  reciprocal,
  sigmoid,
  plus,
  subtract,
  multiply,
  divide,
};

inline constexpr std::size_t kOperationCount = 14;

/// All operations in index order; the index is the one-hot position.
const std::array<OperationKind, kOperationCount>& all_operations();
OperationKind operation_from_index(std::size_t index);
std::size_t operation_index(OperationKind op);

bool is_unary(OperationKind op);
bool is_commutative(OperationKind op);
/// Rendering token: function name for unary ops, infix symbol for binary ones.
std::string_view operation_token(OperationKind op);
std::optional<OperationKind> parse_operation(std::string_view name);

inline constexpr double kGuardFloor = 1e-6;
inline constexpr double kClipBound = 1e12;

/// Element-wise guarded unary operation. Output is always finite.
std::vector<double> apply_unary(OperationKind op, std::span<const double> x);
/// Element-wise guarded binary operation. Output is always finite.
std::vector<double> apply_binary(OperationKind op, std::span<const double> x,
                                 std::span<const double> y);

/// Immutable provenance tree of a feature.
///
/// Leaves name original dataset features. The canonical rendering is computed
/// once at construction; operands of commutative operations are ordered by
/// depth (deeper first), then by rendering, so that (a*b) and (b*a) are the
/// same expression.
class FeatureExpr {
 public:
  enum class Kind { leaf, unary, binary };

  static FeatureExpr leaf(std::string name);
  static FeatureExpr unary(OperationKind op, FeatureExpr child);
  static FeatureExpr binary(OperationKind op, FeatureExpr left, FeatureExpr right);

  Kind kind() const { return node_->kind; }
  OperationKind op() const { return node_->op; }
  const std::string& name() const { return node_->text; }  // leaf name or canonical string
  const std::string& to_string() const { return node_->text; }
  std::size_t depth() const { return node_->depth; }
  const FeatureExpr& left() const { return *node_->left; }
  const FeatureExpr& right() const { return *node_->right; }
  const FeatureExpr& child() const { return *node_->left; }
  void collect_leaves(std::vector<std::string>& out) const;

  bool operator==(const FeatureExpr& other) const { return to_string() == other.to_string(); }

 private:
  struct Node {
    Kind kind = Kind::leaf;
    OperationKind op = OperationKind::plus;
    std::string text;
    std::size_t depth = 0;
    std::shared_ptr<const FeatureExpr> left;
    std::shared_ptr<const FeatureExpr> right;
  };
  explicit FeatureExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

inline const std::string& expr_to_string(const FeatureExpr& e) { return e.to_string(); }

/// Re-evaluates an expression against the original dataset's columns.
std::vector<double> evaluate_expr(const FeatureExpr& expr, const Dataset& original);

/// Same, with a prebuilt leaf-name index.
std::vector<double> evaluate_expr(
    const FeatureExpr& expr, const Dataset& original,
    const std::unordered_map<std::string, std::size_t>& leaf_index);

/// Parses a canonical rendering back into a tree, resolving leaves against
/// the known original feature names.
FeatureExpr parse_expr(std::string_view text, std::span<const std::string> leaf_names);

/// One line of the trace file.
struct TraceRecord {
  std::string name;
  std::string expression;
  std::size_t depth = 0;
  long created_at_step = 0;
};

std::string to_json_line(const TraceRecord& record);
TraceRecord trace_record_from_json(std::string_view line);

}  // namespace featforge
