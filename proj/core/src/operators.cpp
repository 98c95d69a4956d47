#include "featforge/operators.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace featforge {

namespace {

constexpr std::array<OperationKind, kOperationCount> kAll = {
    OperationKind::sqrt,       OperationKind::square,  OperationKind::cosine,
    OperationKind::sine,       OperationKind::tangent, OperationKind::exp,
    OperationKind::cube,       OperationKind::log,     OperationKind::reciprocal,
    OperationKind::sigmoid,    OperationKind::plus,    OperationKind::subtract,
    OperationKind::multiply,   OperationKind::divide,
};

double clip(double v) { return std::clamp(v, -kClipBound, kClipBound); }

// NaN becomes 0, then everything is clipped into the finite bound.
double finalize(double v) { return std::isnan(v) ? 0.0 : clip(v); }

double guarded_denominator(double v) {
  if (v == 0.0) return kGuardFloor;
  return std::copysign(std::max(std::abs(v), kGuardFloor), v);
}

double unary_value(OperationKind op, double v) {
  switch (op) {
    case OperationKind::sqrt: return std::sqrt(std::abs(v));
    case OperationKind::square: return v * v;
    case OperationKind::cosine: return std::cos(v);
    case OperationKind::sine: return std::sin(v);
    case OperationKind::tangent: return clip(std::tan(v));
    case OperationKind::exp: return clip(std::exp(v));
    case OperationKind::cube: return v * v * v;
    case OperationKind::log: return std::log(std::abs(v) + kGuardFloor);
    case OperationKind::reciprocal: return 1.0 / guarded_denominator(v);
    case OperationKind::sigmoid: return 1.0 / (1.0 + clip(std::exp(-v)));
    default: break;
  }
  throw std::invalid_argument("not a unary operation");
}

double binary_value(OperationKind op, double a, double b) {
  switch (op) {
    case OperationKind::plus: return a + b;
    case OperationKind::subtract: return a - b;
    case OperationKind::multiply: return a * b;
    case OperationKind::divide: return a / guarded_denominator(b);
    default: break;
  }
  throw std::invalid_argument("not a binary operation");
}

}  // namespace

const std::array<OperationKind, kOperationCount>& all_operations() { return kAll; }

OperationKind operation_from_index(std::size_t index) {
  if (index >= kOperationCount) throw std::out_of_range("operation index out of range");
  return kAll[index];
}

std::size_t operation_index(OperationKind op) {
  return static_cast<std::size_t>(std::find(kAll.begin(), kAll.end(), op) - kAll.begin());
}

bool is_unary(OperationKind op) {
  return op != OperationKind::plus && op != OperationKind::subtract &&
         op != OperationKind::multiply && op != OperationKind::divide;
}

bool is_commutative(OperationKind op) {
  return op == OperationKind::plus || op == OperationKind::multiply;
}

std::string_view operation_token(OperationKind op) {
  switch (op) {
    case OperationKind::sqrt: return "sqrt";
    case OperationKind::square: return "square";
    case OperationKind::cosine: return "cos";
    case OperationKind::sine: return "sin";
    case OperationKind::tangent: return "tan";
    case OperationKind::exp: return "exp";
    case OperationKind::cube: return "cube";
    case OperationKind::log: return "log";
    case OperationKind::reciprocal: return "reciprocal";
    case OperationKind::sigmoid: return "sigmoid";
    case OperationKind::plus: return "+";
    case OperationKind::subtract: return "-";
    case OperationKind::multiply: return "*";
    case OperationKind::divide: return "/";
  }
  return "?";
}

std::optional<OperationKind> parse_operation(std::string_view name) {
  static const std::pair<std::string_view, OperationKind> aliases[] = {
      {"cosine", OperationKind::cosine}, {"sine", OperationKind::sine},
      {"tangent", OperationKind::tangent}, {"add", OperationKind::plus},
      {"minus", OperationKind::subtract}, {"times", OperationKind::multiply},
  };
  for (auto op : kAll) {
    if (operation_token(op) == name) return op;
  }
  for (const auto& [alias, op] : aliases) {
    if (alias == name) return op;
  }
  return std::nullopt;
}

std::vector<double> apply_unary(OperationKind op, std::span<const double> x) {
  if (!is_unary(op)) throw std::invalid_argument("apply_unary: binary operation passed");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = finalize(unary_value(op, x[i]));
  return out;
}

std::vector<double> apply_binary(OperationKind op, std::span<const double> x,
                                 std::span<const double> y) {
  if (is_unary(op)) throw std::invalid_argument("apply_binary: unary operation passed");
  if (x.size() != y.size()) throw std::invalid_argument("apply_binary: length mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = finalize(binary_value(op, x[i], y[i]));
  return out;
}

FeatureExpr FeatureExpr::leaf(std::string name) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::leaf;
  node->text = std::move(name);
  return FeatureExpr(std::move(node));
}

FeatureExpr FeatureExpr::unary(OperationKind op, FeatureExpr child) {
  if (!is_unary(op)) throw std::invalid_argument("FeatureExpr::unary: binary operation");
  auto node = std::make_shared<Node>();
  node->kind = Kind::unary;
  node->op = op;
  node->text = std::string(operation_token(op)) + "(" + child.to_string() + ")";
  node->depth = child.depth() + 1;
  node->left = std::make_shared<const FeatureExpr>(std::move(child));
  return FeatureExpr(std::move(node));
}

FeatureExpr FeatureExpr::binary(OperationKind op, FeatureExpr left, FeatureExpr right) {
  if (is_unary(op)) throw std::invalid_argument("FeatureExpr::binary: unary operation");
  if (is_commutative(op)) {
    // deeper operand first, then lexicographic
    const bool swap = right.depth() != left.depth() ? right.depth() > left.depth()
                                                    : right.to_string() < left.to_string();
    if (swap) std::swap(left, right);
  }
  auto node = std::make_shared<Node>();
  node->kind = Kind::binary;
  node->op = op;
  node->text = "(" + left.to_string() + std::string(operation_token(op)) + right.to_string() + ")";
  node->depth = std::max(left.depth(), right.depth()) + 1;
  node->left = std::make_shared<const FeatureExpr>(std::move(left));
  node->right = std::make_shared<const FeatureExpr>(std::move(right));
  return FeatureExpr(std::move(node));
}

void FeatureExpr::collect_leaves(std::vector<std::string>& out) const {
  switch (kind()) {
    case Kind::leaf: out.push_back(name()); break;
    case Kind::unary: child().collect_leaves(out); break;
    case Kind::binary:
      left().collect_leaves(out);
      right().collect_leaves(out);
      break;
  }
}

std::vector<double> evaluate_expr(
    const FeatureExpr& expr, const Dataset& original,
    const std::unordered_map<std::string, std::size_t>& leaf_index) {
  switch (expr.kind()) {
    case FeatureExpr::Kind::leaf: {
      auto it = leaf_index.find(expr.name());
      if (it == leaf_index.end())
        throw std::invalid_argument("evaluate_expr: unknown feature '" + expr.name() + "'");
      auto col = original.column(it->second);
      return {col.begin(), col.end()};
    }
    case FeatureExpr::Kind::unary:
      return apply_unary(expr.op(), evaluate_expr(expr.child(), original, leaf_index));
    case FeatureExpr::Kind::binary:
      return apply_binary(expr.op(), evaluate_expr(expr.left(), original, leaf_index),
                          evaluate_expr(expr.right(), original, leaf_index));
  }
  return {};
}

std::vector<double> evaluate_expr(const FeatureExpr& expr, const Dataset& original) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < original.cols(); ++j) index.emplace(original.feature_names()[j], j);
  return evaluate_expr(expr, original, index);
}

namespace {

struct ExprParser {
  const std::set<std::string, std::less<>>& leaves;

  std::optional<FeatureExpr> parse(std::string_view s) const {
    if (leaves.count(s)) return FeatureExpr::leaf(std::string(s));
    if (s.size() >= 2 && s.back() == ')') {
      // unary: name(...)
      auto open = s.find('(');
      if (open != std::string_view::npos && open > 0) {
        auto op = parse_operation(s.substr(0, open));
        if (op && is_unary(*op)) {
          if (auto inner = parse(s.substr(open + 1, s.size() - open - 2)))
            return FeatureExpr::unary(*op, std::move(*inner));
        }
      }
      // binary: (L op R), try each top-level operator position
      if (s.front() == '(') {
        auto inner = s.substr(1, s.size() - 2);
        int depth = 0;
        for (std::size_t i = 0; i < inner.size(); ++i) {
          char c = inner[i];
          if (c == '(') ++depth;
          else if (c == ')') --depth;
          else if (depth == 0 && i > 0 && (c == '+' || c == '-' || c == '*' || c == '/')) {
            auto op = parse_operation(std::string_view(&inner[i], 1));
            auto l = parse(inner.substr(0, i));
            if (!l) continue;
            auto r = parse(inner.substr(i + 1));
            if (!r) continue;
            auto e = FeatureExpr::binary(*op, std::move(*l), std::move(*r));
            if (e.to_string() == s) return e;
          }
        }
      }
    }
    return std::nullopt;
  }
};

}  // namespace

FeatureExpr parse_expr(std::string_view text, std::span<const std::string> leaf_names) {
  std::set<std::string, std::less<>> leaves(leaf_names.begin(), leaf_names.end());
  ExprParser parser{leaves};
  auto e = parser.parse(text);
  if (!e) throw std::invalid_argument("cannot parse feature expression: " + std::string(text));
  return std::move(*e);
}

std::string to_json_line(const TraceRecord& record) {
  nlohmann::json j;
  j["name"] = record.name;
  j["expression"] = record.expression;
  j["depth"] = record.depth;
  j["created_at_step"] = record.created_at_step;
  return j.dump();
}

TraceRecord trace_record_from_json(std::string_view line) {
  auto j = nlohmann::json::parse(line);
  TraceRecord r;
  r.name = j.at("name").get<std::string>();
  r.expression = j.at("expression").get<std::string>();
  r.depth = j.at("depth").get<std::size_t>();
  r.created_at_step = j.at("created_at_step").get<long>();
  return r;
}

}  // namespace featforge
