#include "featforge/generation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

namespace featforge {

FeatureTable FeatureTable::from_dataset(const Dataset& data) {
  FeatureTable t;
  for (std::size_t j = 0; j < data.cols(); ++j) {
    auto col = data.column(j);
    t.add({col.begin(), col.end()}, FeatureExpr::leaf(data.feature_names()[j]), 0);
  }
  return t;
}

std::vector<std::string> FeatureTable::names() const {
  std::vector<std::string> out;
  out.reserve(exprs_.size());
  for (const auto& e : exprs_) out.push_back(e.to_string());
  return out;
}

std::vector<std::span<const double>> FeatureTable::column_views() const {
  return {columns_.begin(), columns_.end()};
}

std::vector<std::vector<double>> FeatureTable::columns_at_rows(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> out(columns_.size(), std::vector<double>(rows.size()));
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) out[c][i] = columns_[c][rows[i]];
  }
  return out;
}

Eigen::MatrixXd FeatureTable::matrix() const {
  std::vector<std::size_t> all(size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return matrix(all);
}

Eigen::MatrixXd FeatureTable::matrix(std::span<const std::size_t> cols) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto& c = columns_.at(cols[j]);
    m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  }
  return m;
}

void FeatureTable::add(std::vector<double> column, FeatureExpr expr, long created_at) {
  if (!columns_.empty() && column.size() != rows())
    throw std::invalid_argument("FeatureTable::add: column length mismatch");
  columns_.push_back(std::move(column));
  exprs_.push_back(std::move(expr));
  created_at_.push_back(created_at);
}

void FeatureTable::retain(std::span<const std::size_t> keep) {
  std::vector<std::vector<double>> cols;
  std::vector<FeatureExpr> exprs;
  std::vector<long> created;
  for (std::size_t id : keep) {
    cols.push_back(std::move(columns_.at(id)));
    exprs.push_back(exprs_.at(id));
    created.push_back(created_at_.at(id));
  }
  columns_ = std::move(cols);
  exprs_ = std::move(exprs);
  created_at_ = std::move(created);
}

bool FeatureTable::contains_expression(const std::string& text) const {
  return std::any_of(exprs_.begin(), exprs_.end(),
                     [&](const FeatureExpr& e) { return e.to_string() == text; });
}

bool has_binary_pairs(const FeatureGroup& c1, const FeatureGroup& c2) {
  if (c1.indices.empty() || c2.indices.empty()) return false;
  if (c1 == c2) return c1.indices.size() >= 2;
  return true;
}

std::vector<GeneratedFeature> cross_binary_topk(OperationKind op, const FeatureGroup& c1,
                                                const FeatureGroup& c2, const FeatureTable& table,
                                                const GenerationConfig& config, Rng& rng) {
  if (is_unary(op)) throw std::invalid_argument("cross_binary_topk: unary operation");
  if (c1.indices.empty() || c2.indices.empty())
    throw std::invalid_argument("cross_binary_topk: empty group");
  if (!has_binary_pairs(c1, c2))
    throw std::invalid_argument("cross_binary_topk: no valid feature pairs");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (c1 == c2) {
    for (std::size_t a = 0; a < c1.indices.size(); ++a)
      for (std::size_t b = a + 1; b < c1.indices.size(); ++b)
        pairs.emplace_back(c1.indices[a], c1.indices[b]);
  } else {
    for (std::size_t i : c1.indices)
      for (std::size_t j : c2.indices) pairs.emplace_back(i, j);
  }

  const std::size_t k = std::min(
      pairs.size(),
      config.top_k_pairs.value_or(std::min({c1.indices.size(), c2.indices.size(), std::size_t{8}})));
  if (k == 0) throw std::invalid_argument("cross_binary_topk: K must be >= 1");

  if (config.random_binary) {
    std::shuffle(pairs.begin(), pairs.end(), rng.engine());
    pairs.resize(k);
  } else {
    std::vector<std::tuple<double, std::size_t, std::size_t>> ranked;
    ranked.reserve(pairs.size());
    for (auto [i, j] : pairs)
      ranked.emplace_back(std::abs(cosine_similarity(table.column(i), table.column(j))), i, j);
    std::sort(ranked.begin(), ranked.end());
    pairs.clear();
    for (std::size_t r = 0; r < k; ++r) pairs.emplace_back(std::get<1>(ranked[r]), std::get<2>(ranked[r]));
  }

  std::vector<GeneratedFeature> out;
  out.reserve(k);
  for (auto [i, j] : pairs) {
    out.push_back({apply_binary(op, table.column(i), table.column(j)),
                   FeatureExpr::binary(op, table.expr(i), table.expr(j))});
  }
  return out;
}

std::vector<GeneratedFeature> generate_unary(OperationKind op, const FeatureGroup& c1,
                                             const FeatureGroup& c2, const FeatureTable& table,
                                             const MiTable& mi, const GenerationConfig& config,
                                             Rng& rng) {
  if (!is_unary(op)) throw std::invalid_argument("generate_unary: binary operation");
  const FeatureGroup* chosen = &c1;
  if (config.random_unary) {
    chosen = rng.index(2) == 0 ? &c1 : &c2;
  } else if (group_relevance(c2, mi) > group_relevance(c1, mi)) {
    chosen = &c2;
  }
  std::vector<GeneratedFeature> out;
  for (std::size_t i : chosen->indices)
    out.push_back({apply_unary(op, table.column(i)), FeatureExpr::unary(op, table.expr(i))});
  return out;
}

namespace {

bool is_value_duplicate(std::span<const double> a, std::span<const double> b) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (!(std::abs(a[r] - b[r]) < 1e-9)) return false;
  }
  return true;
}

}  // namespace

PostprocessStats postprocess(FeatureTable& table, std::vector<GeneratedFeature> generated,
                             long step, bool dedup) {
  PostprocessStats stats;
  std::set<std::string> names;
  for (std::size_t i = 0; i < table.size(); ++i) names.insert(table.expr(i).to_string());
  for (auto& g : generated) {
    if (table.size() && g.column.size() != table.rows())
      throw std::invalid_argument("postprocess: generated column length mismatch");
    if (sample_std(g.column) < 1e-12) {
      ++stats.constant;
      continue;
    }
    if (dedup) {
      if (names.count(g.expr.to_string())) {
        ++stats.expression_duplicates;
        continue;
      }
      bool dup = false;
      for (std::size_t i = 0; i < table.size() && !dup; ++i) dup = is_value_duplicate(g.column, table.column(i));
      if (dup) {
        ++stats.value_duplicates;
        continue;
      }
    }
    names.insert(g.expr.to_string());
    table.add(std::move(g.column), std::move(g.expr), step);
    ++stats.added;
  }
  return stats;
}

std::vector<std::size_t> kbest_select(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw std::invalid_argument("kbest_select: k must be >= 1");
  std::vector<std::size_t> ids(scores.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (k >= ids.size()) return ids;
  std::stable_sort(ids.begin(), ids.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::size_t> kbest_select(std::span<const std::span<const double>> columns,
                                      std::span<const double> target, std::size_t k,
                                      const BinningSpec& spec) {
  MiTable mi(columns, target, spec);
  std::vector<double> scores(mi.size());
  for (std::size_t i = 0; i < mi.size(); ++i) scores[i] = mi.target_mi(i);
  return kbest_select(scores, k);
}

bool size_control(FeatureTable& table, std::size_t original_count, std::span<const double> target,
                  std::span<const std::size_t> mi_rows, const GenerationConfig& config,
                  const BinningSpec& spec) {
  if (original_count == 0) throw std::invalid_argument("size_control: original count must be >= 1");
  const auto limit = static_cast<std::size_t>(
      std::floor(config.size_tolerance_factor * static_cast<double>(original_count)));
  if (table.size() <= limit) return false;
  const std::size_t k = config.kbest_target == KbestTarget::cap ? limit : original_count;

  auto cols = table.columns_at_rows(mi_rows);
  std::vector<double> y(mi_rows.size());
  for (std::size_t i = 0; i < mi_rows.size(); ++i) y[i] = target[mi_rows[i]];
  auto y_codes = discretize(y, spec);
  std::vector<double> scores(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c)
    scores[c] = mutual_information_codes(discretize(cols[c], spec), y_codes);
  auto keep = kbest_select(scores, std::max<std::size_t>(k, 1));
  table.retain(keep);
  return true;
}

}  // namespace featforge
