#include "featforge/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace featforge {

namespace {

void require_group(const FeatureGroup& g) {
  if (g.indices.empty()) throw std::invalid_argument("feature group is empty");
}

double pair_term(const MiTable& mi, std::size_t i, std::size_t j, double epsilon) {
  return pair_distance(mi.target_mi(i), mi.target_mi(j), mi.pair_mi(i, j), epsilon);
}

FeatureGroup merged(const FeatureGroup& a, const FeatureGroup& b) {
  FeatureGroup out;
  out.indices.reserve(a.indices.size() + b.indices.size());
  std::merge(a.indices.begin(), a.indices.end(), b.indices.begin(), b.indices.end(),
             std::back_inserter(out.indices));
  return out;
}

}  // namespace

double pair_distance(double relevance_i, double relevance_j, double redundancy, double epsilon) {
  return std::abs(relevance_i - relevance_j) / (redundancy + epsilon);
}

double group_distance(const FeatureGroup& a, const FeatureGroup& b, const MiTable& mi,
                      double epsilon) {
  require_group(a);
  require_group(b);
  if (!(epsilon > 0)) throw std::invalid_argument("group_distance: epsilon must be positive");
  // fixed summation order so that d(a,b) == d(b,a) bit for bit
  const FeatureGroup& outer = a.indices <= b.indices ? a : b;
  const FeatureGroup& inner = &outer == &a ? b : a;
  double sum = 0.0;
  for (std::size_t i : outer.indices) {
    for (std::size_t j : inner.indices) sum += pair_term(mi, std::min(i, j), std::max(i, j), epsilon);
  }
  return sum / static_cast<double>(a.indices.size() * b.indices.size());
}

double group_distance(const FeatureGroup& a, const FeatureGroup& b,
                      std::span<const std::span<const double>> columns,
                      std::span<const double> target, double epsilon, const BinningSpec& spec) {
  return group_distance(a, b, MiTable(columns, target, spec), epsilon);
}

double group_distance_euclidean(const FeatureGroup& a, const FeatureGroup& b,
                                std::span<const std::span<const double>> columns) {
  require_group(a);
  require_group(b);
  for (std::size_t i : a.indices)
    if (i >= columns.size()) throw std::out_of_range("group index out of range");
  for (std::size_t j : b.indices)
    if (j >= columns.size()) throw std::out_of_range("group index out of range");
  const std::size_t m = columns[a.smallest()].size();
  double sq = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i : a.indices) ma += columns[i][r];
    for (std::size_t j : b.indices) mb += columns[j][r];
    ma /= static_cast<double>(a.indices.size());
    mb /= static_cast<double>(b.indices.size());
    sq += (ma - mb) * (ma - mb);
  }
  return std::sqrt(sq);
}

GroupPartition singleton_partition(std::size_t feature_count) {
  GroupPartition p;
  for (std::size_t i = 0; i < feature_count; ++i) p.groups.push_back(FeatureGroup{{i}});
  p.threshold_used = 0.0;
  return p;
}

GroupPartition m_cluster(const MiTable& mi, std::span<const std::span<const double>> columns,
                         const ClusterConfig& config) {
  const std::size_t n = mi.size();
  if (n == 0) throw std::invalid_argument("m_cluster: no features");

  auto distance = [&](const FeatureGroup& a, const FeatureGroup& b) {
    return config.metric == GroupMetric::euclidean ? group_distance_euclidean(a, b, columns)
                                                   : group_distance(a, b, mi, config.epsilon);
  };

  GroupPartition out = singleton_partition(n);
  out.epsilon = config.epsilon;

  // Distances between current groups; groups stay ordered by smallest member.
  auto& groups = out.groups;
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  double initial_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = distance(groups[i], groups[j]);
      initial_sum += dist[i][j];
    }
  }
  if (config.stop_threshold) {
    out.threshold_used = *config.stop_threshold;
  } else {
    const double pairs = static_cast<double>(n * (n - 1) / 2);
    out.threshold_used = pairs > 0 ? initial_sum / pairs : 0.0;
  }

  while (groups.size() > 2) {
    std::size_t best_i = 0, best_j = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        if (dist[i][j] < best) {
          best = dist[i][j];
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best > out.threshold_used) break;

    groups[best_i] = merged(groups[best_i], groups[best_j]);
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(best_j));
    dist.erase(dist.begin() + static_cast<std::ptrdiff_t>(best_j));
    for (auto& row : dist) row.erase(row.begin() + static_cast<std::ptrdiff_t>(best_j));
    for (std::size_t k = 0; k < groups.size(); ++k) {
      if (k == best_i) continue;
      dist[best_i][k] = dist[k][best_i] = distance(groups[best_i], groups[k]);
    }
  }
  return out;
}

GroupPartition m_cluster(std::span<const std::span<const double>> columns,
                         std::span<const double> target, const ClusterConfig& config,
                         const BinningSpec& spec) {
  if (columns.empty()) throw std::invalid_argument("m_cluster: no features");
  return m_cluster(MiTable(columns, target, spec), columns, config);
}

double group_relevance(const FeatureGroup& group, const MiTable& mi) {
  require_group(group);
  double sum = 0.0;
  for (std::size_t i : group.indices) sum += mi.target_mi(i);
  return sum / static_cast<double>(group.indices.size());
}

double group_relevance(const FeatureGroup& group, std::span<const std::span<const double>> columns,
                       std::span<const double> target, const BinningSpec& spec) {
  return group_relevance(group, MiTable(columns, target, spec));
}

}  // namespace featforge
