#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "featforge/measures.hpp"

namespace featforge {

/// Sorted, distinct column ids of one feature group.
struct FeatureGroup {
  std::vector<std::size_t> indices;

  std::size_t smallest() const { return indices.front(); }
  bool operator==(const FeatureGroup&) const = default;
};

struct GroupPartition {
  std::vector<FeatureGroup> groups;
  double threshold_used = 0.0;
  double epsilon = 1e-6;
};

enum class GroupMetric { relevance_redundancy, euclidean };

struct ClusterConfig {
  /// nullopt selects the mean initial pairwise singleton distance.
  std::optional<double> stop_threshold;
  double epsilon = 1e-6;
  GroupMetric metric = GroupMetric::relevance_redundancy;
};

/// |rel_i - rel_j| / (MI(fi,fj) + epsilon) for one feature pair.
double pair_distance(double relevance_i, double relevance_j, double redundancy, double epsilon);

/// Mean over member pairs of |MI(fi,y) - MI(fj,y)| / (MI(fi,fj) + epsilon).
double group_distance(const FeatureGroup& a, const FeatureGroup& b, const MiTable& mi,
                      double epsilon);
double group_distance(const FeatureGroup& a, const FeatureGroup& b,
                      std::span<const std::span<const double>> columns,
                      std::span<const double> target, double epsilon,
                      const BinningSpec& spec = {});

/// Euclidean distance between the group mean vectors.
double group_distance_euclidean(const FeatureGroup& a, const FeatureGroup& b,
                                std::span<const std::span<const double>> columns);

/// Agglomerative grouping: merges the closest pair until the closest distance
/// exceeds the threshold or two groups remain.
GroupPartition m_cluster(std::span<const std::span<const double>> columns,
                         std::span<const double> target, const ClusterConfig& config = {},
                         const BinningSpec& spec = {});
GroupPartition m_cluster(const MiTable& mi, std::span<const std::span<const double>> columns,
                         const ClusterConfig& config = {});

GroupPartition singleton_partition(std::size_t feature_count);

/// Mean target MI of the group's members.
double group_relevance(const FeatureGroup& group, const MiTable& mi);
double group_relevance(const FeatureGroup& group, std::span<const std::span<const double>> columns,
                       std::span<const double> target, const BinningSpec& spec = {});

}  // namespace featforge
