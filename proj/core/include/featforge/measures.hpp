#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace featforge {

struct BinningSpec {
  std::size_t max_bins = 16;
};

/// count, sample std, min, max, first/second/third quartile
struct StatVector7 {
  double count = 0;
  double std = 0;
  double min = 0;
  double max = 0;
  double q1 = 0;
  double q2 = 0;
  double q3 = 0;

  std::vector<double> as_vector() const { return {count, std, min, max, q1, q2, q3}; }
};

/// Maps reals to bin codes. Up to max_bins distinct values keep their rank;
/// otherwise equal-frequency bins, boundary values falling into the lower bin.
std::vector<int> discretize(std::span<const double> x, const BinningSpec& spec = {});

/// Number of equal-frequency bins used for a vector of length n with more
/// distinct values than spec.max_bins.
std::size_t bin_count(std::size_t n, const BinningSpec& spec = {});

double entropy(std::span<const double> x, const BinningSpec& spec = {});

/// Plug-in mutual information (nats) of two discretized vectors.
double mutual_information(std::span<const double> x, std::span<const double> y,
                          const BinningSpec& spec = {});

double entropy_codes(std::span<const int> x);
double mutual_information_codes(std::span<const int> x, std::span<const int> y);

/// Mutual information cache over a column set and a target.
///
/// Columns and target are discretized once; all pairwise and target MI
/// values are computed eagerly.
class MiTable {
 public:
  MiTable(std::span<const std::span<const double>> columns, std::span<const double> target,
          const BinningSpec& spec = {});

  std::size_t size() const { return target_mi_.size(); }
  double target_mi(std::size_t i) const { return target_mi_.at(i); }
  double pair_mi(std::size_t i, std::size_t j) const { return pair_mi_.at(i * size() + j); }
  double entropy(std::size_t i) const { return pair_mi(i, i); }

 private:
  std::vector<double> target_mi_;
  std::vector<double> pair_mi_;
};

struct UtilityOptions {
  /// When false, redundancy averages the n(n-1) off-diagonal pairs.
  bool include_diagonal = true;
};

/// Redundancy/relevance utility: minus the mean pairwise MI over all ordered
/// pairs plus the mean target MI.
double utility_u(std::span<const std::span<const double>> columns, std::span<const double> target,
                 const BinningSpec& spec = {}, const UtilityOptions& options = {});
double utility_u(const MiTable& table, const UtilityOptions& options = {});

double cosine_similarity(std::span<const double> x, std::span<const double> y);

/// |Pearson correlation|, 0 when either vector is constant.
double pearson_abs(std::span<const double> x, std::span<const double> y);

/// Quartiles use linear interpolation at position p * (n - 1).
StatVector7 descriptive_stats(std::span<const double> x);

double sample_std(std::span<const double> x);

}  // namespace featforge
