#include "featforge/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace featforge {

namespace {

void require_nonempty(std::span<const double> x, const char* what) {
  if (x.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

double clamp_noise(double mi) { return (mi < 0.0 && mi >= -1e-12) ? 0.0 : mi; }

int code_count(std::span<const int> x) {
  return x.empty() ? 0 : *std::max_element(x.begin(), x.end()) + 1;
}

}  // namespace

std::size_t bin_count(std::size_t n, const BinningSpec& spec) {
  auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  return std::min(spec.max_bins, std::max<std::size_t>(2, root));
}

std::vector<int> discretize(std::span<const double> x, const BinningSpec& spec) {
  require_nonempty(x, "discretize");
  if (spec.max_bins < 2) throw std::invalid_argument("discretize: max_bins must be >= 2");

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<int> codes(x.size());
  if (distinct.size() <= spec.max_bins) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      codes[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), x[i]) -
                                  distinct.begin());
    }
    return codes;
  }

  const std::size_t n = x.size();
  const std::size_t bins = bin_count(n, spec);
  std::vector<double> bounds;
  bounds.reserve(bins - 1);
  for (std::size_t b = 1; b < bins; ++b) {
    std::size_t rank = (b * n + bins - 1) / bins;  // ceil(b * n / bins)
    bounds.push_back(sorted[rank - 1]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    // number of boundaries strictly below the value
    codes[i] = static_cast<int>(std::lower_bound(bounds.begin(), bounds.end(), x[i]) -
                                bounds.begin());
  }
  return codes;
}

double entropy_codes(std::span<const int> x) {
  if (x.empty()) throw std::invalid_argument("entropy: empty input");
  std::vector<double> counts(static_cast<std::size_t>(code_count(x)), 0.0);
  for (int c : x) counts[static_cast<std::size_t>(c)] += 1.0;
  const double total = static_cast<double>(x.size());
  const double log_total = std::log(total);
  double h = 0.0;
  for (double c : counts) {
    if (c > 0) h += (c / total) * (log_total - std::log(c));
  }
  return clamp_noise(h);
}

double mutual_information_codes(std::span<const int> x, std::span<const int> y) {
  require_same_length(x.size(), y.size(), "mutual_information");
  if (x.empty()) throw std::invalid_argument("mutual_information: empty input");
  const auto kx = static_cast<std::size_t>(code_count(x));
  const auto ky = static_cast<std::size_t>(code_count(y));
  std::vector<double> joint(kx * ky, 0.0), cx(kx, 0.0), cy(ky, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto a = static_cast<std::size_t>(x[i]);
    const auto b = static_cast<std::size_t>(y[i]);
    joint[a * ky + b] += 1.0;
    cx[a] += 1.0;
    cy[b] += 1.0;
  }
  const double total = static_cast<double>(x.size());
  const double log_total = std::log(total);
  double mi = 0.0;
  for (std::size_t a = 0; a < kx; ++a) {
    for (std::size_t b = 0; b < ky; ++b) {
      const double c = joint[a * ky + b];
      if (c <= 0) continue;
      // Grouped so that x == y reproduces entropy_codes term by term.
      mi += (c / total) * ((log_total - std::log(cx[a])) + (std::log(c) - std::log(cy[b])));
    }
  }
  return clamp_noise(mi);
}

double entropy(std::span<const double> x, const BinningSpec& spec) {
  require_nonempty(x, "entropy");
  auto codes = discretize(x, spec);
  return entropy_codes(codes);
}

double mutual_information(std::span<const double> x, std::span<const double> y,
                          const BinningSpec& spec) {
  require_same_length(x.size(), y.size(), "mutual_information");
  require_nonempty(x, "mutual_information");
  auto cx = discretize(x, spec);
  auto cy = discretize(y, spec);
  return mutual_information_codes(cx, cy);
}

MiTable::MiTable(std::span<const std::span<const double>> columns, std::span<const double> target,
                 const BinningSpec& spec) {
  const std::size_t n = columns.size();
  std::vector<std::vector<int>> codes;
  codes.reserve(n);
  for (auto col : columns) {
    require_same_length(col.size(), target.size(), "MiTable");
    codes.push_back(discretize(col, spec));
  }
  auto target_codes = discretize(target, spec);
  target_mi_.resize(n);
  pair_mi_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    target_mi_[i] = mutual_information_codes(codes[i], target_codes);
    pair_mi_[i * n + i] = entropy_codes(codes[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      double mi = mutual_information_codes(codes[i], codes[j]);
      pair_mi_[i * n + j] = mi;
      pair_mi_[j * n + i] = mi;
    }
  }
}

double utility_u(const MiTable& table, const UtilityOptions& options) {
  const std::size_t n = table.size();
  if (n == 0) throw std::invalid_argument("utility_u: no features");
  double redundancy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j && !options.include_diagonal) continue;
      redundancy += table.pair_mi(i, j);
    }
  }
  double relevance = 0.0;
  for (std::size_t i = 0; i < n; ++i) relevance += table.target_mi(i);
  const double nd = static_cast<double>(n);
  const double pairs = options.include_diagonal ? nd * nd : nd * (nd - 1);
  return (pairs > 0 ? -redundancy / pairs : 0.0) + relevance / nd;
}

double utility_u(std::span<const std::span<const double>> columns, std::span<const double> target,
                 const BinningSpec& spec, const UtilityOptions& options) {
  return utility_u(MiTable(columns, target, spec), options);
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "cosine_similarity");
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) return 0.0;
  double c = dot / (std::sqrt(nx) * std::sqrt(ny));
  return std::clamp(c, -1.0, 1.0);
}

double pearson_abs(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "pearson_abs");
  if (x.size() < 2) throw std::invalid_argument("pearson_abs: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::min(1.0, std::abs(sxy) / std::sqrt(sxx * syy));
}

double sample_std(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

StatVector7 descriptive_stats(std::span<const double> x) {
  require_nonempty(x, "descriptive_stats");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
  };
  StatVector7 out;
  out.count = static_cast<double>(s.size());
  // Sorted order makes the result independent of input permutation.
  out.std = sample_std(s);
  out.min = s.front();
  out.max = s.back();
  out.q1 = quantile(0.25);
  out.q2 = quantile(0.5);
  out.q3 = quantile(0.75);
  return out;
}

}  // namespace featforge
