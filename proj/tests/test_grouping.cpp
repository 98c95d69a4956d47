#include <doctest.h>

#include <algorithm>
#include <limits>
#include <set>

#include "featforge/grouping.hpp"
#include "featforge/measures.hpp"
#include "support.hpp"

using namespace featforge;
using doctest::Approx;

namespace {

struct Fixture {
  std::vector<std::vector<double>> cols;
  std::vector<double> y;
};

Fixture random_fixture(Rng& rng, std::size_t n, std::size_t m) {
  Fixture f;
  f.y = fftest::random_vector(rng, m);
  for (std::size_t j = 0; j < n; ++j) {
    auto c = fftest::random_vector(rng, m);
    if (j % 2 == 0)
      for (std::size_t i = 0; i < m; ++i) c[i] += f.y[i] * static_cast<double>(j);
    f.cols.push_back(std::move(c));
  }
  return f;
}

void check_partition(const GroupPartition& p, std::size_t n) {
  std::vector<std::size_t> all;
  for (const auto& g : p.groups) {
    REQUIRE_FALSE(g.indices.empty());
    CHECK(std::is_sorted(g.indices.begin(), g.indices.end()));
    CHECK(std::adjacent_find(g.indices.begin(), g.indices.end()) == g.indices.end());
    all.insert(all.end(), g.indices.begin(), g.indices.end());
  }
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == n);
  for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);
  if (n >= 2) CHECK(p.groups.size() >= 2);
}

}  // namespace

TEST_CASE("pair distance substitution") {
  CHECK(pair_distance(0.4, 0.1, 0.2, 1e-6) == Approx(1.499993).epsilon(1e-6));
  CHECK(pair_distance(0.1, 0.4, 0.2, 1e-6) == pair_distance(0.4, 0.1, 0.2, 1e-6));
}

TEST_CASE("distance of a group to itself as singleton is zero") {
  Rng rng(1);
  auto f = random_fixture(rng, 3, 40);
  FeatureGroup g{{1}};
  CHECK(group_distance(g, g, fftest::views(f.cols), f.y, 1e-6) == 0.0);
}

TEST_CASE("group distance matches the pairwise mean") {
  Rng rng(2);
  auto f = random_fixture(rng, 4, 60);
  MiTable mi(fftest::views(f.cols), f.y);
  FeatureGroup a{{0, 2}}, b{{1, 3}};
  double expected = 0;
  for (auto i : a.indices)
    for (auto j : b.indices) expected += pair_distance(mi.target_mi(i), mi.target_mi(j), mi.pair_mi(i, j), 1e-6);
  CHECK(group_distance(a, b, mi, 1e-6) == Approx(expected / 4).epsilon(1e-12));
  CHECK_THROWS(group_distance(FeatureGroup{}, b, mi, 1e-6));
  CHECK_THROWS(group_distance(a, b, mi, 0.0));
}

TEST_CASE("group distance is symmetric and non-negative") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    auto f = random_fixture(rng, 6, 30 + rng.index(70));
    MiTable mi(fftest::views(f.cols), f.y);
    auto pick = [&] {
      FeatureGroup g;
      for (std::size_t j = 0; j < 6; ++j)
        if (rng.uniform() < 0.5) g.indices.push_back(j);
      if (g.indices.empty()) g.indices.push_back(rng.index(6));
      return g;
    };
    auto a = pick(), b = pick();
    const double ab = group_distance(a, b, mi, 1e-6), ba = group_distance(b, a, mi, 1e-6);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) < 1e-12);
  }
}

TEST_CASE("identical copies merge first") {
  Rng rng(4);
  auto y = fftest::random_vector(rng, 80);
  auto base = fftest::random_vector(rng, 80);
  for (std::size_t i = 0; i < 80; ++i) base[i] += y[i];
  std::vector<std::vector<double>> cols{base, base, fftest::random_vector(rng, 80)};
  auto p = m_cluster(fftest::views(cols), y);
  REQUIRE(p.groups.size() == 2);
  CHECK(p.groups[0].indices == std::vector<std::size_t>{0, 1});
  CHECK(p.groups[1].indices == std::vector<std::size_t>{2});
}

TEST_CASE("single feature stays a single group") {
  std::vector<std::vector<double>> cols{{1, 2, 3, 4}};
  std::vector<double> y{0, 1, 0, 1};
  auto p = m_cluster(fftest::views(cols), y);
  REQUIRE(p.groups.size() == 1);
  CHECK(p.groups[0].indices == std::vector<std::size_t>{0});
  CHECK_THROWS(m_cluster(std::span<const std::span<const double>>{}, y));
}

TEST_CASE("infinite threshold merges down to two groups") {
  Rng rng(5);
  auto f = random_fixture(rng, 7, 50);
  ClusterConfig cfg;
  cfg.stop_threshold = std::numeric_limits<double>::infinity();
  auto p = m_cluster(fftest::views(f.cols), f.y, cfg);
  CHECK(p.groups.size() == 2);
  cfg.stop_threshold = -1.0;
  CHECK(m_cluster(fftest::views(f.cols), f.y, cfg).groups.size() == 7);
}

TEST_CASE("auto threshold is the mean initial distance") {
  Rng rng(6);
  auto f = random_fixture(rng, 5, 50);
  MiTable mi(fftest::views(f.cols), f.y);
  double sum = 0;
  int count = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j, ++count)
      sum += group_distance(FeatureGroup{{i}}, FeatureGroup{{j}}, mi, 1e-6);
  auto p = m_cluster(mi, fftest::views(f.cols));
  CHECK(p.threshold_used == Approx(sum / count).epsilon(1e-12));
}

TEST_CASE("partition property and determinism on random inputs") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng.index(10);
    auto f = random_fixture(rng, n, 20 + rng.index(100));
    ClusterConfig cfg;
    if (rng.uniform() < 0.3) cfg.metric = GroupMetric::euclidean;
    auto p = m_cluster(fftest::views(f.cols), f.y, cfg);
    check_partition(p, n);
    auto q = m_cluster(fftest::views(f.cols), f.y, cfg);
    CHECK(p.groups == q.groups);
    CHECK(p.threshold_used == q.threshold_used);
  }
}

TEST_CASE("euclidean distance between mean vectors") {
  std::vector<std::vector<double>> cols{{0, 0}, {3, 4}, {6, 8}};
  auto v = fftest::views(cols);
  CHECK(group_distance_euclidean(FeatureGroup{{0}}, FeatureGroup{{1}}, v) == Approx(5.0));
  CHECK(group_distance_euclidean(FeatureGroup{{0, 2}}, FeatureGroup{{1}}, v) == Approx(0.0));
}

TEST_CASE("singleton partition") {
  auto p = singleton_partition(3);
  REQUIRE(p.groups.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p.groups[i].indices == std::vector<std::size_t>{i});
}

TEST_CASE("group relevance") {
  Rng rng(8);
  auto f = random_fixture(rng, 3, 60);
  f.cols[1] = f.cols[0];
  auto v = fftest::views(f.cols);
  const double r0 = mutual_information(f.cols[0], f.y);
  CHECK(group_relevance(FeatureGroup{{0}}, v, f.y) == Approx(r0).epsilon(1e-12));
  CHECK(group_relevance(FeatureGroup{{0, 1}}, v, f.y) == Approx(r0).epsilon(1e-12));
  const double r2 = mutual_information(f.cols[2], f.y);
  CHECK(group_relevance(FeatureGroup{{0, 2}}, v, f.y) == Approx((r0 + r2) / 2).epsilon(1e-12));
  CHECK_THROWS(group_relevance(FeatureGroup{}, v, f.y));
}
