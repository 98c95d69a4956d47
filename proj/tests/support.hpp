#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "featforge/common.hpp"
#include "featforge/dataset.hpp"
#include "featforge/nn.hpp"

namespace fftest {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("featforge_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name, const std::string& contents) const {
    auto p = path_ / name;
    std::ofstream(p) << contents;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline featforge::Dataset make_dataset(const std::vector<std::vector<double>>& columns,
                                       std::vector<double> target,
                                       featforge::TaskKind task = featforge::TaskKind::regression,
                                       std::vector<std::string> names = {}) {
  const auto m = static_cast<Eigen::Index>(target.size());
  Eigen::MatrixXd x(m, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (Eigen::Index i = 0; i < m; ++i) x(i, static_cast<Eigen::Index>(j)) = columns[j][static_cast<std::size_t>(i)];
  if (names.empty())
    for (std::size_t j = 0; j < columns.size(); ++j) names.push_back("f" + std::to_string(j + 1));
  return featforge::Dataset(std::move(x), std::move(names), std::move(target), task);
}

/// y = f1 * f2 + 0.05 * noise over standard normal features.
inline featforge::Dataset product_fixture(std::uint64_t seed, std::size_t rows = 500, std::size_t cols = 5) {
  featforge::Rng rng(seed);
  std::vector<std::vector<double>> columns(cols, std::vector<double>(rows));
  std::vector<double> y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) columns[j][i] = rng.normal();
    y[i] = columns[0][i] * columns[1][i] + 0.05 * rng.normal();
  }
  return make_dataset(columns, std::move(y));
}

inline std::vector<double> random_vector(featforge::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline std::vector<std::span<const double>> views(const std::vector<std::vector<double>>& cols) {
  return {cols.begin(), cols.end()};
}

/// Uniform input batch in [-1, 1] whose relu pre-activations all sit at least
/// `margin` away from the kink, so central differences are valid.
inline Eigen::MatrixXd kink_free_input(const featforge::nn::DenseNet& net, featforge::Rng& rng,
                                       Eigen::Index batch, double margin = 1e-3) {
  using featforge::nn::Activation;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(net.input_size()), batch);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    featforge::nn::ForwardCache cache;
    featforge::nn::forward(net, x, &cache);
    bool clear = true;
    for (std::size_t l = 0; l < net.layers.size() && clear; ++l) {
      if (net.layers[l].activation != Activation::relu) continue;
      Eigen::MatrixXd pre = (net.layers[l].weights * cache.inputs[l]).colwise() + net.layers[l].bias;
      clear = pre.cwiseAbs().minCoeff() >= margin;
    }
    if (clear) return x;
  }
  throw std::runtime_error("kink_free_input: no clear input found");
}

}  // namespace fftest
