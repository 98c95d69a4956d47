#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "featforge/common.hpp"
#include "featforge/nn.hpp"

namespace featforge {

enum class StateMethod { ds, ae, gae, onehot, concat };

/// Encoder choices for feature sets and groups.
enum class StateSpec { ds, ae, gae, ds_ae, ds_ae_gae };
StateSpec parse_state_spec(std::string_view text);
std::string_view state_spec_name(StateSpec spec);

struct StateVector {
  std::vector<double> values;
  StateMethod method = StateMethod::ds;

  std::size_t size() const { return values.size(); }
};

struct EncoderConfig {
  std::size_t ae_col_dim = 8;   // k
  std::size_t ae_row_dim = 8;   // d
  std::size_t gae_dim = 16;
  std::size_t train_epochs = 20;
  std::size_t incremental_epochs = 5;
  std::size_t row_subsample_cap = 256;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDsLength = 49;

/// Two-pass descriptive statistics: 7 stats per column, then 7 stats of
/// each of those 7 rows, flattened row-major.
StateVector rep_ds(const Eigen::MatrixXd& features);

StateVector rep_operation(std::size_t op_index, std::size_t op_count);

enum class StateRole { group1, operation, group2 };

/// Concatenates parts in order. group1 takes 1 part, operation 2, group2 3.
StateVector compose_state(StateRole role, std::span<const StateVector> parts);

/// Columns standardized to zero mean and unit sample std; constant columns become 0.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& features);

/// Column-then-row autoencoder: per-column map R^m -> R^k, per-row map
/// R^n -> R^d, decoder R^(k*d) -> R^(m*n).
struct AeModel {
  nn::DenseNet column_encoder;
  nn::DenseNet row_encoder;
  nn::DenseNet decoder;

  static AeModel create(std::size_t rows, std::size_t cols, std::size_t k, std::size_t d,
                        std::uint64_t seed);

  /// Flattened bottleneck (row-major k x d).
  Eigen::VectorXd encode(const Eigen::MatrixXd& x) const;

  struct Grads {
    nn::Gradients column_encoder;
    nn::Gradients row_encoder;
    nn::Gradients decoder;
  };
  /// Reconstruction mse; fills gradients when requested.
  double loss(const Eigen::MatrixXd& x, Grads* grads = nullptr) const;
};

/// One-layer graph convolution encoder with inner-product decoder.
struct GaeModel {
  Eigen::MatrixXd weights;  // m x k

  static GaeModel create(std::size_t rows, std::size_t k, std::uint64_t seed);

  /// Absolute-Pearson adjacency with unit diagonal.
  static Eigen::MatrixXd adjacency(const Eigen::MatrixXd& x);
  /// D^-1/2 A D^-1/2 X^T, the fixed input of the convolution.
  static Eigen::MatrixXd propagated(const Eigen::MatrixXd& x, const Eigen::MatrixXd& adjacency);

  Eigen::MatrixXd embed(const Eigen::MatrixXd& propagated) const;  // n x k
  /// bce(A, sigmoid(Z Z^T)); fills the gradient w.r.t. weights when requested.
  double loss(const Eigen::MatrixXd& propagated, const Eigen::MatrixXd& adjacency,
              Eigen::MatrixXd* grad = nullptr) const;
};

/// Stateful ae encoder. Each (rows, cols) shape owns a network that is built
/// and trained for train_epochs on first use, then fine-tuned.
class AeEncoder {
 public:
  explicit AeEncoder(EncoderConfig config) : config_(config), rng_(config.seed) {}
  StateVector encode(const Eigen::MatrixXd& features);
  double last_initial_loss() const { return last_initial_loss_; }
  double last_final_loss() const { return last_final_loss_; }

 private:
  struct Slot {
    AeModel model;
    nn::AdamState opt_col, opt_row, opt_dec;
  };
  EncoderConfig config_;
  Rng rng_;
  std::optional<std::vector<std::size_t>> row_ids_;
  std::size_t source_rows_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, Slot> slots_;
  double last_initial_loss_ = 0.0;
  double last_final_loss_ = 0.0;
};

/// Stateful gae encoder; falls back to rep_ds for fewer than two features.
class GaeEncoder {
 public:
  explicit GaeEncoder(EncoderConfig config) : config_(config), rng_(config.seed) {}
  StateVector encode(const Eigen::MatrixXd& features);
  double last_initial_loss() const { return last_initial_loss_; }
  double last_final_loss() const { return last_final_loss_; }
  bool last_fell_back() const { return fell_back_; }

 private:
  EncoderConfig config_;
  Rng rng_;
  std::optional<std::vector<std::size_t>> row_ids_;
  std::size_t source_rows_ = 0;
  std::optional<GaeModel> model_;
  nn::AdamState opt_;
  bool fell_back_ = false;
  double last_initial_loss_ = 0.0;
  double last_final_loss_ = 0.0;
};

StateVector rep_ae(const Eigen::MatrixXd& features, const EncoderConfig& config);
StateVector rep_gae(const Eigen::MatrixXd& features, const EncoderConfig& config);

/// Encoder front end for one pipeline run.
class StateEncoder {
 public:
  StateEncoder(StateSpec spec, EncoderConfig config);

  StateVector encode(const Eigen::MatrixXd& features);
  /// Length of encode() output for this spec.
  std::size_t length() const;
  StateSpec spec() const { return spec_; }

 private:
  StateSpec spec_;
  EncoderConfig config_;
  AeEncoder ae_;
  GaeEncoder gae_;
};

/// Uniform row subsample of at most `cap` ids, sorted.
std::vector<std::size_t> subsample_rows(std::size_t rows, std::size_t cap, Rng& rng);

}  // namespace featforge
