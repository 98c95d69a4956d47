#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace featforge::nn {

enum class Activation { relu, sigmoid, linear };

/// One affine layer followed by an element-wise activation.
struct Dense {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::linear;

  std::size_t in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Stack of Dense layers. Inputs and outputs are column batches: each column
/// of the input matrix is one sample.
struct DenseNet {
  std::vector<Dense> layers;

  std::size_t input_size() const { return layers.front().in(); }
  std::size_t output_size() const { return layers.back().out(); }
  std::size_t parameter_count() const;
  bool same_shape(const DenseNet& other) const;
};

/// Weights uniform in +-1/sqrt(fan_in) from a seeded generator; biases zero.
DenseNet init_net(std::span<const std::size_t> layer_sizes,
                  std::span<const Activation> activations, std::uint64_t seed);

/// Hidden layers use `hidden`, the last layer `output`.
DenseNet make_mlp(std::span<const std::size_t> layer_sizes, Activation hidden, Activation output,
                  std::uint64_t seed);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> outputs;  // post-activation of each layer
};

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& input,
                        ForwardCache* cache = nullptr);
Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
  Eigen::MatrixXd input;  // d loss / d input batch

  static Gradients zeros_like(const DenseNet& net);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  double max_abs() const;
};

/// Reverse-mode gradients for a loss whose gradient w.r.t. the output batch
/// is `output_gradient`.
Gradients backward(const DenseNet& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_gradient);

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected first/second moment accumulators over a fixed list of
/// parameter blocks.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::vector<std::size_t> block_sizes, AdamOptions options);
  static AdamState for_net(const DenseNet& net, AdamOptions options = {});

  /// Applies one update to every block. `params[b]` and `grads[b]` must have
  /// the size registered for block b.
  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads);

  long steps() const { return step_; }
  const AdamOptions& options() const { return options_; }
  std::size_t blocks() const { return first_.size(); }

 private:
  AdamOptions options_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  long step_ = 0;
};

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);
/// Gradient of mse w.r.t. pred.
Eigen::MatrixXd mse_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// Mean binary cross entropy; predictions clamped to [1e-7, 1 - 1e-7].
double bce(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Largest relative error between backward() and central differences of
/// L = sum(projection .* forward(net, input)).
double gradient_check(const DenseNet& net, const Eigen::MatrixXd& input,
                      const Eigen::MatrixXd& projection, double h = 1e-5);

/// Relative error used by gradient checks; near-zero pairs compare absolutely.
double relative_error(double analytic, double numeric);

/// JSON snapshot: {"layers":[{"in":..,"out":..,"activation":..,"weights":[..],"bias":[..]}]}.
std::string to_json(const DenseNet& net);
DenseNet from_json(std::string_view text);

std::string_view activation_name(Activation a);

}  // namespace featforge::nn
