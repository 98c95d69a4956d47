#include "featforge/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace featforge::nn {

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation a) {
  switch (a) {
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::sigmoid: return pre.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    case Activation::linear: return pre;
  }
  return pre;
}

// Derivative expressed through the activation output.
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& out, Activation a) {
  switch (a) {
    case Activation::relu: return out.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::sigmoid: return out.array() * (1.0 - out.array());
    case Activation::linear: return Eigen::MatrixXd::Ones(out.rows(), out.cols());
  }
  return Eigen::MatrixXd::Ones(out.rows(), out.cols());
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation: " + std::string(s));
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "linear";
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

bool DenseNet::same_shape(const DenseNet& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].in() != other.layers[i].in() || layers[i].out() != other.layers[i].out() ||
        layers[i].activation != other.layers[i].activation)
      return false;
  }
  return true;
}

DenseNet init_net(std::span<const std::size_t> layer_sizes,
                  std::span<const Activation> activations, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("init_net: need at least 2 layer sizes");
  if (activations.size() != layer_sizes.size() - 1)
    throw std::invalid_argument("init_net: one activation per layer required");
  for (auto s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("init_net: layer sizes must be positive");
  }
  std::mt19937_64 engine(seed);
  DenseNet net;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(layer_sizes[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Dense layer;
    layer.weights.resize(out, in);
    for (Eigen::Index c = 0; c < in; ++c) {
      for (Eigen::Index r = 0; r < out; ++r) layer.weights(r, c) = dist(engine);
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = activations[l];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

DenseNet make_mlp(std::span<const std::size_t> layer_sizes, Activation hidden, Activation output,
                  std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least 2 layer sizes");
  std::vector<Activation> acts(layer_sizes.size() - 1, hidden);
  acts.back() = output;
  return init_net(layer_sizes, acts, seed);
}

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& input, ForwardCache* cache) {
  if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (static_cast<std::size_t>(input.rows()) != net.input_size())
    throw std::invalid_argument("forward: input width " + std::to_string(input.rows()) +
                                " does not match network input " + std::to_string(net.input_size()));
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Eigen::MatrixXd x = input;
  for (const auto& layer : net.layers) {
    Eigen::MatrixXd pre = layer.weights * x;
    pre.colwise() += layer.bias;
    Eigen::MatrixXd y = activate(pre, layer.activation);
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->outputs.push_back(y);
    }
    x = std::move(y);
  }
  return x;
}

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input) {
  Eigen::MatrixXd batch = input;
  return forward(net, batch, nullptr).col(0);
}

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  for (const auto& l : net.layers) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (weights.size() != other.weights.size())
    throw std::invalid_argument("Gradients: shape mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] *= s;
    bias[i] *= s;
  }
  return *this;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].size()) m = std::max(m, weights[i].cwiseAbs().maxCoeff());
    if (bias[i].size()) m = std::max(m, bias[i].cwiseAbs().maxCoeff());
  }
  return m;
}

Gradients backward(const DenseNet& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_gradient) {
  const std::size_t L = net.layers.size();
  if (cache.inputs.size() != L || cache.outputs.size() != L)
    throw std::invalid_argument("backward: cache does not match network depth");
  if (output_gradient.rows() != cache.outputs.back().rows() ||
      output_gradient.cols() != cache.outputs.back().cols())
    throw std::invalid_argument("backward: output gradient shape mismatch");

  Gradients g;
  g.weights.resize(L);
  g.bias.resize(L);
  Eigen::MatrixXd delta = output_gradient;
  for (std::size_t k = L; k-- > 0;) {
    const auto& layer = net.layers[k];
    if (cache.inputs[k].rows() != layer.weights.cols())
      throw std::invalid_argument("backward: stale cache");
    Eigen::MatrixXd dpre = delta.cwiseProduct(activation_grad(cache.outputs[k], layer.activation));
    g.weights[k] = dpre * cache.inputs[k].transpose();
    g.bias[k] = dpre.rowwise().sum();
    delta = layer.weights.transpose() * dpre;
  }
  g.input = std::move(delta);
  return g;
}

AdamState::AdamState(std::vector<std::size_t> block_sizes, AdamOptions options)
    : options_(options) {
  for (auto s : block_sizes) {
    first_.emplace_back(s, 0.0);
    second_.emplace_back(s, 0.0);
  }
}

AdamState AdamState::for_net(const DenseNet& net, AdamOptions options) {
  std::vector<std::size_t> sizes;
  for (const auto& l : net.layers) {
    sizes.push_back(static_cast<std::size_t>(l.weights.size()));
    sizes.push_back(static_cast<std::size_t>(l.bias.size()));
  }
  return AdamState(std::move(sizes), options);
}

void AdamState::step(std::span<const std::span<double>> params,
                     std::span<const std::span<const double>> grads) {
  if (params.size() != first_.size() || grads.size() != first_.size())
    throw std::invalid_argument("AdamState::step: block count mismatch");
  for (std::size_t b = 0; b < first_.size(); ++b) {
    if (params[b].size() != first_[b].size() || grads[b].size() != first_[b].size())
      throw std::invalid_argument("AdamState::step: block size mismatch");
  }
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t b = 0; b < first_.size(); ++b) {
    auto& m = first_[b];
    auto& v = second_[b];
    auto p = params[b];
    auto g = grads[b];
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.eps);
    }
  }
}

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state) {
  if (grads.weights.size() != net.layers.size())
    throw std::invalid_argument("adam_step: gradient/network mismatch");
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> g;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& l = net.layers[i];
    if (grads.weights[i].rows() != l.weights.rows() || grads.weights[i].cols() != l.weights.cols() ||
        grads.bias[i].size() != l.bias.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    params.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
    params.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    g.emplace_back(grads.weights[i].data(), static_cast<std::size_t>(grads.weights[i].size()));
    g.emplace_back(grads.bias[i].data(), static_cast<std::size_t>(grads.bias[i].size()));
  }
  state.step(params, g);
}

double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("mse: shape mismatch");
  if (pred.size() == 0) return 0.0;
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

Eigen::MatrixXd mse_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("mse_grad: shape mismatch");
  return 2.0 * (pred - truth) / static_cast<double>(pred.size());
}

double bce(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("bce: shape mismatch");
  if (pred.size() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred.data()[i], 1e-7, 1.0 - 1e-7);
    const double t = truth.data()[i];
    sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
  }
  return sum / static_cast<double>(pred.size());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw std::invalid_argument("softmax: empty input");
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-7) return std::abs(analytic - numeric);
  return std::abs(analytic - numeric) / scale;
}

double gradient_check(const DenseNet& net, const Eigen::MatrixXd& input,
                      const Eigen::MatrixXd& projection, double h) {
  ForwardCache cache;
  Eigen::MatrixXd out = forward(net, input, &cache);
  if (projection.rows() != out.rows() || projection.cols() != out.cols())
    throw std::invalid_argument("gradient_check: projection shape mismatch");
  Gradients g = backward(net, cache, projection);

  DenseNet probe = net;
  auto loss = [&]() { return forward(probe, input).cwiseProduct(projection).sum(); };
  double worst = 0.0;
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto check_block = [&](double* data, Eigen::Index size, const double* analytic) {
      for (Eigen::Index i = 0; i < size; ++i) {
        const double saved = data[i];
        data[i] = saved + h;
        const double up = loss();
        data[i] = saved - h;
        const double down = loss();
        data[i] = saved;
        worst = std::max(worst, relative_error(analytic[i], (up - down) / (2 * h)));
      }
    };
    check_block(probe.layers[l].weights.data(), probe.layers[l].weights.size(), g.weights[l].data());
    check_block(probe.layers[l].bias.data(), probe.layers[l].bias.size(), g.bias[l].data());
  }
  return worst;
}

std::string to_json(const DenseNet& net) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers) {
    nlohmann::json layer;
    layer["in"] = l.in();
    layer["out"] = l.out();
    layer["activation"] = std::string(activation_name(l.activation));
    // row-major weights
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    layer["weights"] = std::move(w);
    layer["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    j["layers"].push_back(std::move(layer));
  }
  return j.dump();
}

DenseNet from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text);
  DenseNet net;
  for (const auto& layer : j.at("layers")) {
    const auto in = layer.at("in").get<Eigen::Index>();
    const auto out = layer.at("out").get<Eigen::Index>();
    auto w = layer.at("weights").get<std::vector<double>>();
    auto b = layer.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out)
      throw std::invalid_argument("from_json: parameter count does not match shape header");
    Dense d;
    d.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) d.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
    d.bias = Eigen::Map<Eigen::VectorXd>(b.data(), out);
    d.activation = parse_activation(layer.at("activation").get<std::string>());
    if (!net.layers.empty() && net.layers.back().out() != d.in())
      throw std::invalid_argument("from_json: consecutive layer sizes disagree");
    net.layers.push_back(std::move(d));
  }
  if (net.layers.empty()) throw std::invalid_argument("from_json: no layers");
  return net;
}

}  // namespace featforge::nn
