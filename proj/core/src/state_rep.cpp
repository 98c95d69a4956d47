#include "featforge/state_rep.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "featforge/measures.hpp"

namespace featforge {

StateSpec parse_state_spec(std::string_view text) {
  if (text == "ds") return StateSpec::ds;
  if (text == "ae") return StateSpec::ae;
  if (text == "gae") return StateSpec::gae;
  if (text == "ds+ae") return StateSpec::ds_ae;
  if (text == "ds+ae+gae") return StateSpec::ds_ae_gae;
  throw std::invalid_argument("unknown state method: " + std::string(text));
}

std::string_view state_spec_name(StateSpec spec) {
  switch (spec) {
    case StateSpec::ds: return "ds";
    case StateSpec::ae: return "ae";
    case StateSpec::gae: return "gae";
    case StateSpec::ds_ae: return "ds+ae";
    case StateSpec::ds_ae_gae: return "ds+ae+gae";
  }
  return "ds";
}

StateVector rep_ds(const Eigen::MatrixXd& features) {
  if (features.rows() == 0 || features.cols() == 0)
    throw std::invalid_argument("rep_ds: empty matrix");
  const auto n = static_cast<std::size_t>(features.cols());
  const auto m = static_cast<std::size_t>(features.rows());
  // 7 x n: one stat vector per column
  std::vector<std::vector<double>> per_stat(7, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    auto s = descriptive_stats({features.col(static_cast<Eigen::Index>(j)).data(), m}).as_vector();
    for (std::size_t r = 0; r < 7; ++r) per_stat[r][j] = s[r];
  }
  StateVector out;
  out.method = StateMethod::ds;
  out.values.reserve(kDsLength);
  for (const auto& row : per_stat) {
    auto s = descriptive_stats(row).as_vector();
    out.values.insert(out.values.end(), s.begin(), s.end());
  }
  return out;
}

StateVector rep_operation(std::size_t op_index, std::size_t op_count) {
  if (op_index >= op_count) throw std::out_of_range("rep_operation: index out of range");
  StateVector v;
  v.method = StateMethod::onehot;
  v.values.assign(op_count, 0.0);
  v.values[op_index] = 1.0;
  return v;
}

StateVector compose_state(StateRole role, std::span<const StateVector> parts) {
  const std::size_t arity = role == StateRole::group1 ? 1 : role == StateRole::operation ? 2 : 3;
  if (parts.size() != arity)
    throw std::invalid_argument("compose_state: expected " + std::to_string(arity) + " parts");
  StateVector out;
  out.method = arity == 1 ? parts[0].method : StateMethod::concat;
  for (const auto& p : parts) out.values.insert(out.values.end(), p.values.begin(), p.values.end());
  return out;
}

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd out(features.rows(), features.cols());
  const auto m = static_cast<std::size_t>(features.rows());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double mean = features.col(j).mean();
    const double sd = sample_std({features.col(j).data(), m});
    if (sd < 1e-12) out.col(j).setZero();
    else out.col(j) = (features.col(j).array() - mean) / sd;
  }
  return out;
}

std::vector<std::size_t> subsample_rows(std::size_t rows, std::size_t cap, Rng& rng) {
  std::vector<std::size_t> ids(rows);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (rows <= cap) return ids;
  std::shuffle(ids.begin(), ids.end(), rng.engine());
  ids.resize(cap);
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& ids) {
  if (ids.size() == static_cast<std::size_t>(x.rows())) return x;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), x.cols());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(ids[i]));
  return out;
}

void require_nonempty(const Eigen::MatrixXd& x, const char* what) {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument(std::string(what) + ": empty matrix");
}

}  // namespace

// --- autoencoder -----------------------------------------------------------

AeModel AeModel::create(std::size_t rows, std::size_t cols, std::size_t k, std::size_t d,
                        std::uint64_t seed) {
  using nn::Activation;
  AeModel m;
  const std::size_t col_sizes[] = {rows, k};
  const std::size_t row_sizes[] = {cols, d};
  const std::size_t dec_sizes[] = {k * d, rows * cols};
  const Activation relu[] = {Activation::relu};
  const Activation linear[] = {Activation::linear};
  m.column_encoder = nn::init_net(col_sizes, relu, Rng::derive(seed, "ae.col"));
  m.row_encoder = nn::init_net(row_sizes, linear, Rng::derive(seed, "ae.row"));
  m.decoder = nn::init_net(dec_sizes, linear, Rng::derive(seed, "ae.dec"));
  return m;
}

Eigen::VectorXd AeModel::encode(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z = nn::forward(column_encoder, x);                   // k x n
  Eigen::MatrixXd zp_t = nn::forward(row_encoder, Eigen::MatrixXd(z.transpose()));  // d x k
  // column-major d x k equals row-major k x d
  return Eigen::Map<const Eigen::VectorXd>(zp_t.data(), zp_t.size());
}

double AeModel::loss(const Eigen::MatrixXd& x, Grads* grads) const {
  nn::ForwardCache c_col, c_row, c_dec;
  Eigen::MatrixXd z = nn::forward(column_encoder, x, &c_col);
  Eigen::MatrixXd zp_t = nn::forward(row_encoder, Eigen::MatrixXd(z.transpose()), &c_row);
  Eigen::MatrixXd flat = Eigen::Map<const Eigen::MatrixXd>(zp_t.data(), zp_t.size(), 1);
  Eigen::MatrixXd recon = nn::forward(decoder, flat, &c_dec);
  Eigen::MatrixXd truth = Eigen::Map<const Eigen::MatrixXd>(x.data(), x.size(), 1);
  const double value = nn::mse(recon, truth);
  if (grads) {
    grads->decoder = nn::backward(decoder, c_dec, nn::mse_grad(recon, truth));
    Eigen::MatrixXd d_zp_t =
        Eigen::Map<const Eigen::MatrixXd>(grads->decoder.input.data(), zp_t.rows(), zp_t.cols());
    grads->row_encoder = nn::backward(row_encoder, c_row, d_zp_t);
    Eigen::MatrixXd dz = grads->row_encoder.input.transpose();
    grads->column_encoder = nn::backward(column_encoder, c_col, dz);
  }
  return value;
}

StateVector AeEncoder::encode(const Eigen::MatrixXd& features) {
  require_nonempty(features, "rep_ae");
  const auto rows = static_cast<std::size_t>(features.rows());
  if (!row_ids_ || source_rows_ != rows) {
    row_ids_ = subsample_rows(rows, config_.row_subsample_cap, rng_);
    source_rows_ = rows;
    slots_.clear();
  }
  Eigen::MatrixXd x = standardize_columns(take_rows(features, *row_ids_));
  const auto key = std::make_pair(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(x.cols()));

  std::size_t epochs = config_.incremental_epochs;
  auto it = slots_.find(key);
  if (it == slots_.end()) {
    Slot slot{AeModel::create(key.first, key.second, config_.ae_col_dim, config_.ae_row_dim,
                              rng_.next()),
              {}, {}, {}};
    nn::AdamOptions opt{config_.learning_rate};
    slot.opt_col = nn::AdamState::for_net(slot.model.column_encoder, opt);
    slot.opt_row = nn::AdamState::for_net(slot.model.row_encoder, opt);
    slot.opt_dec = nn::AdamState::for_net(slot.model.decoder, opt);
    it = slots_.emplace(key, std::move(slot)).first;
    epochs = config_.train_epochs;
  }
  Slot& s = it->second;
  last_initial_loss_ = s.model.loss(x);
  for (std::size_t e = 0; e < epochs; ++e) {
    AeModel::Grads g;
    s.model.loss(x, &g);
    nn::adam_step(s.model.column_encoder, g.column_encoder, s.opt_col);
    nn::adam_step(s.model.row_encoder, g.row_encoder, s.opt_row);
    nn::adam_step(s.model.decoder, g.decoder, s.opt_dec);
  }
  last_final_loss_ = s.model.loss(x);

  Eigen::VectorXd z = s.model.encode(x);
  StateVector out;
  out.method = StateMethod::ae;
  out.values.assign(z.data(), z.data() + z.size());
  return out;
}

StateVector rep_ae(const Eigen::MatrixXd& features, const EncoderConfig& config) {
  AeEncoder enc(config);
  return enc.encode(features);
}

// --- graph autoencoder ------------------------------------------------------

GaeModel GaeModel::create(std::size_t rows, std::size_t k, std::uint64_t seed) {
  const std::size_t sizes[] = {rows, k};
  const nn::Activation acts[] = {nn::Activation::linear};
  GaeModel g;
  // init_net stores weights as out x in, the convolution wants in x out.
  g.weights = nn::init_net(sizes, acts, seed).layers[0].weights.transpose();
  return g;
}

Eigen::MatrixXd GaeModel::adjacency(const Eigen::MatrixXd& x) {
  const auto n = x.cols();
  const auto m = static_cast<std::size_t>(x.rows());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      a(i, j) = a(j, i) = pearson_abs({x.col(i).data(), m}, {x.col(j).data(), m});
    }
  }
  return a;
}

Eigen::MatrixXd GaeModel::propagated(const Eigen::MatrixXd& x, const Eigen::MatrixXd& adjacency) {
  Eigen::VectorXd inv_sqrt_deg = adjacency.rowwise().sum().array().rsqrt();
  Eigen::MatrixXd s = inv_sqrt_deg.asDiagonal() * adjacency * inv_sqrt_deg.asDiagonal();
  return s * x.transpose();
}

Eigen::MatrixXd GaeModel::embed(const Eigen::MatrixXd& propagated) const {
  return (propagated * weights).cwiseMax(0.0);
}

double GaeModel::loss(const Eigen::MatrixXd& propagated, const Eigen::MatrixXd& adjacency,
                      Eigen::MatrixXd* grad) const {
  Eigen::MatrixXd h = propagated * weights;
  Eigen::MatrixXd z = h.cwiseMax(0.0);
  Eigen::MatrixXd logits = z * z.transpose();
  Eigen::MatrixXd recon = logits.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  const double value = nn::bce(recon, adjacency);
  if (grad) {
    const double count = static_cast<double>(adjacency.size());
    Eigen::MatrixXd d_logits = (recon - adjacency) / count;
    Eigen::MatrixXd dz = (d_logits + d_logits.transpose()) * z;
    Eigen::MatrixXd dh = dz.cwiseProduct(h.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    *grad = propagated.transpose() * dh;
  }
  return value;
}

StateVector GaeEncoder::encode(const Eigen::MatrixXd& features) {
  require_nonempty(features, "rep_gae");
  fell_back_ = false;
  if (features.cols() < 2) {
    std::cerr << "warning: graph encoder needs at least 2 features, using descriptive statistics\n";
    fell_back_ = true;
    return rep_ds(features);
  }
  const auto rows = static_cast<std::size_t>(features.rows());
  if (!row_ids_ || source_rows_ != rows) {
    row_ids_ = subsample_rows(rows, config_.row_subsample_cap, rng_);
    source_rows_ = rows;
    model_.reset();
  }
  Eigen::MatrixXd x = standardize_columns(take_rows(features, *row_ids_));
  if (!model_) {
    model_ = GaeModel::create(static_cast<std::size_t>(x.rows()), config_.gae_dim, rng_.next());
    opt_ = nn::AdamState({static_cast<std::size_t>(model_->weights.size())},
                         nn::AdamOptions{config_.learning_rate});
  }
  Eigen::MatrixXd a = GaeModel::adjacency(x);
  Eigen::MatrixXd p = GaeModel::propagated(x, a);
  last_initial_loss_ = model_->loss(p, a);
  for (std::size_t e = 0; e < config_.train_epochs; ++e) {
    Eigen::MatrixXd g;
    model_->loss(p, a, &g);
    std::span<double> params[] = {{model_->weights.data(), static_cast<std::size_t>(model_->weights.size())}};
    std::span<const double> grads[] = {{g.data(), static_cast<std::size_t>(g.size())}};
    opt_.step(params, grads);
  }
  last_final_loss_ = model_->loss(p, a);

  Eigen::VectorXd mean = model_->embed(p).colwise().mean().transpose();
  StateVector out;
  out.method = StateMethod::gae;
  out.values.assign(mean.data(), mean.data() + mean.size());
  return out;
}

StateVector rep_gae(const Eigen::MatrixXd& features, const EncoderConfig& config) {
  GaeEncoder enc(config);
  return enc.encode(features);
}

// --- front end ----------------------------------------------------------------

StateEncoder::StateEncoder(StateSpec spec, EncoderConfig config)
    : spec_(spec),
      config_(config),
      ae_([&] {
        auto c = config;
        c.seed = Rng::derive(config.seed, "state.ae");
        return c;
      }()),
      gae_([&] {
        auto c = config;
        c.seed = Rng::derive(config.seed, "state.gae");
        return c;
      }()) {}

std::size_t StateEncoder::length() const {
  const std::size_t ae = config_.ae_col_dim * config_.ae_row_dim;
  switch (spec_) {
    case StateSpec::ds: return kDsLength;
    case StateSpec::ae: return ae;
    case StateSpec::gae: return config_.gae_dim;
    case StateSpec::ds_ae: return kDsLength + ae;
    case StateSpec::ds_ae_gae: return kDsLength + ae + config_.gae_dim;
  }
  return kDsLength;
}

StateVector StateEncoder::encode(const Eigen::MatrixXd& features) {
  auto gae_part = [&]() {
    if (features.cols() >= 2) return gae_.encode(features);
    // A lone feature is a one-node graph; keep the declared width instead of
    // falling back to descriptive statistics.
    Eigen::MatrixXd doubled(features.rows(), 2);
    doubled.col(0) = features.col(0);
    doubled.col(1) = features.col(0);
    return gae_.encode(doubled);
  };
  StateVector out;
  switch (spec_) {
    case StateSpec::ds: return rep_ds(features);
    case StateSpec::ae: return ae_.encode(features);
    case StateSpec::gae: return gae_part();
    case StateSpec::ds_ae: {
      auto a = rep_ds(features);
      auto b = ae_.encode(features);
      out.values = std::move(a.values);
      out.values.insert(out.values.end(), b.values.begin(), b.values.end());
      break;
    }
    case StateSpec::ds_ae_gae: {
      auto a = rep_ds(features);
      auto b = ae_.encode(features);
      auto c = gae_part();
      out.values = std::move(a.values);
      out.values.insert(out.values.end(), b.values.begin(), b.values.end());
      out.values.insert(out.values.end(), c.values.begin(), c.values.end());
      break;
    }
  }
  out.method = StateMethod::concat;
  return out;
}

}  // namespace featforge
