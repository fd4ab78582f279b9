#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colmp/data_model.hpp"
#include "colmp/error.hpp"
#include "colmp/random.hpp"
#include "colmp/standardize.hpp"

namespace colmp {

struct LrSchedule {
  enum class Kind { Constant, Step };

  Kind kind = Kind::Step;
  double gamma = 0.5;       // decay factor per period, in (0, 1]
  std::size_t period = 2000;

  static LrSchedule constant() { return {Kind::Constant, 1.0, 0}; }
  static LrSchedule step(double gamma, std::size_t period) { return {Kind::Step, gamma, period}; }

  double rate(double base, std::size_t epoch) const {
    if (kind == Kind::Constant || period == 0) return base;
    return base * std::pow(gamma, static_cast<double>(epoch / period));
  }
};

struct MlpConfig {
  std::size_t input_dim = kNumFeatures;
  std::size_t hidden_layers = 4;
  std::size_t hidden_width = 200;
  std::size_t epochs = 10000;
  double learning_rate = 0.01;
  LrSchedule schedule;
  std::uint64_t seed = 0;

  void validate() const {
    if (input_dim < 1) throw Error(ErrorCode::InvalidArgument, "input_dim must be >= 1");
    if (hidden_layers > 0 && hidden_width < 1) throw Error(ErrorCode::InvalidArgument, "hidden_width must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
    }
    if (schedule.kind == LrSchedule::Kind::Step && !(schedule.gamma > 0.0 && schedule.gamma <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "decay factor must lie in (0, 1]");
    }
  }
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

/// Fully connected RELU network with a single linear output. Zero hidden
/// layers gives a plain linear model.
struct Mlp {
  MlpConfig config;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }
};

/// Glorot-uniform weights, zero biases; deterministic in config.seed.
inline Mlp mlp_init(const MlpConfig& config) {
  config.validate();
  Mlp net;
  net.config = config;
  Rng rng(config.seed);
  std::size_t in = config.input_dim;
  for (std::size_t l = 0; l <= config.hidden_layers; ++l) {
    const std::size_t out = l < config.hidden_layers ? config.hidden_width : 1;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    net.layers.push_back(std::move(layer));
    in = out;
  }
  return net;
}

namespace detail {

// Activations per layer with samples as columns: acts[0] is the input
// (d x n), acts[l + 1] the output of layer l.
inline std::vector<Eigen::MatrixXd> forward_all(const Mlp& net, const Eigen::MatrixXd& inputs_by_column) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(inputs_by_column);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Eigen::MatrixXd z = net.layers[l].weights * acts.back();
    z.colwise() += net.layers[l].bias;
    if (l + 1 < net.layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

inline void check_batch(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.cols() != static_cast<Eigen::Index>(net.config.input_dim)) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(net.config.input_dim) +
                                                  " input columns, got " + std::to_string(x.cols()));
  }
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "inputs and targets differ in length");
  if (x.rows() < 1) throw Error(ErrorCode::InsufficientRows, "training needs at least one sample");
}

}  // namespace detail

/// Predictions for every row of `x` (n x input_dim).
inline Eigen::VectorXd mlp_forward_batch(const Mlp& net, const Eigen::MatrixXd& x) {
  if (x.cols() != static_cast<Eigen::Index>(net.config.input_dim)) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(net.config.input_dim) +
                                                  " input columns, got " + std::to_string(x.cols()));
  }
  return detail::forward_all(net, x.transpose()).back().row(0).transpose();
}

inline double mlp_forward(const Mlp& net, std::span<const double> x) {
  if (x.size() != net.config.input_dim) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(net.config.input_dim) +
                                                  " inputs, got " + std::to_string(x.size()));
  }
  const Eigen::MatrixXd col = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return detail::forward_all(net, col).back()(0, 0);
}

using MlpGradient = std::vector<DenseLayer>;

struct LossGradient {
  double loss = 0.0;  // mean squared error
  MlpGradient gradient;
};

/// MSE and its gradient by backpropagation.
inline LossGradient loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  detail::check_batch(net, x, y);
  const auto n = static_cast<double>(x.rows());
  const auto acts = detail::forward_all(net, x.transpose());
  const Eigen::RowVectorXd resid = acts.back().row(0) - y.transpose();

  LossGradient out;
  out.loss = resid.squaredNorm() / n;
  out.gradient.resize(net.layers.size());
  Eigen::MatrixXd delta = (2.0 / n) * resid;
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    out.gradient[l].weights = delta * acts[l].transpose();
    out.gradient[l].bias = delta.rowwise().sum();
    if (l > 0) {
      delta = (net.layers[l].weights.transpose() * delta).cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

using GradientFn = std::function<MlpGradient(const Mlp&, const Eigen::MatrixXd&, const Eigen::VectorXd&)>;

/// Largest |g_analytic - g_fd| / max(1, |g_analytic|, |g_fd|) over all
/// parameters, with central differences of step 1e-5. `gradient` defaults to
/// backpropagation; passing another function lets tests check a broken one.
inline double grad_check(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const GradientFn& gradient = {}) {
  detail::check_batch(net, x, y);
  const MlpGradient analytic = gradient ? gradient(net, x, y) : loss_and_gradient(net, x, y).gradient;
  constexpr double h = 1e-5;
  auto loss_at = [&](const Mlp& m) {
    const Eigen::VectorXd r = mlp_forward_batch(m, x) - y;
    return r.squaredNorm() / static_cast<double>(x.rows());
  };
  auto deviation = [](double ga, double gfd) {
    return std::abs(ga - gfd) / std::max({1.0, std::abs(ga), std::abs(gfd)});
  };

  Mlp probe = net;
  double worst = 0.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& w = probe.layers[l].weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double orig = w.data()[i];
      w.data()[i] = orig + h;
      const double up = loss_at(probe);
      w.data()[i] = orig - h;
      const double down = loss_at(probe);
      w.data()[i] = orig;
      worst = std::max(worst, deviation(analytic[l].weights.data()[i], (up - down) / (2.0 * h)));
    }
    auto& b = probe.layers[l].bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double orig = b(i);
      b(i) = orig + h;
      const double up = loss_at(probe);
      b(i) = orig - h;
      const double down = loss_at(probe);
      b(i) = orig;
      worst = std::max(worst, deviation(analytic[l].bias(i), (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

struct TrainTrace {
  std::vector<double> losses;  // training MSE before each update, when recorded
  std::size_t epochs_run = 0;
  double final_train_mse = 0.0;
  std::optional<double> final_validation_mse;
  std::uint64_t split_seed = 0;
};

struct MlpTraining {
  Mlp net;
  TrainTrace trace;
};

/// Full-batch gradient descent on MSE for config.epochs steps.
inline MlpTraining mlp_train(Mlp net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool record_trace) {
  detail::check_batch(net, x, y);
  MlpTraining out;
  out.trace.split_seed = net.config.seed;
  if (record_trace) out.trace.losses.reserve(net.config.epochs);
  for (std::size_t epoch = 0; epoch < net.config.epochs; ++epoch) {
    auto lg = loss_and_gradient(net, x, y);
    if (!std::isfinite(lg.loss)) {
      throw Error(ErrorCode::DivergenceDetected, "training loss became non-finite at epoch " + std::to_string(epoch));
    }
    if (record_trace) out.trace.losses.push_back(lg.loss);
    const double lr = net.config.schedule.rate(net.config.learning_rate, epoch);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      net.layers[l].weights -= lr * lg.gradient[l].weights;
      net.layers[l].bias -= lr * lg.gradient[l].bias;
    }
    out.trace.epochs_run = epoch + 1;
  }
  const Eigen::VectorXd r = mlp_forward_batch(net, x) - y;
  out.trace.final_train_mse = r.squaredNorm() / static_cast<double>(x.rows());
  if (!std::isfinite(out.trace.final_train_mse)) {
    throw Error(ErrorCode::DivergenceDetected, "final training loss is non-finite");
  }
  out.net = std::move(net);
  return out;
}

// ---------------------------------------------------------------------------
// Feature handling

/// The six base features followed by (a/d)^2 and (V_y/V_o)^2.
inline std::array<double, kNumFeatures + 2> augment_circular(const ColumnFeatures& f) {
  const auto v = f.values();
  return {v[0], v[1], v[2], v[3], v[4], v[5], f.span_depth * f.span_depth, f.shear_ratio * f.shear_ratio};
}

inline std::vector<double> network_inputs(const ColumnFeatures& f, bool augmented) {
  if (augmented) {
    const auto a = augment_circular(f);
    return {a.begin(), a.end()};
  }
  const auto v = f.values();
  return {v.begin(), v.end()};
}

/// A network trained on standardized inputs; targets stay in radians.
struct MlpRegressor {
  Standardizer input_scaling;
  bool augmented = false;
  Mlp net;

  double predict(const ColumnFeatures& f) const {
    const auto in = network_inputs(f, augmented);
    const Eigen::RowVectorXd raw = Eigen::Map<const Eigen::RowVectorXd>(in.data(), static_cast<Eigen::Index>(in.size()));
    const Eigen::RowVectorXd z = input_scaling.apply_row(raw);
    return mlp_forward(net, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
  }
};

struct MlpRegressorTraining {
  MlpRegressor regressor;
  TrainTrace trace;
  Split split;
};

/// Seeded 70/30 split, standardization fitted on the training part, then
/// mlp_train. The validation MSE is reported in the trace.
inline MlpRegressorTraining mlp_train_regressor(const std::vector<ColumnFeatures>& features, const Eigen::VectorXd& y,
                                                bool augmented, MlpConfig config, bool record_trace) {
  if (features.size() != static_cast<std::size_t>(y.size())) {
    throw Error(ErrorCode::DimensionMismatch, "features and targets differ in length");
  }
  if (features.size() < 4) throw Error(ErrorCode::InsufficientRows, "network training needs at least 4 rows");
  const std::size_t dim = augmented ? kNumFeatures + 2 : kNumFeatures;
  config.input_dim = dim;

  Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto in = network_inputs(features[i], augmented);
    for (std::size_t j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = in[j];
  }

  MlpRegressorTraining out;
  out.split = train_validation_split(features.size(), 0.7, config.seed);
  auto take = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& xs, Eigen::VectorXd& ys) {
    xs.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    ys.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
      ys(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(idx[i]));
    }
  };
  Eigen::MatrixXd x_tr, x_va;
  Eigen::VectorXd y_tr, y_va;
  take(out.split.train, x_tr, y_tr);
  take(out.split.validation, x_va, y_va);

  out.regressor.augmented = augmented;
  out.regressor.input_scaling = Standardizer::fit(x_tr);
  auto trained = mlp_train(mlp_init(config), out.regressor.input_scaling.apply(x_tr), y_tr, record_trace);
  out.regressor.net = std::move(trained.net);
  out.trace = std::move(trained.trace);
  const Eigen::VectorXd rv = mlp_forward_batch(out.regressor.net, out.regressor.input_scaling.apply(x_va)) - y_va;
  out.trace.final_validation_mse = rv.squaredNorm() / static_cast<double>(y_va.size());
  return out;
}

}  // namespace colmp
