#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetbench/core_math.hpp"
#include "hetbench/data.hpp"
#include "hetbench/error.hpp"
#include "hetbench/rng.hpp"

namespace hetbench {

/// ReLU MLP with a softmax output layer. Layer l maps layers[l].weight.cols()
/// inputs to layers[l].weight.rows() outputs.
struct MlpModel {
  LayerStack layers;

  std::size_t input_dim() const { return std::size_t(layers.front().weight.cols()); }
  std::size_t num_classes() const { return std::size_t(layers.back().weight.rows()); }
  ParamVector params() const { return flatten(layers); }

  static MlpModel from_params(const ParamVector& pv) { return MlpModel{unflatten(pv)}; }
  static MlpModel from_params(std::span<const double> flat, std::span<const LayerShape> shapes) {
    return MlpModel{unflatten(flat, shapes)};
  }
};

/// Glorot-uniform weights, zero biases. Identical seeds give identical models.
inline MlpModel init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::size_t num_classes,
                         std::uint64_t seed) {
  require(input_dim >= 1 && num_classes >= 1, ErrorKind::InvalidInput, "model dimensions must be positive");
  require(hidden.size() <= 3, ErrorKind::InvalidInput, "at most three hidden layers");
  Rng rng = make_rng(seed, {0x1417});
  MlpModel m;
  std::size_t fan_in = input_dim;
  auto add_layer = [&](std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer l{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(Eigen::Index(fan_out))};
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = u(rng);
    m.layers.push_back(std::move(l));
    fan_in = fan_out;
  };
  for (std::size_t h : hidden) {
    require(h >= 1, ErrorKind::InvalidInput, "hidden width must be positive");
    add_layer(h);
  }
  add_layer(num_classes);
  return m;
}

namespace detail {

inline void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - mx).exp();
    z.row(r) /= z.row(r).sum();
  }
}

/// Pre-activations of every layer (logits last) for a batch.
inline std::vector<Eigen::MatrixXd> forward_pass(const MlpModel& model, const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l+1] = post-activation of layer l
  acts.reserve(model.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    Eigen::MatrixXd z = acts.back() * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (l + 1 < model.layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

inline Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(Eigen::Index(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(Eigen::Index(r)) = x.row(Eigen::Index(rows[r]));
  return out;
}

/// Mean cross-entropy and its gradient in layer form.
inline std::pair<double, LayerStack> loss_and_grad_layers(const MlpModel& model, const Eigen::MatrixXd& x,
                                                           std::span<const int> y) {
  require(x.rows() > 0 && std::size_t(x.rows()) == y.size(), ErrorKind::InvalidInput,
          "loss needs a non-empty batch with one label per row");
  require(std::size_t(x.cols()) == model.input_dim(), ErrorKind::ShapeMismatch, "feature dim differs from model");
  const auto n = double(x.rows());
  auto acts = forward_pass(model, x);

  Eigen::MatrixXd delta = acts.back();  // logits
  double loss = 0.0;
  for (Eigen::Index r = 0; r < delta.rows(); ++r) {
    const double mx = delta.row(r).maxCoeff();
    const double lse = mx + std::log((delta.row(r).array() - mx).exp().sum());
    loss += lse - delta(r, y[std::size_t(r)]);
    delta.row(r) = (delta.row(r).array() - lse).exp();
    delta(r, y[std::size_t(r)]) -= 1.0;
  }
  delta /= n;

  LayerStack grads(model.layers.size());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    grads[l].weight = delta.transpose() * acts[l];
    grads[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * model.layers[l].weight;
      delta = (acts[l].array() > 0.0).select(back, 0.0);
    }
  }
  return {loss / n, std::move(grads)};
}

}  // namespace detail

/// Class-probability matrix (one softmax row per sample).
inline Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& features) {
  require(std::size_t(features.cols()) == model.input_dim(), ErrorKind::ShapeMismatch,
          "feature dim differs from model input");
  Eigen::MatrixXd out = std::move(detail::forward_pass(model, features).back());
  detail::softmax_rows(out);
  return out;
}

/// Mean cross-entropy over the batch and its gradient as a flat vector.
inline std::pair<double, ParamVector> loss_and_grad(const MlpModel& model, const Eigen::MatrixXd& features,
                                                    std::span<const int> labels) {
  auto [loss, grads] = detail::loss_and_grad_layers(model, features, labels);
  return {loss, flatten(grads)};
}

inline std::pair<double, ParamVector> loss_and_grad(const MlpModel& model, const Dataset& batch) {
  return loss_and_grad(model, batch.features, batch.labels);
}

struct SgdState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  LayerStack velocity;  // empty until the first step

  void validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::InvalidInput, "learning rate must be > 0");
    require(momentum >= 0.0 && momentum < 1.0, ErrorKind::InvalidInput, "momentum must lie in [0, 1)");
  }

  /// v <- momentum * v + g;  w <- w - lr * v
  void step(MlpModel& model, const LayerStack& grads) {
    if (velocity.empty()) {
      velocity = grads;
      for (auto& v : velocity) {
        v.weight.setZero();
        v.bias.setZero();
      }
    }
    for (std::size_t l = 0; l < grads.size(); ++l) {
      velocity[l].weight = momentum * velocity[l].weight + grads[l].weight;
      velocity[l].bias = momentum * velocity[l].bias + grads[l].bias;
      model.layers[l].weight -= learning_rate * velocity[l].weight;
      model.layers[l].bias -= learning_rate * velocity[l].bias;
    }
  }
};

/// E seeded-shuffle epochs of minibatch SGD with momentum.
inline MlpModel local_train(MlpModel model, const Dataset& train, int epochs, int batch_size, SgdState& sgd,
                            std::uint64_t seed) {
  require(epochs >= 1, ErrorKind::InvalidInput, "epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::InvalidInput, "batch size must be >= 1");
  require(!train.empty(), ErrorKind::InvalidInput, "cannot train on an empty split");
  sgd.validate();
  Rng rng = make_rng(seed, {0x7a17});
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> ys;
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += std::size_t(batch_size)) {
      const std::size_t stop = std::min(order.size(), start + std::size_t(batch_size));
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Eigen::MatrixXd xb = detail::gather_rows(train.features, rows);
      ys.clear();
      for (auto r : rows) ys.push_back(train.labels[r]);
      auto [loss, grads] = detail::loss_and_grad_layers(model, xb, ys);
      sgd.step(model, grads);
    }
  }
  return model;
}

struct LossReport {
  double mean_loss = 0.0;
  double accuracy = 0.0;
  std::size_t sample_count = 0;
};

/// Mean cross-entropy and top-1 accuracy (argmax ties go to the lowest class).
inline LossReport evaluate(const MlpModel& model, const Dataset& split) {
  require(!split.empty(), ErrorKind::InvalidInput, "cannot evaluate on an empty split");
  require(split.dim() == model.input_dim(), ErrorKind::ShapeMismatch, "feature dim differs from model");
  auto acts = detail::forward_pass(model, split.features);
  const Eigen::MatrixXd& logits = acts.back();
  double loss = 0.0;
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    const int y = split.labels[std::size_t(r)];
    loss += lse - logits(r, y);
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    if (best == y) ++correct;
  }
  const auto n = double(split.size());
  return {std::max(loss / n, 0.0), double(correct) / n, split.size()};
}

}  // namespace hetbench
