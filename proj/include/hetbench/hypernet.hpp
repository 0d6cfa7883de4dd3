#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetbench/core_math.hpp"
#include "hetbench/data.hpp"
#include "hetbench/error.hpp"
#include "hetbench/model.hpp"
#include "hetbench/rng.hpp"

namespace hetbench {

/// Affine map from a preference vector r (length N) to target-model
/// parameters: theta = W r + b.
struct HyperNetwork {
  Eigen::MatrixXd weight;  // P x N
  Eigen::VectorXd bias;    // P
  std::vector<LayerShape> target_shapes;

  std::size_t num_clients() const { return std::size_t(weight.cols()); }
  std::size_t target_size() const { return std::size_t(weight.rows()); }
};

/// Bias starts at `base` (an initialized target model); weights are small
/// seeded Gaussians.
inline HyperNetwork make_hypernet(std::size_t num_clients, const ParamVector& base, std::uint64_t seed,
                                  double weight_scale = 0.01) {
  require(num_clients >= 1, ErrorKind::InvalidInput, "hypernetwork needs at least one client");
  HyperNetwork hn;
  hn.target_shapes = base.shapes;
  hn.bias = Eigen::Map<const Eigen::VectorXd>(base.flat.data(), Eigen::Index(base.flat.size()));
  hn.weight.resize(Eigen::Index(base.flat.size()), Eigen::Index(num_clients));
  Rng rng = make_rng(seed, {0x4e7});
  std::normal_distribution<double> normal(0.0, weight_scale);
  for (Eigen::Index r = 0; r < hn.weight.rows(); ++r)
    for (Eigen::Index c = 0; c < hn.weight.cols(); ++c) hn.weight(r, c) = normal(rng);
  return hn;
}

inline ParamVector hn_forward(const HyperNetwork& hn, std::span<const double> r) {
  require(r.size() == hn.num_clients(), ErrorKind::ShapeMismatch, "preference length differs from client count");
  const Eigen::Map<const Eigen::VectorXd> rv(r.data(), Eigen::Index(r.size()));
  const Eigen::VectorXd theta = hn.weight * rv + hn.bias;
  return {std::vector<double>(theta.data(), theta.data() + theta.size()), hn.target_shapes};
}

inline ParamVector hn_forward(const HyperNetwork& hn, const ProbVector& r) { return hn_forward(hn, r.values()); }

struct HnGradient {
  double loss = 0.0;
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// Scalarized loss sum_k r_k L_k(HN(r)) over one batch per client, with
/// dL/dW = g r^T and dL/db = g where g = sum_k r_k grad_theta L_k.
inline HnGradient hn_loss_and_grad(const HyperNetwork& hn, std::span<const double> r, std::span<const Dataset> batches) {
  require(batches.size() == hn.num_clients(), ErrorKind::InvalidInput, "one batch per client required");
  const ParamVector theta = hn_forward(hn, r);
  const MlpModel model = MlpModel::from_params(theta);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(Eigen::Index(theta.size()));
  double loss = 0.0;
  for (std::size_t k = 0; k < batches.size(); ++k) {
    if (r[k] == 0.0) continue;
    auto [lk, gk] = loss_and_grad(model, batches[k]);
    loss += r[k] * lk;
    g += r[k] * Eigen::Map<const Eigen::VectorXd>(gk.flat.data(), Eigen::Index(gk.flat.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> rv(r.data(), Eigen::Index(r.size()));
  return {loss, g * rv.transpose(), g};
}

/// Linear-scalarization training: per step draw r ~ Dir(1) and one minibatch
/// per client, then take an SGD step on (W, b).
inline HyperNetwork hn_train(HyperNetwork hn, std::span<const Dataset> train, int steps, double lr,
                             std::uint64_t seed, int batch_size = 64) {
  require(steps >= 1, ErrorKind::InvalidInput, "hypernetwork training needs steps >= 1");
  require(lr > 0.0, ErrorKind::InvalidInput, "learning rate must be > 0");
  require(train.size() == hn.num_clients(), ErrorKind::InvalidInput, "one train split per client required");
  for (const auto& t : train) require(!t.empty(), ErrorKind::InvalidInput, "empty client train split");
  Rng rng = make_rng(seed, {0x4e77});

  // Per-client epoch-style cursors over seeded shuffles.
  std::vector<std::vector<std::size_t>> order(train.size());
  std::vector<std::size_t> cursor(train.size());
  for (std::size_t k = 0; k < train.size(); ++k) {
    order[k].resize(train[k].size());
    std::iota(order[k].begin(), order[k].end(), std::size_t{0});
    cursor[k] = order[k].size();
  }
  std::vector<Dataset> batches(train.size());
  for (int s = 0; s < steps; ++s) {
    const auto r = sample_dirichlet(rng, train.size(), 1.0);
    for (std::size_t k = 0; k < train.size(); ++k) {
      std::vector<std::size_t> rows;
      const std::size_t want = std::min<std::size_t>(std::size_t(batch_size), train[k].size());
      while (rows.size() < want) {
        if (cursor[k] == order[k].size()) {
          std::shuffle(order[k].begin(), order[k].end(), rng);
          cursor[k] = 0;
        }
        rows.push_back(order[k][cursor[k]++]);
      }
      batches[k] = subset(train[k], rows);
    }
    const HnGradient grad = hn_loss_and_grad(hn, r, batches);
    hn.weight -= lr * grad.weight;
    hn.bias -= lr * grad.bias;
  }
  return hn;
}

struct PreferenceSolution {
  ProbVector preference;
  double loss = 0.0;
  double uniform_loss = 0.0;
};

/// argmin_r L_i(HN(r)) over the simplex by projected gradient from the uniform
/// point (gradient W^T grad_theta L_i); returns the best iterate.
inline PreferenceSolution solve_preference(const HyperNetwork& hn, const Dataset& split, int steps, double lr) {
  require(!split.empty(), ErrorKind::InvalidInput, "preference solve needs a non-empty split");
  require(steps >= 0 && lr > 0.0, ErrorKind::InvalidInput, "preference solve needs steps >= 0 and lr > 0");
  const std::size_t n = hn.num_clients();
  ProbVector r = ProbVector::uniform(n);
  auto eval = [&](const ProbVector& pref) {
    return loss_and_grad(MlpModel::from_params(hn_forward(hn, pref)), split);
  };
  auto [loss, grad] = eval(r);
  PreferenceSolution out{r, loss, loss};
  std::vector<double> step(n);
  for (int s = 0; s < steps && n > 1; ++s) {
    const Eigen::Map<const Eigen::VectorXd> g(grad.flat.data(), Eigen::Index(grad.flat.size()));
    const Eigen::VectorXd dr = hn.weight.transpose() * g;
    for (std::size_t k = 0; k < n; ++k) step[k] = r[k] - lr * dr(Eigen::Index(k));
    r = project_to_simplex(step);
    std::tie(loss, grad) = eval(r);
    if (loss < out.loss) {
      out.loss = loss;
      out.preference = r;
    }
  }
  return out;
}

struct CeResult {
  CollaborationMatrix alpha;
  std::vector<ParamVector> personalized;
  std::vector<double> losses;
};

/// Row i is client i's optimal preference; the personalized model is HN(r_i*).
inline CeResult ce_alpha_matrix(const HyperNetwork& hn, std::span<const Dataset> splits, int steps, double lr) {
  require(splits.size() == hn.num_clients(), ErrorKind::InvalidInput, "one split per client required");
  CeResult out;
  std::vector<ProbVector> rows;
  for (const auto& s : splits) {
    auto sol = solve_preference(hn, s, steps, lr);
    out.personalized.push_back(hn_forward(hn, sol.preference));
    out.losses.push_back(sol.loss);
    rows.push_back(std::move(sol.preference));
  }
  out.alpha = CollaborationMatrix(std::move(rows));
  return out;
}

}  // namespace hetbench
