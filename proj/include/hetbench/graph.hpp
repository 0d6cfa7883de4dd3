#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hetbench/core_math.hpp"
#include "hetbench/data.hpp"
#include "hetbench/error.hpp"
#include "hetbench/model.hpp"
#include "hetbench/rng.hpp"

namespace hetbench {

struct GraphConfig {
  double lambda = 0.3;
  int inner_steps = 50;
  double inner_lr = 0.1;
  int loss_batch = 64;

  void validate() const {
    require(lambda >= 0.0, ErrorKind::InvalidInput, "lambda must be >= 0");
    require(inner_steps >= 1 && inner_lr > 0.0, ErrorKind::InvalidInput, "inner loop needs steps >= 1 and lr > 0");
    require(loss_batch >= 1, ErrorKind::InvalidInput, "loss batch must be >= 1");
  }
};

/// Loss and gradient of a client's empirical risk at a flat parameter point.
using LossOracle = std::function<std::pair<double, std::vector<double>>(std::span<const double>)>;

/// Cross-entropy oracle over a fixed batch for models with the given layout.
inline LossOracle make_mlp_loss_oracle(std::vector<LayerShape> shapes, Dataset batch) {
  return [shapes = std::move(shapes), batch = std::move(batch)](std::span<const double> w) {
    auto [loss, grad] = loss_and_grad(MlpModel::from_params(w, shapes), batch);
    return std::make_pair(loss, std::move(grad.flat));
  };
}

/// Seeded fixed subsample of at most `size` rows.
inline Dataset fixed_batch(const Dataset& split, int size, std::uint64_t seed) {
  std::vector<std::size_t> idx(split.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed, {0xba7c});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(idx.size(), std::size_t(size)));
  std::sort(idx.begin(), idx.end());
  return subset(split, idx);
}

namespace detail {

inline std::vector<double> mix(std::span<const double> alpha, std::span<const ParamVector> models) {
  std::vector<double> w(models.front().size(), 0.0);
  for (std::size_t j = 0; j < models.size(); ++j) {
    if (alpha[j] == 0.0) continue;
    const auto& f = models[j].flat;
    for (std::size_t p = 0; p < w.size(); ++p) w[p] += alpha[j] * f[p];
  }
  return w;
}

inline std::vector<double> cosines_to(std::size_t i, std::span<const ParamVector> models) {
  std::vector<double> c(models.size());
  for (std::size_t j = 0; j < models.size(); ++j) c[j] = cosine_similarity(models[i].view(), models[j].view());
  return c;
}

}  // namespace detail

/// L_i(sum_j a_j w_j) - (lambda / 2) * sum_j a_j cos(w_i, w_j)
inline double objective_row(std::size_t i, std::span<const double> alpha, std::span<const ParamVector> models,
                            const LossOracle& loss, double lambda) {
  require(alpha.size() == models.size() && i < models.size(), ErrorKind::InvalidInput, "alpha/model size mismatch");
  const auto w = detail::mix(alpha, models);
  const auto cos = detail::cosines_to(i, models);
  double reg = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) reg += alpha[j] * cos[j];
  return loss(w).first - 0.5 * lambda * reg;
}

/// d objective / d a_j = <grad L_i(w_bar), w_j> - (lambda / 2) cos(w_i, w_j)
inline std::pair<double, std::vector<double>> objective_row_and_grad(std::size_t i, std::span<const double> alpha,
                                                                     std::span<const ParamVector> models,
                                                                     const LossOracle& loss, double lambda) {
  const auto w = detail::mix(alpha, models);
  const auto cos = detail::cosines_to(i, models);
  auto [l, g] = loss(w);
  double reg = 0.0;
  std::vector<double> grad(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    reg += alpha[j] * cos[j];
    grad[j] = dot(g, models[j].view()) - 0.5 * lambda * cos[j];
  }
  return {l - 0.5 * lambda * reg, std::move(grad)};
}

/// Projected gradient descent over client i's row; returns the best iterate
/// (never worse than `init`).
inline ProbVector optimize_alpha_row(std::size_t i, std::span<const ParamVector> models, const LossOracle& loss,
                                     const GraphConfig& cfg, const ProbVector& init) {
  cfg.validate();
  require(init.size() == models.size(), ErrorKind::InvalidInput, "init row size mismatch");
  ProbVector alpha = init;
  auto [obj, grad] = objective_row_and_grad(i, alpha.values(), models, loss, cfg.lambda);
  ProbVector best = alpha;
  double best_obj = obj;
  std::vector<double> step(models.size());
  for (int s = 0; s < cfg.inner_steps; ++s) {
    for (std::size_t j = 0; j < step.size(); ++j) {
      if (!std::isfinite(grad[j])) throw Error(ErrorKind::NumericalError, "non-finite alpha gradient");
      step[j] = alpha[j] - cfg.inner_lr * grad[j];
    }
    alpha = project_to_simplex(step);
    std::tie(obj, grad) = objective_row_and_grad(i, alpha.values(), models, loss, cfg.lambda);
    if (obj < best_obj) {
      best_obj = obj;
      best = alpha;
    }
  }
  return best;
}

/// Optimizes every row against the same model snapshot, warm-started from
/// `previous` when given.
inline CollaborationMatrix pfedgraph_round(std::span<const ParamVector> models, std::span<const Dataset> batches,
                                           const GraphConfig& cfg,
                                           const std::optional<CollaborationMatrix>& previous = std::nullopt) {
  const std::size_t n = models.size();
  require(n >= 2 && batches.size() == n, ErrorKind::InvalidInput, "pFedGraph round size mismatch");
  std::vector<ProbVector> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LossOracle loss = make_mlp_loss_oracle(models[i].shapes, batches[i]);
    const ProbVector init = previous ? previous->row(i) : ProbVector::uniform(n);
    rows.push_back(optimize_alpha_row(i, models, loss, cfg, init));
  }
  return CollaborationMatrix(std::move(rows));
}

}  // namespace hetbench
