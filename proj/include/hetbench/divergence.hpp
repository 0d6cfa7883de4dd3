#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "hetbench/core_math.hpp"
#include "hetbench/data.hpp"
#include "hetbench/error.hpp"

namespace hetbench {

struct DiscreteDistribution {
  std::size_t support_size = 0;
  ProbVector probs;
};

enum class JsSpace { Label, Joint };

struct JsConfig {
  JsSpace space = JsSpace::Label;
  int feature_bins = 4;
  double q1 = 1.0;
  double q2 = 5.0;
  int solver_steps = 500;
  double solver_lr = 0.05;

  void validate() const {
    require(q1 > 0.0 && q2 > 0.0, ErrorKind::InvalidInput, "q1 and q2 must be positive");
    require(space != JsSpace::Joint || feature_bins >= 2, ErrorKind::InvalidInput, "joint space needs >= 2 bins");
    require(solver_steps >= 1 && solver_lr > 0.0, ErrorKind::InvalidInput, "solver needs steps >= 1 and lr > 0");
  }
};

inline DiscreteDistribution label_histogram(const Dataset& split, int num_classes) {
  require(!split.empty(), ErrorKind::InvalidInput, "histogram of an empty split");
  std::vector<double> p(std::size_t(num_classes), 0.0);
  for (int y : split.labels) p.at(std::size_t(y)) += 1.0;
  for (double& v : p) v /= double(split.size());
  return {p.size(), ProbVector(std::move(p))};
}

/// Range of the per-sample feature mean over a set of splits.
inline std::pair<double, double> feature_mean_range(std::span<const Dataset> splits) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : splits)
    for (Eigen::Index r = 0; r < s.features.rows(); ++r) {
      const double v = s.features.row(r).mean();
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return {lo, hi};
}

/// Histogram over (label, bin of the per-sample feature mean); cell = label * bins + bin.
inline DiscreteDistribution joint_histogram(const Dataset& split, int num_classes, int feature_bins, double lo,
                                            double hi) {
  require(!split.empty(), ErrorKind::InvalidInput, "histogram of an empty split");
  require(feature_bins >= 2, ErrorKind::InvalidInput, "joint histogram needs >= 2 bins");
  const std::size_t bins = std::size_t(feature_bins);
  std::vector<double> p(std::size_t(num_classes) * bins, 0.0);
  const double width = hi > lo ? (hi - lo) / double(bins) : 1.0;
  for (Eigen::Index r = 0; r < split.features.rows(); ++r) {
    const double v = split.features.row(r).mean();
    const auto raw = std::floor((v - lo) / width);
    const std::size_t b = std::size_t(std::clamp(raw, 0.0, double(bins - 1)));
    p[std::size_t(split.labels[std::size_t(r)]) * bins + b] += 1.0;
  }
  for (double& v : p) v /= double(split.size());
  return {p.size(), ProbVector(std::move(p))};
}

/// Natural-log KL divergence; terms with P(z) = 0 contribute nothing.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), ErrorKind::InvalidInput, "distributions differ in support size");
  double s = 0.0;
  for (std::size_t z = 0; z < p.size(); ++z) {
    if (p[z] <= 0.0) continue;
    require(q[z] > 0.0, ErrorKind::SupportError, "Q(z) = 0 where P(z) > 0");
    s += p[z] * std::log(p[z] / q[z]);
  }
  return std::max(s, 0.0);
}

inline double kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  return kl_divergence(p.probs.values(), q.probs.values());
}

inline double js_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), ErrorKind::InvalidInput, "distributions differ in support size");
  std::vector<double> m(p.size());
  for (std::size_t z = 0; z < p.size(); ++z) m[z] = 0.5 * (p[z] + q[z]);
  const double v = 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
  return std::clamp(v, 0.0, std::log(2.0));
}

inline double js_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  return js_divergence(p.probs.values(), q.probs.values());
}

/// q1 * sqrt(sum_j a_j^2 / m_j) + q2 * sum_j a_j * D_j
inline double weight_bound_objective(std::span<const double> alpha, std::span<const double> divergences,
                            std::span<const double> sample_counts, double q1, double q2) {
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    quad += alpha[j] * alpha[j] / sample_counts[j];
    lin += alpha[j] * divergences[j];
  }
  return q1 * std::sqrt(quad) + q2 * lin;
}

/// Minimizes the generalization bound over client `i`'s weight row by
/// projected gradient descent from the uniform point, with Nesterov
/// extrapolation between projections; returns the best iterate.
inline ProbVector solve_alpha_weights(std::size_t i, std::span<const double> divergences,
                                  std::span<const double> sample_counts, const JsConfig& cfg) {
  cfg.validate();
  const std::size_t n = divergences.size();
  require(n >= 1 && sample_counts.size() == n && i < n, ErrorKind::InvalidInput, "divergence/count size mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    require(std::isfinite(divergences[j]), ErrorKind::InvalidInput, "non-finite divergence");
    require(sample_counts[j] >= 1.0, ErrorKind::InvalidInput, "sample counts must be >= 1");
  }
  require(std::abs(divergences[i]) <= 1e-12, ErrorKind::InvalidInput, "self-divergence must be zero");

  ProbVector alpha = ProbVector::uniform(n);
  ProbVector best = alpha;
  double best_obj = weight_bound_objective(alpha.values(), divergences, sample_counts, cfg.q1, cfg.q2);
  std::vector<double> look(alpha.begin(), alpha.end());  // extrapolated point
  std::vector<double> step(n);
  double t = 1.0;
  for (int s = 0; s < cfg.solver_steps; ++s) {
    double quad = 0.0;
    for (std::size_t j = 0; j < n; ++j) quad += look[j] * look[j] / sample_counts[j];
    const double root = std::sqrt(quad);
    for (std::size_t j = 0; j < n; ++j) {
      const double g = (root > 0.0 ? cfg.q1 * (look[j] / sample_counts[j]) / root : 0.0) + cfg.q2 * divergences[j];
      step[j] = look[j] - cfg.solver_lr * g;
    }
    ProbVector next = project_to_simplex(step);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double w = (t - 1.0) / t_next;
    for (std::size_t j = 0; j < n; ++j) look[j] = next[j] + w * (next[j] - alpha[j]);
    t = t_next;
    alpha = std::move(next);
    const double obj = weight_bound_objective(alpha.values(), divergences, sample_counts, cfg.q1, cfg.q2);
    if (obj < best_obj) {
      best_obj = obj;
      best = alpha;
    } else if (obj > best_obj) {
      // Restart the momentum when the objective rises.
      t = 1.0;
      look.assign(alpha.begin(), alpha.end());
    }
  }
  return best;
}

/// Per-client distributions in the configured space.
inline std::vector<DiscreteDistribution> client_distributions(std::span<const Dataset> splits, int num_classes,
                                                              const JsConfig& cfg) {
  std::vector<DiscreteDistribution> out;
  out.reserve(splits.size());
  if (cfg.space == JsSpace::Label) {
    for (const auto& s : splits) out.push_back(label_histogram(s, num_classes));
    return out;
  }
  const auto [lo, hi] = feature_mean_range(splits);
  for (const auto& s : splits) out.push_back(joint_histogram(s, num_classes, cfg.feature_bins, lo, hi));
  return out;
}

inline std::vector<std::vector<double>> pairwise_js(std::span<const DiscreteDistribution> dists) {
  const std::size_t n = dists.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = js_divergence(dists[i], dists[j]);
  return d;
}

/// Collaboration matrix from precomputed client distributions and sample counts.
inline CollaborationMatrix pfedjs_alpha_from_distributions(std::span<const DiscreteDistribution> dists,
                                                           std::span<const double> sample_counts,
                                                           const JsConfig& cfg) {
  require(dists.size() >= 2, ErrorKind::InvalidInput, "need at least two clients");
  const auto d = pairwise_js(dists);
  std::vector<ProbVector> rows;
  rows.reserve(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) rows.push_back(solve_alpha_weights(i, d[i], sample_counts, cfg));
  return CollaborationMatrix(std::move(rows));
}

inline CollaborationMatrix pfedjs_alpha_matrix(std::span<const Dataset> splits, int num_classes, const JsConfig& cfg) {
  require(splits.size() >= 2, ErrorKind::InvalidInput, "need at least two clients");
  const auto dists = client_distributions(splits, num_classes, cfg);
  std::vector<double> m;
  for (const auto& s : splits) m.push_back(double(s.size()));
  return pfedjs_alpha_from_distributions(dists, m, cfg);
}

}  // namespace hetbench
