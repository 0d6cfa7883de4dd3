#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetbench/core_math.hpp"
#include "hetbench/data.hpp"
#include "hetbench/error.hpp"
#include "hetbench/rng.hpp"

namespace hetbench {

/// Symmetric pairwise C-divergence estimates in [0, 1] with a zero diagonal.
struct CDivMatrix {
  std::vector<std::vector<double>> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i][j]; }

  static CDivMatrix zeros(std::size_t n) { return {std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0))}; }
};

/// Client -> coalition id, with ids kept dense (0..K-1) in order of first appearance.
class CoalitionStructure {
 public:
  CoalitionStructure() = default;

  explicit CoalitionStructure(std::vector<int> assignment) : assignment_(std::move(assignment)) { normalize(); }

  static CoalitionStructure singletons(std::size_t n) {
    std::vector<int> a(n);
    std::iota(a.begin(), a.end(), 0);
    return CoalitionStructure(std::move(a));
  }

  std::size_t num_clients() const noexcept { return assignment_.size(); }
  std::size_t num_coalitions() const noexcept { return num_coalitions_; }
  int coalition_of(std::size_t client) const { return assignment_.at(client); }
  const std::vector<int>& assignment() const noexcept { return assignment_; }

  std::vector<std::vector<std::size_t>> coalitions() const {
    std::vector<std::vector<std::size_t>> out(num_coalitions_);
    for (std::size_t i = 0; i < assignment_.size(); ++i) out[std::size_t(assignment_[i])].push_back(i);
    return out;
  }

  friend bool operator==(const CoalitionStructure&, const CoalitionStructure&) = default;

 private:
  void normalize() {
    std::map<int, int> remap;
    for (int& c : assignment_) {
      require(c >= 0, ErrorKind::InvalidInput, "coalition ids must be non-negative");
      auto [it, inserted] = remap.try_emplace(c, int(remap.size()));
      c = it->second;
    }
    num_coalitions_ = remap.size();
  }

  std::vector<int> assignment_;
  std::size_t num_coalitions_ = 0;
};

struct ClassifierConfig {
  int steps = 300;
  double learning_rate = 0.05;
  int batch_size = 32;
  double holdout = 0.25;
};

namespace detail {

/// Strict weak order on datasets by content, used to make pair estimates order-free.
inline bool dataset_less(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  if (a.labels != b.labels) return a.labels < b.labels;
  if (a.features.cols() != b.features.cols()) return a.features.cols() < b.features.cols();
  for (Eigen::Index r = 0; r < a.features.rows(); ++r)
    for (Eigen::Index c = 0; c < a.features.cols(); ++c)
      if (a.features(r, c) != b.features(r, c)) return a.features(r, c) < b.features(r, c);
  return false;
}

inline Eigen::VectorXd augmented(const Dataset& ds, std::size_t row, int num_classes) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(ds.features.cols() + num_classes);
  z.head(ds.features.cols()) = ds.features.row(Eigen::Index(row)).transpose();
  z(ds.features.cols() + ds.labels[row]) = 1.0;
  return z;
}

}  // namespace detail

/// Estimates D = |Pr_i[f = 1] + Pr_j[f = 0] - 1| with a logistic-regression
/// discriminator over (features, one-hot label). Symmetric in its arguments.
inline double estimate_cdiv_pair(const Dataset& split_i, const Dataset& split_j, const ClassifierConfig& cfg,
                                 std::uint64_t seed) {
  require(!split_i.empty() && !split_j.empty(), ErrorKind::InvalidInput, "C-divergence of an empty split");
  require(split_i.dim() == split_j.dim(), ErrorKind::ShapeMismatch, "feature dims differ");
  const bool swap = detail::dataset_less(split_j, split_i);
  const Dataset& a = swap ? split_j : split_i;
  const Dataset& b = swap ? split_i : split_j;
  const int classes = std::max(a.num_classes, b.num_classes);

  Rng rng = make_rng(seed, {0xcd17});
  const std::size_t n = std::min(a.size(), b.size());
  auto draw = [&](const Dataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    return idx;
  };
  const auto ia = draw(a);
  const auto ib = draw(b);
  std::size_t n_hold = std::size_t(std::llround(cfg.holdout * double(n)));
  n_hold = std::clamp<std::size_t>(n_hold, 1, n);
  const std::size_t n_fit = n - n_hold;

  // Training pool of labelled source rows; falls back to the held-out rows for tiny splits.
  struct Sample {
    const Dataset* ds;
    std::size_t row;
    double target;
  };
  std::vector<Sample> fit;
  const std::size_t fit_begin = n_fit > 0 ? n_hold : 0;
  for (std::size_t k = fit_begin; k < n; ++k) {
    fit.push_back({&a, ia[k], 1.0});
    fit.push_back({&b, ib[k], 0.0});
  }

  const Eigen::Index dim = Eigen::Index(a.dim()) + classes;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  double bias = 0.0;
  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  const std::size_t batch = std::size_t(std::max(1, cfg.batch_size));
  for (int step = 0; step < cfg.steps; ++step) {
    Eigen::VectorXd gw = Eigen::VectorXd::Zero(dim);
    double gb = 0.0;
    std::size_t taken = 0;
    for (; taken < batch; ++taken) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const Sample& s = fit[order[cursor++]];
      const Eigen::VectorXd z = detail::augmented(*s.ds, s.row, classes);
      const double p = 1.0 / (1.0 + std::exp(-(w.dot(z) + bias)));
      gw += (p - s.target) * z;
      gb += p - s.target;
    }
    w -= cfg.learning_rate / double(taken) * gw;
    bias -= cfg.learning_rate / double(taken) * gb;
  }

  auto positive = [&](const Dataset& ds, std::size_t row) {
    return w.dot(detail::augmented(ds, row, classes)) + bias > 0.0;
  };
  double a_pos = 0.0, b_neg = 0.0;
  for (std::size_t k = 0; k < n_hold; ++k) {
    a_pos += positive(a, ia[k]) ? 1.0 : 0.0;
    b_neg += positive(b, ib[k]) ? 0.0 : 1.0;
  }
  const double d = std::abs(a_pos / double(n_hold) + b_neg / double(n_hold) - 1.0);
  return std::clamp(d, 0.0, 1.0);
}

/// All pairwise estimates; the pair (i, j) uses a seed derived from (min, max).
inline CDivMatrix estimate_cdiv_matrix(std::span<const Dataset> splits, const ClassifierConfig& cfg,
                                       std::uint64_t seed) {
  const std::size_t n = splits.size();
  CDivMatrix m = CDivMatrix::zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      m.values[i][j] = m.values[j][i] = estimate_cdiv_pair(splits[i], splits[j], cfg, derive_seed(seed, {i, j}));
  return m;
}

/// Sum over clients of the bound with proportional in-coalition weights:
/// q1 / sqrt(M_C) + q2 * sum_{j in C} (m_j / M_C) * D_ij.
inline double coalition_cost(const CoalitionStructure& structure, const CDivMatrix& cdiv,
                             std::span<const double> sample_counts, double q1, double q2,
                             bool weight_by_beta = false) {
  const std::size_t n = structure.num_clients();
  require(cdiv.size() == n && sample_counts.size() == n, ErrorKind::InvalidInput, "size mismatch in coalition cost");
  const auto groups = structure.coalitions();
  std::vector<double> mass(groups.size(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (auto j : groups[g]) mass[g] += sample_counts[j];
  const double total = std::accumulate(sample_counts.begin(), sample_counts.end(), 0.0);

  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = std::size_t(structure.coalition_of(i));
    double term = q1 / std::sqrt(mass[g]);
    for (auto j : groups[g]) term += q2 * (sample_counts[j] / mass[g]) * cdiv(i, j);
    cost += weight_by_beta ? (sample_counts[i] / total) * term : term;
  }
  return cost;
}

/// Greedy single-client moves from the all-singleton structure until no move
/// lowers the cost. Ties: lowest client index, then lowest target id (a fresh
/// coalition counts as id K).
inline CoalitionStructure optimize_coalitions(const CDivMatrix& cdiv, std::span<const double> sample_counts, double q1,
                                              double q2, std::uint64_t /*seed*/ = 0, bool weight_by_beta = false) {
  const std::size_t n = cdiv.size();
  require(n >= 2, ErrorKind::InvalidInput, "need at least two clients");
  CoalitionStructure current = CoalitionStructure::singletons(n);
  double current_cost = coalition_cost(current, cdiv, sample_counts, q1, q2, weight_by_beta);
  constexpr double kMinGain = 1e-12;

  for (;;) {
    double best_cost = current_cost;
    std::vector<int> best_assignment;
    const auto groups = current.coalitions();
    const int k = int(current.num_coalitions());
    for (std::size_t i = 0; i < n; ++i) {
      const int home = current.coalition_of(i);
      const bool alone = groups[std::size_t(home)].size() == 1;
      for (int target = 0; target <= k; ++target) {
        if (target == home || (target == k && alone)) continue;
        std::vector<int> moved = current.assignment();
        moved[i] = target;
        const double c = coalition_cost(CoalitionStructure(moved), cdiv, sample_counts, q1, q2, weight_by_beta);
        if (c < best_cost - kMinGain) {
          best_cost = c;
          best_assignment = std::move(moved);
        }
      }
    }
    if (best_assignment.empty()) return current;
    current = CoalitionStructure(std::move(best_assignment));
    current_cost = best_cost;
  }
}

/// alpha_ij = m_j / sum_{l in C(i)} m_l for j in C(i), else 0.
inline CollaborationMatrix coalitions_to_alpha(const CoalitionStructure& structure,
                                               std::span<const double> sample_counts) {
  const std::size_t n = structure.num_clients();
  require(sample_counts.size() == n, ErrorKind::InvalidInput, "size mismatch");
  const auto groups = structure.coalitions();
  std::vector<ProbVector> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = groups[std::size_t(structure.coalition_of(i))];
    double mass = 0.0;
    for (auto j : g) mass += sample_counts[j];
    std::vector<double> row(n, 0.0);
    for (auto j : g) row[j] = sample_counts[j] / mass;
    rows.push_back(ProbVector(std::move(row)));
  }
  return CollaborationMatrix(std::move(rows));
}

}  // namespace hetbench
