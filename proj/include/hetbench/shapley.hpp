#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "hetbench/core_math.hpp"
#include "hetbench/data.hpp"
#include "hetbench/error.hpp"
#include "hetbench/model.hpp"

namespace hetbench {

inline constexpr std::size_t kMaxShapleyPlayers = 10;

/// Row i is client i's relevance vector over all clients (EMA of observed SVs).
struct RelevanceState {
  std::vector<std::vector<double>> phi;
  double eta = 0.5;
  std::size_t top_k = 3;

  static RelevanceState uniform(std::size_t n, double eta, std::size_t top_k) {
    require(eta >= 0.0 && eta <= 1.0, ErrorKind::InvalidInput, "eta must lie in [0, 1]");
    return {std::vector<std::vector<double>>(n, std::vector<double>(n, 1.0 / double(n))), eta, top_k};
  }
};

struct SvResult {
  std::vector<std::size_t> coalition;
  std::vector<double> values;
  double empty_utility = 0.0;
  double full_utility = 0.0;

  /// |sum(values) - (V(full) - V(empty))|
  double efficiency_residual() const {
    const double s = std::accumulate(values.begin(), values.end(), 0.0);
    return std::abs(s - (full_utility - empty_utility));
  }
};

/// Utility of a set of client models for a client: accuracy of the
/// parameter-mean of the set, or of the client's own model for the empty set.
inline double sv_utility(std::span<const std::size_t> members, std::span<const ParamVector> models,
                         const ParamVector& own_model, const Dataset& validation) {
  require(!validation.empty(), ErrorKind::InvalidInput, "utility needs a non-empty validation split");
  if (members.empty()) return evaluate(MlpModel::from_params(own_model), validation).accuracy;
  std::vector<double> mean(own_model.size(), 0.0);
  for (auto j : members) {
    const auto& w = models[j].flat;
    require(w.size() == mean.size(), ErrorKind::ShapeMismatch, "model sizes differ");
    for (std::size_t p = 0; p < mean.size(); ++p) mean[p] += w[p];
  }
  for (double& v : mean) v /= double(members.size());
  return evaluate(MlpModel::from_params(mean, own_model.shapes), validation).accuracy;
}

using UtilityFn = std::function<double(std::span<const std::size_t>)>;

/// Exact Shapley values of the coalition members by subset enumeration
/// (2^|S| utility calls, each subset evaluated once).
inline SvResult exact_shapley(std::span<const std::size_t> coalition, const UtilityFn& utility) {
  const std::size_t n = coalition.size();
  require(n <= kMaxShapleyPlayers, ErrorKind::CoalitionTooLarge,
          "coalition of " + std::to_string(n) + " exceeds " + std::to_string(kMaxShapleyPlayers));
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> v(subsets);
  std::vector<std::size_t> members;
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    members.clear();
    for (std::size_t b = 0; b < n; ++b)
      if (mask & (std::size_t{1} << b)) members.push_back(coalition[b]);
    v[mask] = utility(members);
  }

  // weight(s) = s! (n - s - 1)! / n!
  std::vector<double> weight(n == 0 ? 1 : n);
  for (std::size_t s = 0; s < n; ++s) {
    double w = 1.0 / double(n);
    // 1 / (n * C(n-1, s))
    for (std::size_t k = 1; k <= s; ++k) w *= double(k) / double(n - k);
    weight[s] = w;
  }

  SvResult out;
  out.coalition.assign(coalition.begin(), coalition.end());
  out.values.assign(n, 0.0);
  out.empty_utility = v[0];
  out.full_utility = v[subsets - 1];
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      acc += weight[std::size_t(std::popcount(mask))] * (v[mask | bit] - v[mask]);
    }
    out.values[j] = acc;
  }
  return out;
}

/// phi[i][j] <- eta * phi[i][j] + (1 - eta) * sv_j for coalition members only.
inline void update_relevance(RelevanceState& state, std::size_t i, const SvResult& sv) {
  require(i < state.phi.size(), ErrorKind::InvalidInput, "client out of range");
  for (std::size_t k = 0; k < sv.coalition.size(); ++k) {
    const std::size_t j = sv.coalition[k];
    require(j < state.phi[i].size(), ErrorKind::InvalidInput, "coalition member out of range");
    state.phi[i][j] = state.eta * state.phi[i][j] + (1.0 - state.eta) * sv.values[k];
  }
}

/// raw_j = max(sv_j, 0) / max(||w_i - w_j||, 1e-9); self keeps `self_weight`,
/// the rest of the mass is split proportionally to raw. All-zero raw gives a
/// one-hot self row.
inline ProbVector alpha_row_from_sv(std::size_t i, const SvResult& sv, std::span<const ParamVector> models,
                                    double self_weight) {
  require(self_weight >= 0.0 && self_weight < 1.0, ErrorKind::InvalidInput, "self weight must lie in [0, 1)");
  const std::size_t n = models.size();
  std::vector<double> raw(n, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < sv.coalition.size(); ++k) {
    const std::size_t j = sv.coalition[k];
    require(j != i, ErrorKind::InvalidInput, "coalition must exclude the client itself");
    const double dist = std::max(euclidean_distance(models[i].view(), models[j].view()), 1e-9);
    raw[j] = std::max(sv.values[k], 0.0) / dist;
    total += raw[j];
  }
  if (!(total > 0.0)) return ProbVector::one_hot(n, i);
  std::vector<double> row(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) row[j] = (1.0 - self_weight) * raw[j] / total;
  row[i] += self_weight;
  return ProbVector(std::move(row));
}

/// Top-k other clients by relevance (ties to the lower index).
inline std::vector<std::size_t> top_k_peers(const std::vector<double>& relevance, std::size_t self, std::size_t k) {
  std::vector<std::size_t> peers;
  for (std::size_t j = 0; j < relevance.size(); ++j)
    if (j != self) peers.push_back(j);
  std::stable_sort(peers.begin(), peers.end(), [&](std::size_t a, std::size_t b) { return relevance[a] > relevance[b]; });
  peers.resize(std::min(k, peers.size()));
  return peers;
}

struct SvRoundResult {
  CollaborationMatrix alpha;
  std::vector<SvResult> shapley;       // one per client
  std::size_t model_downloads = 0;     // total peer models fetched this round
  double max_efficiency_residual = 0.0;
};

/// One pFedSV round over a snapshot of client models. Each client scores its
/// top-K coalition by exact Shapley values, then updates its relevance row.
inline SvRoundResult pfedsv_round(RelevanceState& state, std::span<const ParamVector> models,
                                  std::span<const Dataset> validation, double self_weight) {
  const std::size_t n = models.size();
  require(n >= 2 && validation.size() == n && state.phi.size() == n, ErrorKind::InvalidInput,
          "pFedSV round size mismatch");
  require(state.top_k <= n - 1, ErrorKind::InvalidInput, "top-K must be <= N - 1");
  SvRoundResult out;
  std::vector<ProbVector> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto coalition = top_k_peers(state.phi[i], i, state.top_k);
    UtilityFn u = [&](std::span<const std::size_t> members) {
      return sv_utility(members, models, models[i], validation[i]);
    };
    SvResult sv = exact_shapley(coalition, u);
    update_relevance(state, i, sv);
    rows.push_back(alpha_row_from_sv(i, sv, models, self_weight));
    out.model_downloads += coalition.size();
    out.max_efficiency_residual = std::max(out.max_efficiency_residual, sv.efficiency_residual());
    out.shapley.push_back(std::move(sv));
  }
  out.alpha = CollaborationMatrix(std::move(rows));
  return out;
}

}  // namespace hetbench
