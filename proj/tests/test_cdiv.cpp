#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hetbench/cdiv.hpp"
#include "oracles.hpp"

using namespace hetbench;

namespace {

CDivMatrix random_cdiv(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto d = CDivMatrix::zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.values[i][j] = d.values[j][i] = u(rng);
  return d;
}

std::vector<int> as_int(const std::vector<std::size_t>& a) { return std::vector<int>(a.begin(), a.end()); }

}  // namespace

TEST(CdivPair, CopyIsNearZero) {
  const auto a = oracle::blobs({0, 1, 2, 3}, 4, 6, 500, 1.0, 1);
  EXPECT_LE(estimate_cdiv_pair(a, a, ClassifierConfig{}, 3), 0.15);
}

TEST(CdivPair, DisjointSeparableLabelsNearOne) {
  const auto a = oracle::blobs({0}, 2, 6, 100, 0.5, 1);
  const auto b = oracle::blobs({1}, 2, 6, 100, 0.5, 2);
  EXPECT_GE(estimate_cdiv_pair(a, b, ClassifierConfig{}, 3), 0.85);
}

TEST(CdivPair, SymmetricUnderSharedSeed) {
  const auto a = oracle::blobs({0, 1}, 3, 4, 40, 1.5, 1);
  const auto b = oracle::blobs({1, 2}, 3, 4, 30, 1.5, 2);
  for (std::uint64_t s : {1, 2, 3}) {
    const double ab = estimate_cdiv_pair(a, b, ClassifierConfig{}, s);
    EXPECT_EQ(ab, estimate_cdiv_pair(b, a, ClassifierConfig{}, s));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
  Dataset empty;
  empty.num_classes = 3;
  empty.features.resize(0, 4);
  EXPECT_THROW(estimate_cdiv_pair(a, empty, ClassifierConfig{}, 1), Error);
}

TEST(CdivMatrix, SymmetricZeroDiagonal) {
  const std::vector<Dataset> splits{oracle::blobs({0}, 3, 4, 30, 1.0, 1), oracle::blobs({1}, 3, 4, 30, 1.0, 2),
                                    oracle::blobs({0, 2}, 3, 4, 15, 1.0, 3)};
  const auto m = estimate_cdiv_matrix(splits, ClassifierConfig{}, 5);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(m(i, i), 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(m(i, j), m(j, i));
      EXPECT_GE(m(i, j), 0.0);
      EXPECT_LE(m(i, j), 1.0);
    }
  }
}

TEST(CoalitionCost, SingletonsAndMergingIdenticalClients) {
  std::mt19937_64 rng(1);
  const auto d = random_cdiv(rng, 4);
  const std::vector<double> m{10, 40, 90, 160};
  EXPECT_NEAR(coalition_cost(CoalitionStructure::singletons(4), d, m, 1.0, 5.0),
              1 / std::sqrt(10.0) + 1 / std::sqrt(40.0) + 1 / std::sqrt(90.0) + 1 / std::sqrt(160.0), 1e-12);

  const auto z = CDivMatrix::zeros(2);
  const std::vector<double> m2{100, 100};
  const double grand = coalition_cost(CoalitionStructure({0, 0}), z, m2, 1.0, 5.0);
  const double single = coalition_cost(CoalitionStructure::singletons(2), z, m2, 1.0, 5.0);
  EXPECT_NEAR(grand, 2 / std::sqrt(200.0), 1e-12);
  EXPECT_NEAR(single, 2 / std::sqrt(100.0), 1e-12);
  EXPECT_LT(grand, single);
}

TEST(CoalitionCost, MatchesOracleAndRelabelingInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> mu(10, 1000);
  for (int t = 0; t < 20; ++t) {
    const auto d = random_cdiv(rng, 4);
    std::vector<double> m(4);
    for (auto& v : m) v = mu(rng);
    for (const auto& part : oracle::all_partitions(4)) {
      const double ours = coalition_cost(CoalitionStructure(as_int(part)), d, m, 1.0, 2.0);
      EXPECT_NEAR(ours, oracle::partition_cost(part, d.values, m, 1.0, 2.0), 1e-12);
      std::vector<int> relabeled;
      for (auto c : part) relabeled.push_back(7 - int(c));
      EXPECT_EQ(coalition_cost(CoalitionStructure(relabeled), d, m, 1.0, 2.0), ours);
    }
  }
}

TEST(CoalitionCost, LargeDivergencePrefersSingletons) {
  auto d = CDivMatrix::zeros(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) d.values[i][j] = i == j ? 0.0 : 1.0;
  const std::vector<double> m{100, 100, 100, 100};
  const auto parts = oracle::all_partitions(4);
  ASSERT_EQ(parts.size(), 15u);
  std::size_t best = 0;
  for (std::size_t k = 1; k < parts.size(); ++k)
    if (oracle::partition_cost(parts[k], d.values, m, 1.0, 100.0) <
        oracle::partition_cost(parts[best], d.values, m, 1.0, 100.0))
      best = k;
  EXPECT_EQ(CoalitionStructure(as_int(parts[best])), CoalitionStructure::singletons(4));
  EXPECT_EQ(optimize_coalitions(d, m, 1.0, 100.0), CoalitionStructure::singletons(4));
}

TEST(OptimizeCoalitions, MatchesEnumerationMostOfTheTime) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> mu(10, 1000);
  std::uniform_real_distribution<double> lq(std::log(0.01), 0.0);
  int matched = 0;
  for (int t = 0; t < 100; ++t) {
    const auto d = random_cdiv(rng, 4);
    std::vector<double> m(4);
    for (auto& v : m) v = mu(rng);
    const double q2 = std::exp(lq(rng));
    double opt = 1e300;
    for (const auto& p : oracle::all_partitions(4)) opt = std::min(opt, oracle::partition_cost(p, d.values, m, 1.0, q2));
    const auto s = optimize_coalitions(d, m, 1.0, q2);
    const double got = coalition_cost(s, d, m, 1.0, q2);
    EXPECT_LE(got, coalition_cost(CoalitionStructure::singletons(4), d, m, 1.0, q2));
    matched += got <= opt + 1e-12;
  }
  EXPECT_GE(matched, 80);
}

TEST(OptimizeCoalitions, RecoversPlantedClusters) {
  auto d = CDivMatrix::zeros(6);
  const std::vector<std::size_t> cluster{0, 1, 0, 1, 0, 1};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) d.values[i][j] = cluster[i] == cluster[j] ? 0.0 : 1.0;
  const std::vector<double> m(6, 100);
  std::vector<std::size_t> best;
  double best_cost = 1e300;
  for (const auto& p : oracle::all_partitions(6)) {
    const double c = oracle::partition_cost(p, d.values, m, 1.0, 20.0);
    if (c < best_cost) best_cost = c, best = p;
  }
  EXPECT_EQ(best, cluster);
  const auto s = optimize_coalitions(d, m, 1.0, 20.0, 1);
  EXPECT_EQ(s, CoalitionStructure(as_int(cluster)));
  EXPECT_EQ(s, optimize_coalitions(d, m, 1.0, 20.0, 1));
}

TEST(CoalitionsToAlpha, ProportionalRows) {
  const CoalitionStructure s({0, 0, 1});
  const auto a = coalitions_to_alpha(s, std::vector<double>{100, 300, 50});
  EXPECT_EQ(a.row(0).vec(), (std::vector<double>{0.25, 0.75, 0}));
  EXPECT_EQ(a.row(1).vec(), a.row(0).vec());
  EXPECT_EQ(a.row(2).vec(), (std::vector<double>{0, 0, 1}));
}

TEST(CoalitionStructure, DenseIdsAndValidation) {
  const CoalitionStructure s({5, 2, 5, 9});
  EXPECT_EQ(s.assignment(), (std::vector<int>{0, 1, 0, 2}));
  EXPECT_EQ(s.num_coalitions(), 3u);
  EXPECT_THROW(CoalitionStructure({0, -1}), Error);
}
