#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hetbench/divergence.hpp"
#include "oracles.hpp"

using namespace hetbench;

namespace {

Dataset labelled(std::vector<int> labels, int classes, int dim = 2) {
  Dataset ds;
  ds.num_classes = classes;
  ds.labels = std::move(labels);
  ds.features = Eigen::MatrixXd::Zero(Eigen::Index(ds.labels.size()), dim);
  return ds;
}

double obj(const std::vector<double>& a, const std::vector<double>& d, const std::vector<double>& m, const JsConfig& c) {
  return oracle::bound(a, d, m, c.q1, c.q2);
}

}  // namespace

TEST(LabelHistogram, Examples) {
  const auto h = label_histogram(labelled({0, 0, 1}, 2), 2);
  EXPECT_EQ(h.support_size, 2u);
  EXPECT_NEAR(h.probs[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(h.probs[1], 1.0 / 3.0, 1e-15);
  const auto one = label_histogram(labelled({4, 4, 4}, 5), 5);
  EXPECT_EQ(one.probs.vec(), (std::vector<double>{0, 0, 0, 0, 1}));
  EXPECT_THROW(label_histogram(labelled({}, 3), 3), Error);
}

TEST(JointHistogram, SupportAndDeterminism) {
  const auto a = generate_synthetic(4, 3, 20, 1.0, 1);
  const std::vector<Dataset> both{a, a};
  const auto [lo, hi] = feature_mean_range(both);
  const auto h1 = joint_histogram(a, 4, 5, lo, hi);
  const auto h2 = joint_histogram(a, 4, 5, lo, hi);
  EXPECT_EQ(h1.support_size, 20u);
  EXPECT_EQ(h1.probs, h2.probs);
  EXPECT_THROW(joint_histogram(a, 4, 1, lo, hi), Error);
}

TEST(JointHistogram, SeesNoiseThatLabelsMiss) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ds = generate_synthetic(10, 16, 200, 1.0, seed);
    auto spec = *parse_partition("gau5");
    spec.num_clients = 2;
    spec.seed = seed;
    const auto parts = partition(ds, spec);
    JsConfig label_cfg, joint_cfg;
    joint_cfg.space = JsSpace::Joint;
    const auto dl = client_distributions(parts.clients, 10, label_cfg);
    const auto dj = client_distributions(parts.clients, 10, joint_cfg);
    EXPECT_GT(js_divergence(dj[0], dj[1]), js_divergence(dl[0], dl[1])) << "seed " << seed;
  }
}

TEST(Kl, Examples) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_NEAR(kl_divergence(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-12);
  try {
    kl_divergence(std::vector<double>{1, 0}, std::vector<double>{0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SupportError);
  }
}

TEST(Js, Examples) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_EQ(js_divergence(p, p), 0.0);
  const std::vector<double> a{1, 0}, b{0.5, 0.5};
  EXPECT_NEAR(js_divergence(a, b), 0.215762, 1e-6);
  EXPECT_NEAR(js_divergence(a, b), oracle::jsd(a, b), 1e-15);
  EXPECT_NEAR(js_divergence(std::vector<double>{1, 0}, std::vector<double>{0, 1}), std::log(2.0), 1e-12);
  EXPECT_THROW(js_divergence(std::vector<double>{1}, std::vector<double>{0.5, 0.5}), Error);
}

TEST(Js, SymmetricBoundedAndMatchesDefinition) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> n(2, 12);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = std::size_t(n(rng));
    const auto p = oracle::random_simplex(rng, k), q = oracle::random_simplex(rng, k);
    const double pq = js_divergence(p, q), qp = js_divergence(q, p);
    EXPECT_LT(std::abs(pq - qp), 1e-12);
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, std::log(2.0) + 1e-12);
    EXPECT_NEAR(pq, oracle::jsd(p, q), 1e-12);
  }
}

TEST(SolveAlpha, SymmetricInstanceIsUniform) {
  const JsConfig cfg;
  const auto a = solve_alpha_weights(0, std::vector<double>{0, 0, 0}, std::vector<double>{50, 50, 50}, cfg);
  for (double v : a) EXPECT_NEAR(v, 1.0 / 3.0, 1e-6);
}

TEST(SolveAlpha, LargeDivergenceCollapsesToSelf) {
  JsConfig cfg;
  cfg.q1 = cfg.q2 = 1.0;
  const std::vector<double> d{0, 10}, m{100, 100};
  const auto a = solve_alpha_weights(0, d, m, cfg);
  double best = 1e300, best_x = -1;
  for (int k = 0; k <= 100; ++k) {
    const std::vector<double> x{k * 0.01, 1 - k * 0.01};
    const double v = obj(x, d, m, cfg);
    if (v < best) best = v, best_x = x[0];
  }
  EXPECT_NEAR(a[0], best_x, 0.02);
  EXPECT_NEAR(a[0], 1.0, 0.02);
}

TEST(SolveAlpha, BeatsGridOracleOnRandomInstances) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> du(0.0, std::log(2.0));
  std::uniform_int_distribution<int> mu(10, 1000);
  const JsConfig cfg;
  for (int t = 0; t < 100; ++t) {
    const std::size_t self = std::size_t(t % 3);
    std::vector<double> d(3), m(3);
    for (std::size_t j = 0; j < 3; ++j) {
      d[j] = j == self ? 0.0 : du(rng);
      m[j] = mu(rng);
    }
    const auto a = solve_alpha_weights(self, d, m, cfg);
    const double got = obj(a.vec(), d, m, cfg);
    const auto grid = oracle::grid_min3([&](const std::vector<double>& x) { return obj(x, d, m, cfg); }, 0.05);
    EXPECT_LE(got, grid.value + 1e-3) << "instance " << t;
    EXPECT_LE(got, obj(std::vector<double>(3, 1.0 / 3.0), d, m, cfg) + 1e-12);
  }
}

TEST(SolveAlpha, MonotoneInOwnDivergence) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> du(0.05, 0.6);
  const JsConfig cfg;
  for (int t = 0; t < 30; ++t) {
    std::vector<double> d{0, du(rng), du(rng)}, m{200, 300, 400};
    const double before = solve_alpha_weights(0, d, m, cfg)[1];
    d[1] += 0.1;
    const double after = solve_alpha_weights(0, d, m, cfg)[1];
    EXPECT_LE(after, before + 0.05);
  }
}

TEST(SolveAlpha, SelfPreference) {
  const JsConfig cfg;
  for (double dv : {0.01, 0.1, 0.5}) {
    const auto a = solve_alpha_weights(2, std::vector<double>{dv, dv, 0, dv}, std::vector<double>(4, 100), cfg);
    EXPECT_EQ(a.argmax(), 2u);
    for (std::size_t j = 0; j < 4; ++j)
      if (j != 2) EXPECT_LT(a[j], a[2]);
  }
}

TEST(SolveAlpha, RejectsBadInput) {
  const JsConfig cfg;
  EXPECT_THROW(solve_alpha_weights(0, std::vector<double>{0, NAN}, std::vector<double>{1, 1}, cfg), Error);
  EXPECT_THROW(solve_alpha_weights(0, std::vector<double>{0.1, 0}, std::vector<double>{1, 1}, cfg), Error);
  EXPECT_THROW(solve_alpha_weights(0, std::vector<double>{0, 0}, std::vector<double>{0, 1}, cfg), Error);
}

TEST(PfedjsMatrix, IdenticalClientsAreUniform) {
  const auto ds = generate_synthetic(5, 4, 20, 1.0, 1);
  const std::vector<Dataset> splits(4, ds);
  const auto alpha = pfedjs_alpha_matrix(splits, 5, JsConfig{});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(alpha(i, j), 0.25, 1e-4);
}

TEST(PfedjsMatrix, DisjointLabelsConcentrateOnSelf) {
  // one distinct label per client, unequal sizes
  std::vector<Dataset> splits;
  for (int c = 0; c < 10; ++c) splits.push_back(oracle::blobs({c}, 10, 16, 40 + 7 * c, 1.0, std::uint64_t(c)));
  const auto d = pairwise_js(client_distributions(splits, 10, JsConfig{}));
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j) {
      EXPECT_EQ(d[i][j], d[j][i]);
      EXPECT_NEAR(d[i][j], i == j ? 0.0 : std::log(2.0), 1e-12);
    }
  const auto alpha = pfedjs_alpha_matrix(splits, 10, JsConfig{});
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) s += alpha(i, j);
    EXPECT_NEAR(s, 1.0, 1e-9);
    EXPECT_EQ(alpha.row(i).argmax(), i);
  }
}
