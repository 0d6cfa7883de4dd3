#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "hetbench/data.hpp"
#include "hetbench/model.hpp"

using namespace hetbench;

namespace {

Dataset balanced(int per_class = 100, std::uint64_t seed = 7) { return generate_synthetic(10, 16, per_class, 1.0, seed); }

/// Disjointness, containment and (optionally) exact cover.
void expect_partition(const PartitionAssignment& pa, std::size_t m, bool exact_cover) {
  std::vector<int> seen(m, 0);
  for (const auto& c : pa.client_indices) {
    EXPECT_FALSE(c.empty());
    for (auto i : c) {
      ASSERT_LT(i, m);
      ++seen[i];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    EXPECT_LE(seen[i], 1) << "index " << i << " assigned twice";
    if (exact_cover) EXPECT_EQ(seen[i], 1) << "index " << i << " unassigned";
  }
}

std::vector<double> label_hist(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<double> h(std::size_t(ds.num_classes), 0.0);
  for (auto i : idx) h[std::size_t(ds.labels[i])] += 1.0;
  for (auto& v : h) v /= double(idx.size());
  return h;
}

void put_be32(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

struct IdxFiles {
  std::string images, labels;
};

IdxFiles write_idx(const std::string& tag, std::uint32_t image_magic, std::uint32_t n_images, std::uint32_t n_labels,
                   std::size_t truncate_pixels = 0) {
  const auto dir = std::filesystem::temp_directory_path() / "hetbench_idx_test";
  std::filesystem::create_directories(dir);
  IdxFiles out{(dir / (tag + "-images")).string(), (dir / (tag + "-labels")).string()};
  std::ofstream im(out.images, std::ios::binary);
  put_be32(im, image_magic);
  put_be32(im, n_images);
  put_be32(im, 2);
  put_be32(im, 3);
  const std::size_t pixels = std::size_t(n_images) * 6 - truncate_pixels;
  for (std::size_t p = 0; p < pixels; ++p) im.put(static_cast<char>(p % 256));
  std::ofstream lb(out.labels, std::ios::binary);
  put_be32(lb, 0x00000801);
  put_be32(lb, n_labels);
  for (std::uint32_t i = 0; i < n_labels; ++i) lb.put(static_cast<char>(i % 3));
  return out;
}

}  // namespace

TEST(Synthetic, CountsAndLabels) {
  const auto ds = generate_synthetic(10, 16, 100, 1.0, 7);
  EXPECT_EQ(ds.size(), 1000u);
  EXPECT_EQ(ds.dim(), 16u);
  const auto counts = label_counts(ds);
  for (auto c : counts) EXPECT_EQ(c, 100u);
}

TEST(Synthetic, DeterministicForSeed) {
  const auto a = generate_synthetic(10, 16, 50, 1.0, 3);
  const auto b = generate_synthetic(10, 16, 50, 1.0, 3);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.features, generate_synthetic(10, 16, 50, 1.0, 4).features);
}

TEST(Synthetic, DistinctMeansAndMoreClassesThanDims) {
  std::set<std::vector<double>> means;
  for (int c = 0; c < 40; ++c) {
    const auto m = synthetic_class_mean(c, 16);
    means.insert(std::vector<double>(m.data(), m.data() + m.size()));
  }
  EXPECT_EQ(means.size(), 40u);
}

TEST(Synthetic, ZeroSpreadIsLinearlySeparable) {
  const auto ds = generate_synthetic(10, 16, 20, 0.0, 1);
  MlpModel lin = init_mlp(16, {}, 10, 1);  // softmax regression
  for (auto& l : lin.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  SgdState sgd{0.1, 0.0, {}};
  for (int s = 0; s < 200; ++s) {
    auto [loss, g] = loss_and_grad(lin, ds);
    sgd.step(lin, unflatten(g));
  }
  EXPECT_EQ(evaluate(lin, ds).accuracy, 1.0);
}

TEST(Synthetic, RejectsBadArguments) {
  EXPECT_THROW(generate_synthetic(1, 16, 10, 1.0, 0), Error);
  EXPECT_THROW(generate_synthetic(10, 1, 10, 1.0, 0), Error);
  EXPECT_THROW(generate_synthetic(10, 16, 1, 1.0, 0), Error);
}

TEST(LoadIdx, AcceptsWellFormedFiles) {
  const auto f = write_idx("ok", 0x00000803, 4, 4);
  const auto ds = load_idx(f.images, f.labels);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.dim(), 6u);
  EXPECT_EQ(ds.num_classes, 3);
  EXPECT_DOUBLE_EQ(ds.features(0, 1), 1.0 / 255.0);
  EXPECT_DOUBLE_EQ(ds.features(1, 0), 6.0 / 255.0);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 2, 0}));
}

TEST(LoadIdx, FormatErrors) {
  auto kind_of = [](const IdxFiles& f) {
    try {
      load_idx(f.images, f.labels);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidInput;
  };
  EXPECT_EQ(kind_of(write_idx("magic", 0x00000804, 4, 4)), ErrorKind::FormatError);
  EXPECT_EQ(kind_of(write_idx("count", 0x00000803, 4, 3)), ErrorKind::FormatError);
  EXPECT_EQ(kind_of(write_idx("trunc", 0x00000803, 4, 4, 5)), ErrorKind::FormatError);
}

TEST(PartitionIid, EqualSizesAndCover) {
  const auto ds = balanced();
  const auto pa = partition_iid(ds, 10, 1);
  expect_partition(pa, ds.size(), true);
  for (auto s : pa.sizes()) EXPECT_EQ(s, 100u);
  EXPECT_THROW(partition_iid(generate_synthetic(2, 2, 2, 1.0, 0), 10, 1), Error);
}

TEST(PartitionIid, LabelHistogramsAgreeChiSquare) {
  // Chi-square homogeneity over the 10 x 10 client-by-label table; the
  // p > 0.001 critical value at 81 degrees of freedom is about 129.
  const auto ds = balanced(200);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto pa = partition_iid(ds, 10, seed);
    double chi2 = 0.0;
    for (const auto& c : pa.client_indices) {
      std::vector<double> counts(10, 0.0);
      for (auto i : c) counts[std::size_t(ds.labels[i])] += 1.0;
      const double expected = double(c.size()) / 10.0;
      for (double o : counts) chi2 += (o - expected) * (o - expected) / expected;
    }
    EXPECT_LT(chi2, 129.0) << "seed " << seed;
  }
}

TEST(PartitionLabelQuantity, OneLabelPerClient) {
  const auto ds = balanced();
  const auto pa = partition_label_quantity(ds, 10, 1, 5);
  expect_partition(pa, ds.size(), false);
  for (const auto& c : pa.client_indices) {
    std::set<int> labels;
    for (auto i : c) labels.insert(ds.labels[i]);
    EXPECT_EQ(labels.size(), 1u);
  }
}

TEST(PartitionLabelQuantity, AllLabelsSplitEvenly) {
  const auto ds = balanced(103);
  const auto pa = partition_label_quantity(ds, 10, 10, 5);
  expect_partition(pa, ds.size(), true);
  for (int c = 0; c < 10; ++c) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& idx : pa.client_indices) {
      std::size_t n = 0;
      for (auto i : idx) n += ds.labels[i] == c;
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    EXPECT_LE(hi - lo, 1u);
  }
}

TEST(PartitionLabelQuantity, TwoClientsDisjointAndDropsWarned) {
  const auto ds = balanced();
  const auto pa = partition_label_quantity(ds, 2, 2, 9);
  expect_partition(pa, ds.size(), false);
  std::size_t total = 0;
  for (auto s : pa.sizes()) total += s;
  EXPECT_LE(total, ds.size());
  // at most 4 labels are held, so at least 6 are dropped with a warning
  EXPECT_GE(pa.warnings.size(), 6u);
  for (const auto& c : pa.client_indices) {
    std::set<int> labels;
    for (auto i : c) labels.insert(ds.labels[i]);
    EXPECT_EQ(labels.size(), 2u);
  }
  EXPECT_THROW(partition_label_quantity(ds, 2, 11, 9), Error);
}

TEST(PartitionLabelDirichlet, LargeConcentrationMatchesGlobal) {
  const auto ds = balanced(200);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto pa = partition_label_dirichlet(ds, 10, 1e6, seed);
    expect_partition(pa, ds.size(), true);
    for (const auto& c : pa.client_indices)
      for (double p : label_hist(ds, c)) EXPECT_NEAR(p, 0.1, 0.005);
  }
}

TEST(PartitionLabelDirichlet, SmallConcentrationIsSkewed) {
  const auto ds = balanced();
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto pa = partition_label_dirichlet(ds, 10, 0.5, seed);
    expect_partition(pa, ds.size(), true);
    double max_share = 0.0;
    for (const auto& c : pa.client_indices)
      for (double p : label_hist(ds, c)) max_share = std::max(max_share, p);
    EXPECT_GT(max_share, 0.1);
  }
}

TEST(PartitionLabelDirichlet, RetryExhaustion) {
  // 3 samples can never cover 10 clients.
  const auto tiny = generate_synthetic(3, 2, 2, 1.0, 0);
  Dataset three = subset(tiny, std::vector<std::size_t>{0, 2, 4});
  try {
    partition_label_dirichlet(three, 10, 0.5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PartitionRetryExhausted);
  }
}

TEST(PartitionQuantityDirichlet, SizesAndSkew) {
  const auto ds = balanced();
  int skewed = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto flat = partition_quantity_dirichlet(ds, 10, 1e6, seed);
    expect_partition(flat, ds.size(), true);
    for (auto s : flat.sizes()) EXPECT_LE(std::abs(double(s) - 100.0), 5.0);
    const auto skew = partition_quantity_dirichlet(ds, 10, 0.5, seed);
    expect_partition(skew, ds.size(), true);
    const auto sizes = skew.sizes();
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    skewed += double(*hi) / double(*lo) > 2.0;
  }
  EXPECT_GE(skewed, 2);
}

TEST(FeatureNoise, ZeroSigmaIsBitIdentical) {
  const auto ds = balanced(10);
  const auto noisy = add_feature_noise(ds, 3, 10, 0.0, 1);
  EXPECT_EQ(noisy.features, ds.features);
}

TEST(FeatureNoise, VarianceMatchesAndGrowsWithIndex) {
  const auto ds = generate_synthetic(2, 100, 100, 0.0, 1);  // 2*10^4 features
  auto empirical_var = [&](int client, int n, double sigma) {
    const auto noisy = add_feature_noise(ds, client, n, sigma, 11);
    const Eigen::ArrayXXd diff = (noisy.features - ds.features).array();
    const double mean = diff.mean();
    return (diff - mean).square().mean();
  };
  EXPECT_NEAR(empirical_var(10, 10, 0.1), 0.1, 0.01);
  EXPECT_LT(empirical_var(1, 4, 0.1), empirical_var(4, 4, 0.1));
  EXPECT_THROW(add_feature_noise(ds, 0, 4, 0.1, 1), Error);
}

TEST(ComposeMixed, ZeroSigmaMatchesLabelDirichlet) {
  const auto ds = balanced();
  PartitionSpec spec{Strategy::MixedLabelFeature, 1, 0.5, 0.0, 10, 4};
  const auto mixed = compose_mixed(ds, spec);
  const auto plain = partition_label_dirichlet(ds, 10, 0.5, 4);
  EXPECT_EQ(mixed.assignment.client_indices, plain.client_indices);
  for (std::size_t i = 0; i < mixed.clients.size(); ++i)
    EXPECT_EQ(mixed.clients[i].features, subset(ds, plain.client_indices[i]).features);
}

TEST(ComposeMixed, QuantityPlusNoise) {
  const auto ds = generate_synthetic(10, 16, 400, 0.0, 2);
  PartitionSpec spec{Strategy::MixedFeatureQuantity, 1, 1e6, 0.1, 4, 8};
  const auto mixed = compose_mixed(ds, spec);
  expect_partition(mixed.assignment, ds.size(), true);
  std::vector<double> vars;
  for (std::size_t i = 0; i < mixed.clients.size(); ++i) {
    EXPECT_LE(std::abs(double(mixed.clients[i].size()) - 1000.0), 50.0);
    const Eigen::ArrayXXd diff =
        (mixed.clients[i].features - subset(ds, mixed.assignment.client_indices[i]).features).array();
    vars.push_back((diff - diff.mean()).square().mean());
  }
  for (std::size_t i = 1; i < vars.size(); ++i) EXPECT_LT(vars[i - 1], vars[i]);
}

TEST(PartitionSpec, ParseAndPrint) {
  for (const std::string s : {"iid", "c1", "c2", "dir0.5", "gau0.1", "qdir0.5", "dir0.5+gau0.1", "qdir0.5+gau0.1"}) {
    const auto spec = parse_partition(s);
    ASSERT_TRUE(spec.has_value()) << s;
    EXPECT_EQ(to_string(*spec), s);
  }
  for (const std::string s : {"", "c", "dirx", "gau", "c1+gau0.1", "dir0.5+", "qdir-1"})
    EXPECT_FALSE(parse_partition(s).has_value()) << s;
}

TEST(Partition, DeterministicDispatch) {
  const auto ds = balanced();
  for (const std::string s : {"iid", "c2", "dir0.5", "gau0.1", "qdir0.5", "dir0.5+gau0.1", "qdir0.5+gau0.1"}) {
    auto spec = *parse_partition(s);
    spec.seed = 3;
    const auto a = partition(ds, spec);
    const auto b = partition(ds, spec);
    EXPECT_EQ(a.assignment.client_indices, b.assignment.client_indices) << s;
    ASSERT_EQ(a.clients.size(), 10u);
    for (std::size_t i = 0; i < a.clients.size(); ++i) EXPECT_EQ(a.clients[i].features, b.clients[i].features) << s;
  }
}

TEST(Splits, DisjointSixtyTwentyTwenty) {
  const auto ds = balanced(10);  // 100 rows
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto sp = split_client(ds, 4);
  EXPECT_EQ(sp.train.size(), 60u);
  EXPECT_EQ(sp.validation.size(), 20u);
  EXPECT_EQ(sp.test.size(), 20u);
  // rows are unique (continuous features), so row identity tracks disjointness
  std::set<std::vector<double>> rows;
  for (const Dataset* d : {&sp.train, &sp.validation, &sp.test})
    for (Eigen::Index r = 0; r < d->features.rows(); ++r) {
      const Eigen::VectorXd row = d->features.row(r);
      rows.insert(std::vector<double>(row.data(), row.data() + row.size()));
    }
  EXPECT_EQ(rows.size(), 100u);
  const auto again = split_client(ds, 4);
  EXPECT_EQ(again.test.features, sp.test.features);
}

TEST(Splits, StratifiedHoldout) {
  const auto ds = balanced(100);
  const auto [pool, hold] = split_holdout(ds, 0.2, 1);
  EXPECT_EQ(hold.size(), 200u);
  EXPECT_EQ(pool.size(), 800u);
  for (auto c : label_counts(hold)) EXPECT_EQ(c, 20u);
}
