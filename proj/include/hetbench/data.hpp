#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetbench/error.hpp"
#include "hetbench/rng.hpp"

namespace hetbench {

/// Feature matrix (m x d) with integer labels in [0, num_classes).
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return std::size_t(features.cols()); }
  bool empty() const noexcept { return labels.empty(); }

  void validate() const {
    require(std::size_t(features.rows()) == labels.size(), ErrorKind::ShapeMismatch,
            "feature rows differ from label count");
    for (int y : labels)
      require(y >= 0 && y < num_classes, ErrorKind::InvalidInput, "label out of range");
  }
};

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.features.resize(Eigen::Index(indices.size()), ds.features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(Eigen::Index(r)) = ds.features.row(Eigen::Index(indices[r]));
    out.labels.push_back(ds.labels[indices[r]]);
  }
  return out;
}

inline Dataset concatenate(const Dataset& a, const Dataset& b) {
  require(a.features.cols() == b.features.cols(), ErrorKind::ShapeMismatch, "feature dims differ");
  Dataset out;
  out.num_classes = std::max(a.num_classes, b.num_classes);
  out.features.resize(a.features.rows() + b.features.rows(), a.features.cols());
  out.features << a.features, b.features;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

inline std::vector<std::size_t> label_counts(const Dataset& ds) {
  std::vector<std::size_t> counts(std::size_t(ds.num_classes), 0);
  for (int y : ds.labels) ++counts[std::size_t(y)];
  return counts;
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Mean of class `c`: a signed, scaled basis vector. Classes beyond `dim`
/// wrap onto the same axes with alternating sign and growing magnitude.
inline Eigen::VectorXd synthetic_class_mean(int c, int dim) {
  constexpr double kScale = 2.0;
  const int axis = c % dim;
  const int layer = c / dim;
  const double sign = (layer % 2 == 0) ? 1.0 : -1.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  mean(axis) = sign * kScale * (1.0 + double(layer / 2));
  return mean;
}

/// Class-balanced isotropic Gaussian clusters, `per_class` samples per class.
inline Dataset generate_synthetic(int num_classes, int dim, int per_class, double spread, std::uint64_t seed) {
  require(num_classes >= 2 && dim >= 2 && per_class >= 2, ErrorKind::InvalidInput,
          "synthetic data needs C >= 2, d >= 2, n >= 2");
  require(spread >= 0.0 && std::isfinite(spread), ErrorKind::InvalidInput, "spread must be finite and >= 0");
  Rng rng = make_rng(seed, {0x5e7});
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  ds.num_classes = num_classes;
  ds.features.resize(Eigen::Index(num_classes) * per_class, dim);
  ds.labels.reserve(std::size_t(num_classes) * std::size_t(per_class));
  Eigen::Index row = 0;
  for (int c = 0; c < num_classes; ++c) {
    const Eigen::VectorXd mean = synthetic_class_mean(c, dim);
    for (int k = 0; k < per_class; ++k, ++row) {
      for (int j = 0; j < dim; ++j) ds.features(row, j) = mean(j) + spread * normal(rng);
      ds.labels.push_back(c);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// IDX files

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& path) {
  require(buf.size() >= offset + 4, ErrorKind::FormatError, path + ": truncated header");
  return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
         (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX image/label pair. Pixels are scaled to [0, 1].
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto images = detail::read_file(images_path);
  const auto labels = detail::read_file(labels_path);

  const auto img_magic = detail::read_be32(images, 0, images_path);
  require(img_magic == kIdxImageMagic, ErrorKind::FormatError, images_path + ": bad image magic");
  const auto lbl_magic = detail::read_be32(labels, 0, labels_path);
  require(lbl_magic == kIdxLabelMagic, ErrorKind::FormatError, labels_path + ": bad label magic");

  const std::size_t n_images = detail::read_be32(images, 4, images_path);
  const std::size_t rows = detail::read_be32(images, 8, images_path);
  const std::size_t cols = detail::read_be32(images, 12, images_path);
  const std::size_t n_labels = detail::read_be32(labels, 4, labels_path);
  require(n_images == n_labels, ErrorKind::FormatError,
          "image count " + std::to_string(n_images) + " differs from label count " + std::to_string(n_labels));
  require(n_images >= 1 && rows * cols >= 1, ErrorKind::FormatError, images_path + ": empty image set");

  const std::size_t dim = rows * cols;
  require(images.size() >= 16 + n_images * dim, ErrorKind::FormatError, images_path + ": truncated pixel data");
  require(labels.size() >= 8 + n_labels, ErrorKind::FormatError, labels_path + ": truncated label data");

  Dataset ds;
  ds.features.resize(Eigen::Index(n_images), Eigen::Index(dim));
  ds.labels.resize(n_images);
  int max_label = 0;
  for (std::size_t i = 0; i < n_images; ++i) {
    for (std::size_t j = 0; j < dim; ++j)
      ds.features(Eigen::Index(i), Eigen::Index(j)) = double(images[16 + i * dim + j]) / 255.0;
    ds.labels[i] = int(labels[8 + i]);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

// ---------------------------------------------------------------------------
// Partitioning

enum class Strategy {
  Iid,
  LabelQuantity,
  LabelDirichlet,
  FeatureNoise,
  QuantityDirichlet,
  MixedLabelFeature,
  MixedFeatureQuantity,
};

struct PartitionSpec {
  Strategy strategy = Strategy::Iid;
  int k = 1;             // labels per client (label_quantity)
  double epsilon = 0.5;  // Dirichlet concentration
  double sigma = 0.0;    // noise level
  int num_clients = 10;
  std::uint64_t seed = 0;

  void validate(int num_classes) const {
    require(num_clients >= 2, ErrorKind::InvalidInput, "need at least two clients");
    if (strategy == Strategy::LabelQuantity)
      require(k >= 1 && k <= num_classes, ErrorKind::InvalidInput, "label count k must lie in [1, C]");
    if (strategy == Strategy::LabelDirichlet || strategy == Strategy::QuantityDirichlet ||
        strategy == Strategy::MixedLabelFeature || strategy == Strategy::MixedFeatureQuantity)
      require(epsilon > 0.0 && std::isfinite(epsilon), ErrorKind::InvalidInput, "epsilon must be > 0");
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorKind::InvalidInput, "sigma must be >= 0");
  }
};

/// Canonical short name: iid, c<k>, dir<e>, gau<s>, qdir<e>, dir<e>+gau<s>, qdir<e>+gau<s>.
inline std::string to_string(const PartitionSpec& spec) {
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  switch (spec.strategy) {
    case Strategy::Iid: return "iid";
    case Strategy::LabelQuantity: return "c" + std::to_string(spec.k);
    case Strategy::LabelDirichlet: return "dir" + num(spec.epsilon);
    case Strategy::FeatureNoise: return "gau" + num(spec.sigma);
    case Strategy::QuantityDirichlet: return "qdir" + num(spec.epsilon);
    case Strategy::MixedLabelFeature: return "dir" + num(spec.epsilon) + "+gau" + num(spec.sigma);
    case Strategy::MixedFeatureQuantity: return "qdir" + num(spec.epsilon) + "+gau" + num(spec.sigma);
  }
  return "?";
}

namespace detail {

/// Non-negative finite number spanning the whole string.
inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::istringstream is(s);
  double v = 0.0;
  is >> v;
  if (!is || !is.eof() || !std::isfinite(v) || v < 0.0) return std::nullopt;
  return v;
}

inline bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace detail

/// Parses the short partition name; strategy parameters only, client count and seed untouched.
inline std::optional<PartitionSpec> parse_partition(const std::string& text) {
  PartitionSpec spec;
  if (text == "iid") return spec;
  const auto plus = text.find('+');
  if (plus != std::string::npos) {
    const std::string left = text.substr(0, plus);
    const std::string right = text.substr(plus + 1);
    if (!detail::starts_with(right, "gau")) return std::nullopt;
    auto sigma = detail::parse_number(right.substr(3));
    if (!sigma) return std::nullopt;
    spec.sigma = *sigma;
    if (detail::starts_with(left, "qdir")) {
      spec.strategy = Strategy::MixedFeatureQuantity;
      auto e = detail::parse_number(left.substr(4));
      if (!e) return std::nullopt;
      spec.epsilon = *e;
      return spec;
    }
    if (detail::starts_with(left, "dir")) {
      spec.strategy = Strategy::MixedLabelFeature;
      auto e = detail::parse_number(left.substr(3));
      if (!e) return std::nullopt;
      spec.epsilon = *e;
      return spec;
    }
    return std::nullopt;
  }
  if (detail::starts_with(text, "qdir")) {
    auto e = detail::parse_number(text.substr(4));
    if (!e) return std::nullopt;
    spec.strategy = Strategy::QuantityDirichlet;
    spec.epsilon = *e;
    return spec;
  }
  if (detail::starts_with(text, "dir")) {
    auto e = detail::parse_number(text.substr(3));
    if (!e) return std::nullopt;
    spec.strategy = Strategy::LabelDirichlet;
    spec.epsilon = *e;
    return spec;
  }
  if (detail::starts_with(text, "gau")) {
    auto s = detail::parse_number(text.substr(3));
    if (!s) return std::nullopt;
    spec.strategy = Strategy::FeatureNoise;
    spec.sigma = *s;
    return spec;
  }
  if (detail::starts_with(text, "c")) {
    auto k = detail::parse_number(text.substr(1));
    if (!k || *k != std::floor(*k)) return std::nullopt;
    spec.strategy = Strategy::LabelQuantity;
    spec.k = int(*k);
    return spec;
  }
  return std::nullopt;
}

/// Per-client disjoint index lists over a source dataset.
struct PartitionAssignment {
  std::vector<std::vector<std::size_t>> client_indices;
  std::size_t source_size = 0;
  std::vector<std::string> warnings;

  std::size_t num_clients() const noexcept { return client_indices.size(); }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    for (const auto& c : client_indices) out.push_back(c.size());
    return out;
  }
};

inline constexpr int kMaxPartitionAttempts = 100;

namespace detail {

/// Largest-remainder rounding of `total * props`; ties go to the lower index.
inline std::vector<std::size_t> apportion(std::size_t total, std::span<const double> props) {
  const std::size_t n = props.size();
  std::vector<std::size_t> counts(n);
  std::vector<double> frac(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = props[i] * double(total);
    counts[i] = std::size_t(std::floor(exact));
    frac[i] = exact - double(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % n, ++assigned) ++counts[order[k]];
  while (assigned > total) {
    // Only reachable through floating-point overshoot; trim from the largest.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

inline std::vector<std::vector<std::size_t>> indices_by_label(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_label(std::size_t(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i) by_label[std::size_t(ds.labels[i])].push_back(i);
  return by_label;
}

inline bool any_empty(const PartitionAssignment& pa) {
  return std::any_of(pa.client_indices.begin(), pa.client_indices.end(), [](const auto& c) { return c.empty(); });
}

template <class Attempt>
PartitionAssignment with_retries(Attempt&& attempt, std::uint64_t seed, const char* what) {
  for (int a = 0; a < kMaxPartitionAttempts; ++a) {
    PartitionAssignment pa = attempt(seed + std::uint64_t(a));
    if (!any_empty(pa)) {
      for (auto& c : pa.client_indices) std::sort(c.begin(), c.end());
      return pa;
    }
  }
  throw Error(ErrorKind::PartitionRetryExhausted,
              std::string(what) + ": a client stayed empty after " + std::to_string(kMaxPartitionAttempts) +
                  " attempts");
}

}  // namespace detail

inline PartitionAssignment partition_iid(const Dataset& ds, int num_clients, std::uint64_t seed) {
  require(num_clients >= 1, ErrorKind::InvalidInput, "need at least one client");
  require(ds.size() >= std::size_t(num_clients), ErrorKind::InvalidInput, "fewer samples than clients");
  Rng rng = make_rng(seed, {0x11d});
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);

  PartitionAssignment pa;
  pa.source_size = ds.size();
  pa.client_indices.resize(std::size_t(num_clients));
  const std::size_t base = ds.size() / std::size_t(num_clients);
  const std::size_t extra = ds.size() % std::size_t(num_clients);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < std::size_t(num_clients); ++i) {
    const std::size_t take = base + (i < extra ? 1 : 0);
    pa.client_indices[i].assign(idx.begin() + std::ptrdiff_t(pos), idx.begin() + std::ptrdiff_t(pos + take));
    std::sort(pa.client_indices[i].begin(), pa.client_indices[i].end());
    pos += take;
  }
  return pa;
}

inline PartitionAssignment partition_label_quantity(const Dataset& ds, int num_clients, int k, std::uint64_t seed) {
  require(num_clients >= 1, ErrorKind::InvalidInput, "need at least one client");
  require(k >= 1 && k <= ds.num_classes, ErrorKind::InvalidInput, "label count k must lie in [1, C]");
  const auto by_label = detail::indices_by_label(ds);

  auto attempt = [&](std::uint64_t s) {
    Rng rng = make_rng(s, {0x1a6e1});
    const std::size_t n = std::size_t(num_clients);
    std::vector<std::vector<std::size_t>> holders(std::size_t(ds.num_classes));
    std::vector<int> labels(std::size_t(ds.num_classes));
    std::iota(labels.begin(), labels.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::shuffle(labels.begin(), labels.end(), rng);
      std::vector<int> mine(labels.begin(), labels.begin() + k);
      std::sort(mine.begin(), mine.end());
      for (int c : mine) holders[std::size_t(c)].push_back(i);
    }

    PartitionAssignment pa;
    pa.source_size = ds.size();
    pa.client_indices.resize(n);
    for (std::size_t c = 0; c < holders.size(); ++c) {
      if (holders[c].empty()) {
        if (!by_label[c].empty()) pa.warnings.push_back("label " + std::to_string(c) + " held by no client; dropped");
        continue;
      }
      std::vector<std::size_t> pool = by_label[c];
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t h = holders[c].size();
      const std::size_t base = pool.size() / h;
      const std::size_t extra = pool.size() % h;
      std::size_t pos = 0;
      for (std::size_t r = 0; r < h; ++r) {
        const std::size_t take = base + (r < extra ? 1 : 0);
        auto& dst = pa.client_indices[holders[c][r]];
        dst.insert(dst.end(), pool.begin() + std::ptrdiff_t(pos), pool.begin() + std::ptrdiff_t(pos + take));
        pos += take;
      }
    }
    return pa;
  };
  return detail::with_retries(attempt, seed, "label-quantity partition");
}

inline PartitionAssignment partition_label_dirichlet(const Dataset& ds, int num_clients, double epsilon,
                                                     std::uint64_t seed) {
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorKind::InvalidInput, "epsilon must be > 0");
  require(num_clients >= 1, ErrorKind::InvalidInput, "need at least one client");
  const auto by_label = detail::indices_by_label(ds);

  auto attempt = [&](std::uint64_t s) {
    Rng rng = make_rng(s, {0xd1c});
    PartitionAssignment pa;
    pa.source_size = ds.size();
    pa.client_indices.resize(std::size_t(num_clients));
    for (const auto& label_idx : by_label) {
      std::vector<std::size_t> pool = label_idx;
      std::shuffle(pool.begin(), pool.end(), rng);
      const auto q = sample_dirichlet(rng, std::size_t(num_clients), epsilon);
      const auto counts = detail::apportion(pool.size(), q);
      std::size_t pos = 0;
      for (std::size_t i = 0; i < counts.size(); ++i) {
        auto& dst = pa.client_indices[i];
        dst.insert(dst.end(), pool.begin() + std::ptrdiff_t(pos), pool.begin() + std::ptrdiff_t(pos + counts[i]));
        pos += counts[i];
      }
    }
    return pa;
  };
  return detail::with_retries(attempt, seed, "label-Dirichlet partition");
}

inline PartitionAssignment partition_quantity_dirichlet(const Dataset& ds, int num_clients, double epsilon,
                                                        std::uint64_t seed) {
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorKind::InvalidInput, "epsilon must be > 0");
  require(num_clients >= 1, ErrorKind::InvalidInput, "need at least one client");

  auto attempt = [&](std::uint64_t s) {
    Rng rng = make_rng(s, {0x9d1c});
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto q = sample_dirichlet(rng, std::size_t(num_clients), epsilon);
    const auto counts = detail::apportion(ds.size(), q);
    PartitionAssignment pa;
    pa.source_size = ds.size();
    pa.client_indices.resize(std::size_t(num_clients));
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      pa.client_indices[i].assign(idx.begin() + std::ptrdiff_t(pos), idx.begin() + std::ptrdiff_t(pos + counts[i]));
      pos += counts[i];
    }
    return pa;
  };
  return detail::with_retries(attempt, seed, "quantity-Dirichlet partition");
}

/// Adds N(0, sigma * client / num_clients) noise (variance, 1-based client) to every feature.
inline Dataset add_feature_noise(const Dataset& client_data, int client, int num_clients, double sigma,
                                 std::uint64_t seed) {
  require(client >= 1 && client <= num_clients, ErrorKind::InvalidInput, "client index must lie in [1, N]");
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorKind::InvalidInput, "sigma must be >= 0");
  Dataset out = client_data;
  if (sigma == 0.0) return out;
  const double stddev = std::sqrt(sigma * double(client) / double(num_clients));
  Rng rng = make_rng(seed, {0x9a05, std::uint64_t(client)});
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index r = 0; r < out.features.rows(); ++r)
    for (Eigen::Index c = 0; c < out.features.cols(); ++c) out.features(r, c) += normal(rng);
  return out;
}

/// A partition materialized into per-client datasets (noise already applied).
struct PartitionedData {
  PartitionAssignment assignment;
  std::vector<Dataset> clients;
};

namespace detail {

inline PartitionedData materialize(const Dataset& ds, PartitionAssignment pa, double sigma, std::uint64_t seed) {
  PartitionedData out;
  const int n = int(pa.num_clients());
  for (int i = 0; i < n; ++i) {
    Dataset local = subset(ds, pa.client_indices[std::size_t(i)]);
    out.clients.push_back(sigma > 0.0 ? add_feature_noise(local, i + 1, n, sigma, seed) : std::move(local));
  }
  out.assignment = std::move(pa);
  return out;
}

}  // namespace detail

/// Mixed skews: the Dirichlet partitioner first, then per-client feature noise.
inline PartitionedData compose_mixed(const Dataset& ds, const PartitionSpec& spec) {
  require(spec.strategy == Strategy::MixedLabelFeature || spec.strategy == Strategy::MixedFeatureQuantity,
          ErrorKind::InvalidInput, "compose_mixed needs a mixed strategy");
  spec.validate(ds.num_classes);
  PartitionAssignment pa = spec.strategy == Strategy::MixedLabelFeature
                               ? partition_label_dirichlet(ds, spec.num_clients, spec.epsilon, spec.seed)
                               : partition_quantity_dirichlet(ds, spec.num_clients, spec.epsilon, spec.seed);
  return detail::materialize(ds, std::move(pa), spec.sigma, spec.seed);
}

inline PartitionedData partition(const Dataset& ds, const PartitionSpec& spec) {
  spec.validate(ds.num_classes);
  switch (spec.strategy) {
    case Strategy::Iid:
      return detail::materialize(ds, partition_iid(ds, spec.num_clients, spec.seed), 0.0, spec.seed);
    case Strategy::LabelQuantity:
      return detail::materialize(ds, partition_label_quantity(ds, spec.num_clients, spec.k, spec.seed), 0.0,
                                 spec.seed);
    case Strategy::LabelDirichlet:
      return detail::materialize(ds, partition_label_dirichlet(ds, spec.num_clients, spec.epsilon, spec.seed), 0.0,
                                 spec.seed);
    case Strategy::FeatureNoise:
      return detail::materialize(ds, partition_iid(ds, spec.num_clients, spec.seed), spec.sigma, spec.seed);
    case Strategy::QuantityDirichlet:
      return detail::materialize(ds, partition_quantity_dirichlet(ds, spec.num_clients, spec.epsilon, spec.seed),
                                 0.0, spec.seed);
    case Strategy::MixedLabelFeature:
    case Strategy::MixedFeatureQuantity:
      return compose_mixed(ds, spec);
  }
  throw Error(ErrorKind::InvalidInput, "unknown partition strategy");
}

// ---------------------------------------------------------------------------
// Splits

struct ClientSplits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Seeded 60/20/20 train/validation/test split of one client's data. Clients
/// with fewer than three samples reuse the same samples for all three roles.
inline ClientSplits split_client(const Dataset& local, std::uint64_t seed) {
  require(!local.empty(), ErrorKind::InvalidInput, "cannot split an empty client dataset");
  const std::size_t n = local.size();
  if (n < 3) return {local, local, local};
  Rng rng = make_rng(seed, {0x5b117});
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_test = std::max<std::size_t>(1, std::size_t(std::llround(0.2 * double(n))));
  const std::size_t n_val = std::max<std::size_t>(1, std::size_t(std::llround(0.2 * double(n))));
  const std::size_t n_train = n - n_test - n_val;
  std::span<const std::size_t> all(idx);
  auto sorted = [](std::span<const std::size_t> s) {
    std::vector<std::size_t> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
  };
  return {subset(local, sorted(all.subspan(0, n_train))), subset(local, sorted(all.subspan(n_train, n_val))),
          subset(local, sorted(all.subspan(n_train + n_val)))};
}

/// Stratified holdout: returns (pool, holdout) with `fraction` of every class held out.
inline std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorKind::InvalidInput, "holdout fraction must lie in (0, 1)");
  Rng rng = make_rng(seed, {0x401d});
  std::vector<std::size_t> pool, hold;
  for (auto idx : detail::indices_by_label(ds)) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t h = std::size_t(std::llround(fraction * double(idx.size())));
    hold.insert(hold.end(), idx.begin(), idx.begin() + std::ptrdiff_t(h));
    pool.insert(pool.end(), idx.begin() + std::ptrdiff_t(h), idx.end());
  }
  std::sort(pool.begin(), pool.end());
  std::sort(hold.begin(), hold.end());
  return {subset(ds, pool), subset(ds, hold)};
}

}  // namespace hetbench
