#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetbench/core_math.hpp"
#include "hetbench/data.hpp"
#include "hetbench/error.hpp"
#include "hetbench/rng.hpp"

namespace hetbench {

/// R signed-random-projection hashes, each with `bits` hyperplanes over the
/// vector (x, label_scale * onehot(y)); a hash value is the sign pattern.
class LshFamily {
 public:
  LshFamily(int num_hashes, int bits, int dim, int num_classes, double label_scale, std::uint64_t seed)
      : num_hashes_(num_hashes), bits_(bits), dim_(dim), num_classes_(num_classes), label_scale_(label_scale),
        seed_(seed) {
    require(num_hashes >= 1 && bits >= 1 && bits <= 30 && dim >= 1 && num_classes >= 1, ErrorKind::InvalidInput,
            "LSH sizes must be >= 1 (and bits <= 30)");
    Rng rng = make_rng(seed, {0x15b});
    std::normal_distribution<double> normal(0.0, 1.0);
    planes_.resize(Eigen::Index(num_hashes) * bits, dim + num_classes);
    for (Eigen::Index r = 0; r < planes_.rows(); ++r)
      for (Eigen::Index c = 0; c < planes_.cols(); ++c) planes_(r, c) = normal(rng);
  }

  int num_hashes() const noexcept { return num_hashes_; }
  int bits() const noexcept { return bits_; }
  std::size_t num_bins() const noexcept { return std::size_t{1} << bits_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Bin index in [0, 2^bits) of every hash for one sample.
  std::vector<std::size_t> hash(std::span<const double> x, int label) const {
    require(x.size() == std::size_t(dim_), ErrorKind::ShapeMismatch, "sample dim differs from LSH dim");
    require(label >= 0 && label < num_classes_, ErrorKind::InvalidInput, "label out of range");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim_ + num_classes_);
    for (int j = 0; j < dim_; ++j) z(j) = x[std::size_t(j)];
    z(dim_ + label) = label_scale_;
    return hash_vector(z);
  }

  std::vector<std::size_t> hash_vector(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd proj = planes_ * z;
    std::vector<std::size_t> out(std::size_t(num_hashes_), 0);
    for (int h = 0; h < num_hashes_; ++h) {
      std::size_t code = 0;
      for (int b = 0; b < bits_; ++b)
        if (proj(h * bits_ + b) > 0.0) code |= std::size_t{1} << b;
      out[std::size_t(h)] = code;
    }
    return out;
  }

  int dim() const noexcept { return dim_; }
  int num_classes() const noexcept { return num_classes_; }
  double label_scale() const noexcept { return label_scale_; }

 private:
  int num_hashes_;
  int bits_;
  int dim_;
  int num_classes_;
  double label_scale_;
  std::uint64_t seed_;
  Eigen::MatrixXd planes_;  // (R * bits) x (dim + classes)
};

inline LshFamily make_lsh(int num_hashes, int bits, int dim, int num_classes, double label_scale,
                          std::uint64_t seed) {
  return LshFamily(num_hashes, bits, dim, num_classes, label_scale, seed);
}

/// R x B count matrix. Unnormalized rows each sum to `total`.
struct RaceSketch {
  Eigen::MatrixXd counts;
  double total = 0.0;

  Eigen::MatrixXd normalized() const { return total > 0.0 ? Eigen::MatrixXd(counts / total) : counts; }

  std::vector<double> normalized_flat() const {
    const Eigen::MatrixXd n = normalized();
    std::vector<double> flat;
    flat.reserve(std::size_t(n.size()));
    for (Eigen::Index r = 0; r < n.rows(); ++r)
      for (Eigen::Index c = 0; c < n.cols(); ++c) flat.push_back(n(r, c));
    return flat;
  }
};

/// One pass over the split; each sample increments one bin per hash row.
inline RaceSketch sketch_dataset(const Dataset& split, const LshFamily& lsh) {
  require(!split.empty(), ErrorKind::InvalidInput, "cannot sketch an empty split");
  require(split.dim() == std::size_t(lsh.dim()), ErrorKind::ShapeMismatch, "split dim differs from LSH dim");
  RaceSketch s{Eigen::MatrixXd::Zero(lsh.num_hashes(), Eigen::Index(lsh.num_bins())), 0.0};
  Eigen::VectorXd z(lsh.dim() + lsh.num_classes());
  for (Eigen::Index r = 0; r < split.features.rows(); ++r) {
    z.setZero();
    z.head(lsh.dim()) = split.features.row(r).transpose();
    z(lsh.dim() + split.labels[std::size_t(r)]) = lsh.label_scale();
    const auto bins = lsh.hash_vector(z);
    for (std::size_t h = 0; h < bins.size(); ++h) s.counts(Eigen::Index(h), Eigen::Index(bins[h])) += 1.0;
    s.total += 1.0;
  }
  return s;
}

/// Unweighted mean of the normalized client sketches (rows sum to 1).
inline RaceSketch global_sketch(std::span<const RaceSketch> sketches) {
  require(!sketches.empty(), ErrorKind::InvalidInput, "need at least one sketch");
  const auto rows = sketches.front().counts.rows();
  const auto cols = sketches.front().counts.cols();
  RaceSketch gs{Eigen::MatrixXd::Zero(rows, cols), 1.0};
  for (const auto& s : sketches) {
    require(s.counts.rows() == rows && s.counts.cols() == cols, ErrorKind::InvalidInput, "sketch dimensions differ");
    gs.counts += s.normalized();
  }
  gs.counts /= double(sketches.size());
  return gs;
}

inline constexpr double kDistanceFloor = 1e-6;

inline double sketch_distance(const RaceSketch& a, const RaceSketch& b) {
  const auto fa = a.normalized_flat();
  const auto fb = b.normalized_flat();
  return euclidean_distance(fa, fb);
}

/// p_i proportional to 1 / max(distance, floor).
inline ProbVector probabilities_from_distances(std::span<const double> distances) {
  require(!distances.empty(), ErrorKind::InvalidInput, "no distances");
  std::vector<double> inv(distances.size());
  double total = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    inv[i] = 1.0 / std::max(distances[i], kDistanceFloor);
    total += inv[i];
  }
  for (double& v : inv) v /= total;
  return ProbVector(std::move(inv));
}

inline ProbVector selection_probabilities(const RaceSketch& global, std::span<const RaceSketch> clients) {
  require(clients.size() >= 2, ErrorKind::InvalidInput, "need at least two clients");
  std::vector<double> d;
  d.reserve(clients.size());
  for (const auto& c : clients) d.push_back(sketch_distance(global, c));
  return probabilities_from_distances(d);
}

/// Weighted sampling without replacement by sequential renormalized draws.
/// Returns ids in draw order.
inline std::vector<std::size_t> sample_clients(const ProbVector& probs, std::size_t k, std::uint64_t seed) {
  const std::size_t n = probs.size();
  require(k <= n, ErrorKind::InvalidInput, "cannot sample more clients than exist");
  Rng rng = make_rng(seed, {0x5a3});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(probs.begin(), probs.end());
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i]) total += w[i];
    std::size_t pick = n;
    if (total > 0.0) {
      double target = u(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || w[i] <= 0.0) continue;
        pick = i;
        target -= w[i];
        if (target < 0.0) break;
      }
    }
    if (pick == n) {
      // Remaining mass is zero: take the lowest-index untaken client.
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) {
          pick = i;
          break;
        }
    }
    taken[pick] = true;
    out.push_back(pick);
  }
  return out;
}

/// Debug dump: header line, then R rows of B comma-separated counts.
inline void write_sketch_csv(std::ostream& os, const RaceSketch& s, std::uint64_t seed) {
  os << "race," << s.counts.rows() << ',' << s.counts.cols() << ',' << s.total << ','
     << seed << '\n';
  for (Eigen::Index r = 0; r < s.counts.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.counts.cols(); ++c) {
      if (c) os << ',';
      os << s.counts(r, c);
    }
    os << '\n';
  }
}

}  // namespace hetbench
