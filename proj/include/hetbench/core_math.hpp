#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetbench/error.hpp"

namespace hetbench {

/// Global tolerance for simplex membership.
inline constexpr double kSimplexTol = 1e-9;

/// A point on the probability simplex. Construction validates; use
/// `project_to_simplex` to obtain one from an arbitrary vector.
class ProbVector {
 public:
  ProbVector() = default;

  explicit ProbVector(std::vector<double> values, double tol = kSimplexTol) : values_(std::move(values)) {
    require(!values_.empty(), ErrorKind::InvalidInput, "probability vector is empty");
    double sum = 0.0;
    for (double v : values_) {
      require(std::isfinite(v) && v >= -tol, ErrorKind::InvalidInput, "probability entry negative or non-finite");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= tol, ErrorKind::InvalidInput,
            "probability vector sums to " + std::to_string(sum));
    for (double& v : values_) v = std::max(v, 0.0);
  }

  static ProbVector uniform(std::size_t n) { return ProbVector(std::vector<double>(n, 1.0 / double(n))); }

  static ProbVector one_hot(std::size_t n, std::size_t k) {
    std::vector<double> v(n, 0.0);
    v.at(k) = 1.0;
    return ProbVector(std::move(v));
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::size_t argmax() const {
    return std::size_t(std::max_element(values_.begin(), values_.end()) - values_.begin());
  }

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> values_;
};

/// N x N row-stochastic matrix: row i holds client i's aggregation weights.
class CollaborationMatrix {
 public:
  CollaborationMatrix() = default;

  explicit CollaborationMatrix(std::vector<ProbVector> rows) : rows_(std::move(rows)) {
    for (const auto& r : rows_)
      require(r.size() == rows_.size(), ErrorKind::ShapeMismatch, "collaboration matrix must be square");
  }

  static CollaborationMatrix identity(std::size_t n) {
    std::vector<ProbVector> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back(ProbVector::one_hot(n, i));
    return CollaborationMatrix(std::move(rows));
  }

  static CollaborationMatrix uniform(std::size_t n) {
    return CollaborationMatrix(std::vector<ProbVector>(n, ProbVector::uniform(n)));
  }

  std::size_t size() const noexcept { return rows_.size(); }
  const ProbVector& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<ProbVector>& rows() const noexcept { return rows_; }
  double operator()(std::size_t i, std::size_t j) const { return rows_[i][j]; }

  /// Mean over rows of the mass placed on other clients.
  double mean_off_diagonal_mass() const {
    if (rows_.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) acc += 1.0 - rows_[i][i];
    return acc / double(rows_.size());
  }

 private:
  std::vector<ProbVector> rows_;
};

/// Euclidean projection onto {x >= 0, sum x = 1} (sort and threshold).
inline ProbVector project_to_simplex(std::span<const double> v) {
  require(!v.empty(), ErrorKind::InvalidInput, "cannot project an empty vector");
  for (double x : v) require(std::isfinite(x), ErrorKind::InvalidInput, "non-finite entry in projection input");

  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Descending by value; equal values keep index order.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });

  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cumsum += v[order[k]];
    const double t = (cumsum - 1.0) / double(k + 1);
    if (v[order[k]] - t > 0.0) theta = t;
  }

  std::vector<double> out(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::max(v[i] - theta, 0.0);
    sum += out[i];
  }
  // Renormalize away rounding drift; sum is within a few ulps of 1 here.
  for (double& x : out) x /= sum;
  return ProbVector(std::move(out));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::InvalidInput, "vector length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::InvalidInput, "vector length mismatch");
  const double na = norm(a);
  const double nb = norm(b);
  require(na > 0.0 && nb > 0.0, ErrorKind::ZeroVector, "cosine similarity of a zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::InvalidInput, "vector length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Parameter flattening

/// Dimensions of one dense layer; the bias has `rows` entries.
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // rows = outputs, cols = inputs
  Eigen::VectorXd bias;
};

using LayerStack = std::vector<DenseLayer>;

inline std::size_t param_count(std::span<const LayerShape> shapes) {
  std::size_t n = 0;
  for (const auto& s : shapes) n += s.rows * s.cols + s.rows;
  return n;
}

/// Flat parameter vector plus the layer metadata needed to rebuild the model.
struct ParamVector {
  std::vector<double> flat;
  std::vector<LayerShape> shapes;

  std::size_t size() const noexcept { return flat.size(); }
  std::span<const double> view() const noexcept { return flat; }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

inline std::vector<LayerShape> shapes_of(const LayerStack& layers) {
  std::vector<LayerShape> shapes;
  shapes.reserve(layers.size());
  for (const auto& l : layers) shapes.push_back({std::size_t(l.weight.rows()), std::size_t(l.weight.cols())});
  return shapes;
}

/// Layer order; per layer the weight matrix row-major, then the bias.
inline ParamVector flatten(const LayerStack& layers) {
  ParamVector pv;
  pv.shapes = shapes_of(layers);
  pv.flat.reserve(param_count(pv.shapes));
  for (const auto& l : layers) {
    require(std::size_t(l.bias.size()) == std::size_t(l.weight.rows()), ErrorKind::ShapeMismatch,
            "bias length differs from weight rows");
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) pv.flat.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) pv.flat.push_back(l.bias(r));
  }
  return pv;
}

inline LayerStack unflatten(std::span<const double> flat, std::span<const LayerShape> shapes) {
  require(flat.size() == param_count(shapes), ErrorKind::ShapeMismatch,
          "flat length " + std::to_string(flat.size()) + " does not match shapes (" +
              std::to_string(param_count(shapes)) + ")");
  LayerStack layers;
  layers.reserve(shapes.size());
  std::size_t pos = 0;
  for (const auto& s : shapes) {
    DenseLayer l{Eigen::MatrixXd(s.rows, s.cols), Eigen::VectorXd(s.rows)};
    for (std::size_t r = 0; r < s.rows; ++r)
      for (std::size_t c = 0; c < s.cols; ++c) l.weight(r, c) = flat[pos++];
    for (std::size_t r = 0; r < s.rows; ++r) l.bias(r) = flat[pos++];
    layers.push_back(std::move(l));
  }
  return layers;
}

inline LayerStack unflatten(const ParamVector& pv) { return unflatten(pv.flat, pv.shapes); }

}  // namespace hetbench
