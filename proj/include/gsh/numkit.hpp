#pragma once

// Small dense linear-algebra kernel: vectors, row-major matrices, a handful
// of reductions and a seeded RNG. Everything is double precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsh/error.hpp"

namespace gsh {

class Vector {
 public:
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {
    if (n == 0) throw DimensionError("Vector: length must be >= 1");
  }
  explicit Vector(std::vector<double> data) : data_(std::move(data)) {
    if (data_.empty()) throw DimensionError("Vector: length must be >= 1");
  }
  Vector(std::initializer_list<double> init) : Vector(std::vector<double>(init)) {}

  /// Validating constructor for untrusted input: rejects NaN/Inf.
  static Vector checked(std::vector<double> data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(data[i])) {
        throw DomainError("Vector: non-finite entry at index " + std::to_string(i));
      }
    }
    return Vector(std::move(data));
  }

  static Vector basis(std::size_t n, std::size_t k) {
    Vector e(n);
    e[k] = 1.0;
    return e;
  }

  std::size_t size() const noexcept { return data_.size(); }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw DimensionError("Matrix: rows and cols must be >= 1");
  }
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) throw DimensionError("Matrix: rows and cols must be >= 1");
    if (data_.size() != rows * cols) {
      throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                           " != rows*cols " + std::to_string(rows * cols));
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  /// Stacks equal-length vectors as rows.
  static Matrix from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) throw DimensionError("Matrix::from_rows: no rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      detail::require_same_length(rows[r].size(), m.cols(), "Matrix::from_rows");
      std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
  }

  /// Stacks equal-length vectors as columns.
  static Matrix from_columns(const std::vector<Vector>& cols) {
    if (cols.empty()) throw DimensionError("Matrix::from_columns: no columns");
    Matrix m(cols.front().size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      detail::require_same_length(cols[c].size(), m.rows(), "Matrix::from_columns");
      for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) = cols[c][r];
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  Vector row_vector(std::size_t r) const {
    auto s = row(r);
    return Vector(std::vector<double>(s.begin(), s.end()));
  }
  Vector column(std::size_t c) const {
    Vector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require_same_length(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double dot(const Vector& a, const Vector& b) { return dot(a.span(), b.span()); }

/// A·x
inline Vector matvec(const Matrix& a, const Vector& x) {
  detail::require_same_length(a.cols(), x.size(), "matvec");
  Vector y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x.span());
  return y;
}

/// Aᵀ·x without materializing the transpose.
inline Vector matvec_transposed(const Matrix& a, const Vector& x) {
  detail::require_same_length(a.rows(), x.size(), "matvec_transposed");
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += xr * row[c];
  }
  return Vector(std::move(y));
}

/// A·B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

inline double l2_norm(const Vector& x) { return std::sqrt(dot(x, x)); }

inline Vector operator+(const Vector& a, const Vector& b) {
  detail::require_same_length(a.size(), b.size(), "vector add");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
  detail::require_same_length(a.size(), b.size(), "vector subtract");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vector operator*(double s, const Vector& a) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

inline double distance(const Vector& a, const Vector& b) { return l2_norm(a - b); }

inline double max_abs_diff(const Vector& a, const Vector& b) {
  detail::require_same_length(a.size(), b.size(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// 1 − cos(a, b), in [0, 2].
inline double cosine_error(const Vector& a, const Vector& b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine_error: zero-norm input");
  const double c = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
  return 1.0 - c;
}

inline double mean(const Vector& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population variance.
inline double variance(const Vector& x) {
  const double mu = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size());
}

/// Gain-1, bias-0 layer normalization with population variance.
inline Vector layer_norm(const Vector& x, double eps) {
  if (!(eps > 0.0)) throw DomainError("layer_norm: eps must be > 0");
  const double mu = mean(x);
  const double inv = 1.0 / std::sqrt(variance(x) + eps);
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mu) * inv;
  return y;
}

/// Seeded generator. The bit stream is std::mt19937_64, whose output is fixed
/// by the standard; uniforms take the top 53 bits and normals use Box-Muller,
/// so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw DomainError("Rng::index: empty range");
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }

  /// k distinct indices from [0, n), in random order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw DomainError("Rng::sample_without_replacement: k > n");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + index(n - i)]);
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

/// Mixes a base seed with a stream index (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Vector gaussian(Rng& rng, std::size_t n) {
  if (n == 0) throw DimensionError("gaussian: n must be >= 1");
  Vector v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

/// Uniform draw from the sphere of the given radius in R^d.
inline Vector uniform_sphere(Rng& rng, std::size_t d, double radius) {
  if (d == 0) throw DimensionError("uniform_sphere: d must be >= 1");
  if (!(radius > 0.0)) throw DomainError("uniform_sphere: radius must be > 0");
  for (;;) {
    Vector g = gaussian(rng, d);
    const double n = l2_norm(g);
    if (n == 0.0) continue;
    return (radius / n) * g;
  }
}

}  // namespace gsh
