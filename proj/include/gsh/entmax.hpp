#pragma once

// The α-entmax family of mappings R^M → Δ^M, the Tsallis regularizer that
// defines it, its convex conjugate and the Jacobian-vector product.
//
//   α = 1   softmax (dense)
//   α = 2   sparsemax (Euclidean projection onto the simplex)
//   α > 1   p_i = [(α−1)·β·z_i − τ]₊^{1/(α−1)}, τ chosen so that Σp = 1
//
// Every solver returns an EntmaxResult so callers never need to special-case α.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "gsh/error.hpp"
#include "gsh/numkit.hpp"

namespace gsh {

/// Entmax order, restricted to [1, 5]. Larger values are numerically
/// indistinguishable from hardmax and start producing overflow in practice.
class Alpha {
 public:
  static constexpr double kMin = 1.0;
  static constexpr double kMax = 5.0;

  explicit Alpha(double value) : value_(value) {
    if (!(value >= kMin && value <= kMax)) {
      throw DomainError("Alpha: value " + std::to_string(value) + " outside [1, 5]");
    }
  }

  double value() const noexcept { return value_; }
  bool is_softmax() const noexcept { return value_ == 1.0; }
  bool is_sparsemax() const noexcept { return value_ == 2.0; }

  bool operator==(const Alpha&) const = default;

 private:
  double value_;
};

/// A point of the probability simplex together with its support.
class SimplexVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit SimplexVector(Vector p) : p_(std::move(p)) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (!(p_[i] >= 0.0)) {
        throw DomainError("SimplexVector: negative or NaN entry at index " + std::to_string(i));
      }
      sum += p_[i];
      if (p_[i] > 0.0) support_.push_back(i);
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw DomainError("SimplexVector: entries sum to " + std::to_string(sum));
    }
  }

  const Vector& values() const noexcept { return p_; }
  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const noexcept { return p_[i]; }

  /// Sorted indices with p_i > 0.
  const std::vector<std::size_t>& support() const noexcept { return support_; }

  bool is_one_hot() const noexcept { return support_.size() == 1; }

 private:
  Vector p_;
  std::vector<std::size_t> support_;
};

struct EntmaxResult {
  SimplexVector p;
  /// Threshold in (α−1)·β·z units for α > 1; log-normalizer for α = 1.
  double tau;
  Alpha alpha;
};

/// Tsallis entropy of order α (Shannon entropy at α = 1). Non-negative.
inline double tsallis_entropy(const SimplexVector& p, Alpha alpha) {
  const double a = alpha.value();
  double s = 0.0;
  if (alpha.is_softmax()) {
    for (double v : p.values())
      if (v > 0.0) s -= v * std::log(v);
    return s;
  }
  for (double v : p.values()) s += v - std::pow(v, a);
  return s / (a * (a - 1.0));
}

inline EntmaxResult softmax(const Vector& z, double beta) {
  if (!(beta > 0.0)) throw DomainError("softmax: beta must be > 0");
  const double c = beta * *std::max_element(z.begin(), z.end());
  Vector p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(beta * z[i] - c);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return {SimplexVector(std::move(p)), std::log(sum) + c, Alpha(1.0)};
}

namespace detail {

/// Indices of `s` ordered by descending value, ties kept in index order.
inline std::vector<std::size_t> descending_order(const std::vector<double>& s) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return order;
}

}  // namespace detail

/// Support size κ(s) = max{k : 1 + k·s_(k) > Σ_{ν≤k} s_(ν)} for scores
/// `sorted` already in descending order. κ ≥ 1 always.
inline std::size_t sparsemax_support_size(std::span<const double> sorted) {
  std::size_t kappa = 1;
  double cumsum = 0.0;
  for (std::size_t k = 1; k <= sorted.size(); ++k) {
    cumsum += sorted[k - 1];
    if (1.0 + static_cast<double>(k) * sorted[k - 1] > cumsum) kappa = k;
  }
  return kappa;
}

/// κ of the given (unsorted) scores.
inline std::size_t sparsemax_support_size(const Vector& scores) {
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return sparsemax_support_size(std::span<const double>(sorted));
}

/// Exact sort-based Euclidean projection of β·z onto the simplex.
inline EntmaxResult sparsemax(const Vector& z, double beta) {
  if (!(beta > 0.0)) throw DomainError("sparsemax: beta must be > 0");
  std::vector<double> s(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) s[i] = beta * z[i];
  const auto order = detail::descending_order(s);
  std::vector<double> sorted(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) sorted[k] = s[order[k]];

  const std::size_t kappa = sparsemax_support_size(std::span<const double>(sorted));
  double top = 0.0;
  for (std::size_t k = 0; k < kappa; ++k) top += sorted[k];
  const double tau = (top - 1.0) / static_cast<double>(kappa);

  Vector p(z.size());
  for (std::size_t i = 0; i < s.size(); ++i) p[i] = std::max(s[i] - tau, 0.0);
  return {SimplexVector(std::move(p)), tau, Alpha(2.0)};
}

struct BisectOptions {
  double tol = 1e-12;
  int max_iter = 100;
};

/// General-α entmax by bisection on the threshold τ.
///
/// With s_i = (α−1)·β·z_i, f(τ) = Σ [s_i − τ]₊^{1/(α−1)} is continuous and
/// non-increasing; f(max s) = 0 and f(max s − 1) ≥ 1, which brackets the root.
/// Sums run over the scores in sorted order, so the result is exactly
/// permutation-equivariant.
inline EntmaxResult entmax_bisect(const Vector& z, Alpha alpha, double beta,
                                  BisectOptions opts = {}) {
  if (alpha.is_softmax()) throw DomainError("entmax_bisect: alpha = 1, use softmax");
  if (!(beta > 0.0)) throw DomainError("entmax_bisect: beta must be > 0");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw DomainError("entmax_bisect: tol must be > 0 and max_iter >= 1");
  }
  const double am1 = alpha.value() - 1.0;
  const double expo = 1.0 / am1;

  // Work relative to the largest score: τ then lives in [−1, 0], where its
  // floating-point resolution is far finer than in absolute units. The
  // differences are taken before scaling and carried in long double; at large
  // α, p near the support boundary moves by ~p^{2−α} per unit of score, so a
  // double-rounded score alone costs ~1e-9 in p.
  using ld = long double;
  const auto order = detail::descending_order(std::vector<double>(z.begin(), z.end()));
  const double ztop = z[order.front()];
  const ld scale = static_cast<ld>(am1) * static_cast<ld>(beta);
  std::vector<ld> sorted(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) sorted[k] = scale * (static_cast<ld>(z[order[k]]) - ztop);
  const double top = am1 * (beta * ztop);
  const ld lexpo = expo;

  auto mass = [&](ld tau) {
    ld f = 0.0L;
    for (ld v : sorted) {
      if (v <= tau) break;
      f += std::pow(v - tau, lexpo);
    }
    return f;
  };

  ld hi = 0.0L;
  ld lo = -1.0L - 4.0L * std::numeric_limits<ld>::epsilon();
  if (!std::isfinite(top) || !std::isfinite(static_cast<double>(sorted.back())) || !(mass(lo) >= 1.0L) ||
      mass(hi) != 0.0L) {
    throw InternalError("entmax_bisect: invalid bracket (non-finite scores?)");
  }

  ld tau = lo;
  for (int it = 0; it < opts.max_iter; ++it) {
    const ld mid = 0.5L * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
    const ld f = mass(mid);
    tau = mid;
    if (std::abs(f - 1.0L) <= opts.tol) break;
    if (f >= 1.0L) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  std::vector<ld> q(z.size(), 0.0L);
  ld sum = 0.0L;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (sorted[k] <= tau) break;
    q[order[k]] = std::pow(sorted[k] - tau, lexpo);
    sum += q[order[k]];
  }
  if (!(sum > 0.0L)) throw InternalError("entmax_bisect: empty support");
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(q[i] / sum);
  return {SimplexVector(Vector(std::move(p))), top + static_cast<double>(tau), alpha};
}

/// Single entry point: dispatches to the exact solver when one exists.
inline EntmaxResult entmax(const Vector& z, Alpha alpha, double beta) {
  if (alpha.is_softmax()) return softmax(z, beta);
  if (alpha.is_sparsemax()) return sparsemax(z, beta);
  return entmax_bisect(z, alpha, beta);
}

/// Ψ*_α(z) = max_{p∈Δ} ⟨p, z⟩ + Ψ_α(p), evaluated at the maximizer entmax(z).
/// Its gradient is entmax(z, α, 1).
inline double conjugate_value(const Vector& z, Alpha alpha) {
  const EntmaxResult r = entmax(z, alpha, 1.0);
  return dot(r.p.values(), z) + tsallis_entropy(r.p, alpha);
}

/// Directional derivative of entmax at the point that produced `p`
/// (with respect to the β-scaled scores): J·dz with J = diag(s) − s·sᵀ/Σs,
/// s_i = p_i^{2−α} on the support and 0 elsewhere.
inline Vector entmax_jvp(const SimplexVector& p, Alpha alpha, const Vector& dz) {
  detail::require_same_length(p.size(), dz.size(), "entmax_jvp");
  if (p.support().empty()) throw InternalError("entmax_jvp: empty support");
  const double a = alpha.value();
  Vector s(p.size());
  for (std::size_t i : p.support()) s[i] = alpha.is_softmax() ? p[i] : std::pow(p[i], 2.0 - a);
  double ssum = 0.0;
  double sdz = 0.0;
  for (std::size_t i : p.support()) {
    ssum += s[i];
    sdz += s[i] * dz[i];
  }
  const double shift = sdz / ssum;
  Vector dp(p.size());
  for (std::size_t i : p.support()) dp[i] = s[i] * (dz[i] - shift);
  return dp;
}

}  // namespace gsh
