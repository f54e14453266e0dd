#pragma once

// Executable forms of the model's theoretical quantities: pattern
// separation, retrieval-error upper bounds, the well-separation condition,
// the principal branch of Lambert W and the memory-capacity lower bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "gsh/entmax.hpp"
#include "gsh/error.hpp"
#include "gsh/hopfield.hpp"
#include "gsh/numkit.hpp"

namespace gsh {

struct SeparationReport {
  /// Δ_µ = ⟨ξ_µ, ξ_µ⟩ − max_{ν≠µ} ⟨ξ_µ, ξ_ν⟩
  Vector delta;
  double delta_min;
};

/// Gram matrix ΞᵀΞ (M × M).
inline Matrix gram(const MemoryBank& bank) {
  const Matrix rows = bank.xi().transposed();
  const std::size_t M = rows.rows();
  Matrix g(M, M);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = a; b < M; ++b) {
      g(a, b) = g(b, a) = dot(rows.row(a), rows.row(b));
    }
  }
  return g;
}

inline SeparationReport separation(const MemoryBank& bank) {
  const std::size_t M = bank.patterns();
  if (M < 2) throw DomainError("separation: needs at least 2 patterns, got " + std::to_string(M));
  const Matrix g = gram(bank);
  Vector delta(M);
  double delta_min = std::numeric_limits<double>::infinity();
  for (std::size_t mu = 0; mu < M; ++mu) {
    double cross = -std::numeric_limits<double>::infinity();
    for (std::size_t nu = 0; nu < M; ++nu)
      if (nu != mu) cross = std::max(cross, g(mu, nu));
    delta[mu] = g(mu, mu) - cross;
    delta_min = std::min(delta_min, delta[mu]);
  }
  return {std::move(delta), delta_min};
}

/// Δ̃_µ(x) = min_{ν≠µ} (⟨x, ξ_µ⟩ − ⟨x, ξ_ν⟩).
inline double separation_at(const MemoryBank& bank, const Vector& x, std::size_t mu) {
  if (bank.patterns() < 2) throw DomainError("separation_at: needs at least 2 patterns");
  if (mu >= bank.patterns()) throw DomainError("separation_at: pattern index out of range");
  const Vector z = bank.scores(x);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t nu = 0; nu < z.size(); ++nu)
    if (nu != mu) gap = std::min(gap, z[mu] - z[nu]);
  return gap;
}

/// 2m(M−1)·exp(−β(⟨ξ_µ, x⟩ − max_{ν∈[M]} ⟨ξ_µ, ξ_ν⟩)); the max includes ν = µ.
/// Upper-bounds ‖T_dense(x) − ξ_µ‖ (and ‖T(x) − ξ_µ‖ for 1 ≤ α < 2) on S_µ.
inline double dense_error_bound(const MemoryBank& bank, const Vector& x, std::size_t mu,
                                double beta) {
  if (mu >= bank.patterns()) throw DomainError("dense_error_bound: pattern index out of range");
  const std::size_t M = bank.patterns();
  if (M == 1) return 0.0;
  const Vector xi_mu = bank.pattern(mu);
  const Vector overlaps = bank.scores(xi_mu);
  const double max_overlap = *std::max_element(overlaps.begin(), overlaps.end());
  return 2.0 * bank.max_norm() * static_cast<double>(M - 1) *
         std::exp(-beta * (dot(xi_mu, x) - max_overlap));
}

/// Which scores κ is evaluated on in sparse_error_bound.
enum class KappaScores {
  kScaled,  ///< κ(β·Ξᵀx), the scores sparsemax actually sees.
  kRaw,     ///< κ(Ξᵀx).
};

/// m + √d·m·β·[κ·(max_ν ⟨ξ_ν, x⟩ − [Ξᵀx]_(κ)) + 1/β], the α ≥ 2 bound.
/// The gap term always uses raw scores.
inline double sparse_error_bound(const MemoryBank& bank, const Vector& x, double beta,
                                 KappaScores kappa_on = KappaScores::kScaled) {
  if (!(beta > 0.0)) throw DomainError("sparse_error_bound: beta must be > 0");
  const Vector z = bank.scores(x);
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::vector<double> for_kappa = sorted;
  if (kappa_on == KappaScores::kScaled)
    for (auto& v : for_kappa) v *= beta;
  const std::size_t kappa = sparsemax_support_size(std::span<const double>(for_kappa));
  const double gap = sorted.front() - sorted[kappa - 1];
  const double m = bank.max_norm();
  const double d = static_cast<double>(bank.dim());
  return m + std::sqrt(d) * m * beta * (static_cast<double>(kappa) * gap + 1.0 / beta);
}

/// (1/β)·ln(2(M−1)m/(R+δ)) + 2mR. Patterns with Δ_µ at or above this value
/// are stored: T maps the sphere of radius R around ξ_µ into itself.
inline double well_separation_threshold(std::size_t M, double m, double R, double delta,
                                        double beta) {
  if (M < 2) throw DomainError("well_separation_threshold: M must be >= 2");
  if (!(beta > 0.0)) throw DomainError("well_separation_threshold: beta must be > 0");
  if (!(R + delta > 0.0)) {
    throw DomainError("well_separation_threshold: R + delta = " + std::to_string(R + delta) +
                      " must be > 0");
  }
  return std::log(2.0 * static_cast<double>(M - 1) * m / (R + delta)) / beta + 2.0 * m * R;
}

inline bool is_well_separated(const MemoryBank& bank, double R, double delta, double beta) {
  return separation(bank).delta_min >=
         well_separation_threshold(bank.patterns(), bank.max_norm(), R, delta, beta);
}

/// Mean of ‖T_dense(x) − ξ_µ‖ − ‖T_α(x) − ξ_µ‖ over the given (query, index)
/// pairs: an empirical estimate of δ for a bank.
inline double estimate_delta(const MemoryBank& bank, const std::vector<Vector>& queries,
                             const std::vector<std::size_t>& targets, Alpha alpha, double beta) {
  detail::require_same_length(queries.size(), targets.size(), "estimate_delta");
  if (queries.empty()) throw DomainError("estimate_delta: no queries");
  const HopfieldConfig dense{Alpha(1.0), beta};
  const HopfieldConfig sparse{alpha, beta};
  double sum = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Vector xi = bank.pattern(targets[i]);
    sum += distance(retrieve_step(bank, queries[i], dense), xi) -
           distance(retrieve_step(bank, queries[i], sparse), xi);
  }
  return sum / static_cast<double>(queries.size());
}

// ---------------------------------------------------------------------------
// Lambert W, principal branch.

/// W0(x) for x ≥ −1/e by Halley iteration.
inline double lambert_w0(double x) {
  constexpr double kInvE = 0.36787944117144232159552377016146;
  if (std::isnan(x) || x < -kInvE) {
    throw DomainError("lambert_w0: argument " + std::to_string(x) + " below -1/e");
  }
  if (x == 0.0) return 0.0;
  if (x == -kInvE) return -1.0;
  if (std::isinf(x)) return x;

  double w;
  if (x < -0.25) {
    // Series about the branch point.
    const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x < std::exp(1.0)) {
    w = std::log1p(x);
  } else {
    const double lx = std::log(x);
    w = lx - std::log(lx);
  }

  // Stop on the step, not on |w·e^w − x|: for tiny x an absolute residual
  // test accepts w with only ~x relative accuracy.
  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (f == 0.0) break;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    const double next = std::max(w - step, -1.0);
    if (next == w || std::abs(step) <= 1e-16 * std::abs(w)) {
      w = next;
      break;
    }
    w = next;
  }
  return w;
}

/// W0(exp(log_x)) without forming exp(log_x): solves w + ln w = log_x.
inline double lambert_w0_log(double log_x) {
  if (std::isnan(log_x)) throw DomainError("lambert_w0_log: NaN argument");
  if (log_x < 1.0) return lambert_w0(std::exp(log_x));
  if (std::isinf(log_x)) return log_x;
  // g(w) = w + ln w − L is increasing with g(1) ≤ 0 ≤ g(L) for L ≥ 1.
  auto g = [log_x](double w) { return w + std::log(w) - log_x; };
  double lo = 1.0;
  double hi = std::max(1.0, log_x);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  double w = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double f = g(w);
    if (f == 0.0) break;
    w -= f / (1.0 + 1.0 / w);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Memory capacity.

struct CapacityInputs {
  int d = 2;
  double m = 1.0;
  double beta = 1.0;
  double R = 0.1;
  double delta = 0.0;
  /// Probability of failing to store and retrieve a pattern.
  double p_fail = 0.01;

  void validate() const {
    if (d < 2) throw DomainError("CapacityInputs: d must be >= 2");
    if (!(m > 0.0)) throw DomainError("CapacityInputs: m must be > 0");
    if (!(beta > 0.0)) throw DomainError("CapacityInputs: beta must be > 0");
    if (!(R > 0.0)) throw DomainError("CapacityInputs: R must be > 0");
    if (delta > 0.0) throw DomainError("CapacityInputs: delta must be <= 0");
    if (!(p_fail > 0.0 && p_fail < 1.0)) throw DomainError("CapacityInputs: p_fail not in (0,1)");
    if (!(R + delta > 0.0)) {
      throw DomainError("CapacityInputs: R + delta = " + std::to_string(R + delta) +
                        " must be > 0");
    }
  }
};

/// C solves a·C + C·ln C = b, i.e. C = b / W0(exp(a + ln b)).
struct CapacityBound {
  double a;
  double b;
  double w0;
  double C;
  /// ln of the lower bound √p·C^{(d−1)/4}; the bound itself overflows early.
  double log_M_lower;
  double M_lower;
  /// |a·C + C·ln C − b| / |b|
  double residual;
};

namespace detail {

inline CapacityBound solve_capacity(double a, double b, const CapacityInputs& inp) {
  const double w = lambert_w0_log(a + std::log(b));
  const double C = b / w;
  const double k = (inp.d - 1) / 4.0;
  const double log_m = 0.5 * std::log(inp.p_fail) + k * std::log(C);
  const double residual = std::abs(a * C + C * std::log(C) - b) / std::abs(b);
  return {a, b, w, C, log_m, std::exp(log_m), residual};
}

}  // namespace detail

/// Lower bound on the number of sphere-sampled patterns (radius m) the sparse
/// model stores and retrieves with failure probability p_fail.
///
/// The log argument uses 2m(1−√p)/(R+δ), the positive form that the (M−1)
/// factor takes in the derivation. `refine_passes` > 0 re-solves with a
/// taken from the current M, converging to the root of the un-approximated
/// inequality; passes stop early once M ≤ 1.
inline CapacityBound capacity_lower_bound(const CapacityInputs& inp, int refine_passes = 0) {
  inp.validate();
  const double k = (inp.d - 1) / 4.0;
  const double arg = 2.0 * inp.m * (1.0 - std::sqrt(inp.p_fail)) / (inp.R + inp.delta);
  if (!(arg > 0.0)) {
    throw DomainError("capacity_lower_bound: log argument 2m(1-sqrt p)/(R+delta) = " +
                      std::to_string(arg) + " must be > 0");
  }
  const double b = 4.0 * inp.m * inp.m * inp.beta / (5.0 * (inp.d - 1));
  double a = 4.0 / (inp.d - 1) * (std::log(arg) + 1.0);
  CapacityBound out = detail::solve_capacity(a, b, inp);
  for (int pass = 0; pass < refine_passes; ++pass) {
    if (!(out.M_lower > 1.0) || !std::isfinite(out.log_M_lower)) break;
    // ln(M−1) = ln((M−1)/C^k) + k·ln C, and the k·ln C part is absorbed into C·ln C.
    const double log_m_minus_1 = out.log_M_lower + std::log1p(-std::exp(-out.log_M_lower));
    const double rest = std::log(2.0 * inp.m / (inp.R + inp.delta)) + log_m_minus_1 -
                        k * std::log(out.C);
    a = (rest + 1.0) / k;
    out = detail::solve_capacity(a, b, inp);
  }
  return out;
}

/// Dense-model counterpart: ã = 2/(d−1)·[1 + ln(2βm²p)], b̃ = b.
inline CapacityBound dense_capacity_lower_bound(const CapacityInputs& inp) {
  inp.validate();
  const double b = 4.0 * inp.m * inp.m * inp.beta / (5.0 * (inp.d - 1));
  const double a =
      2.0 / (inp.d - 1) * (1.0 + std::log(2.0 * inp.beta * inp.m * inp.m * inp.p_fail));
  return detail::solve_capacity(a, b, inp);
}

struct CapacityComparison {
  CapacityInputs inputs;
  CapacityBound sparse;
  CapacityBound dense;
  bool sparse_at_least_dense() const { return sparse.log_M_lower >= dense.log_M_lower; }
};

inline CapacityComparison compare_capacity(const CapacityInputs& inp, int refine_passes = 0) {
  return {inp, capacity_lower_bound(inp, refine_passes), dense_capacity_lower_bound(inp)};
}

}  // namespace gsh
