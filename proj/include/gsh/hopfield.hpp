#pragma once

// Generalized sparse modern Hopfield model: energy, retrieval dynamics
// x ← Ξ·entmax(βΞᵀx) and the fixed-parameter layer forms built on top of it.

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gsh/entmax.hpp"
#include "gsh/error.hpp"
#include "gsh/numkit.hpp"

namespace gsh {

/// Stored patterns Ξ ∈ R^{d×M}, one pattern per column. Immutable.
class MemoryBank {
 public:
  explicit MemoryBank(Matrix xi) : xi_(std::move(xi)), cache_(std::make_shared<Cache>()) {
    for (std::size_t mu = 0; mu < patterns(); ++mu) {
      max_norm_ = std::max(max_norm_, l2_norm(pattern(mu)));
    }
    if (!(max_norm_ > 0.0)) throw DomainError("MemoryBank: all patterns are zero");
  }

  /// Builds a bank from a matrix whose rows are patterns (N×d).
  static MemoryBank from_rows(const Matrix& rows) { return MemoryBank(rows.transposed()); }
  static MemoryBank from_patterns(const std::vector<Vector>& patterns) {
    return MemoryBank(Matrix::from_columns(patterns));
  }

  const Matrix& xi() const noexcept { return xi_; }
  std::size_t dim() const noexcept { return xi_.rows(); }
  std::size_t patterns() const noexcept { return xi_.cols(); }
  Vector pattern(std::size_t mu) const { return xi_.column(mu); }

  /// m = max_µ ‖ξ_µ‖.
  double max_norm() const noexcept { return max_norm_; }

  /// R = ½·min_{µ≠ν} ‖ξ_µ − ξ_ν‖; +∞ for a single pattern. Computed once on
  /// first use (O(M²d)).
  double radius() const {
    std::call_once(cache_->once, [this] { cache_->radius = compute_radius(); });
    return cache_->radius;
  }

  /// Ξᵀx.
  Vector scores(const Vector& x) const {
    detail::require_same_length(x.size(), dim(), "MemoryBank::scores");
    return matvec_transposed(xi_, x);
  }

  /// Ξ·p, skipping patterns outside the support.
  Vector combine(const SimplexVector& p) const {
    detail::require_same_length(p.size(), patterns(), "MemoryBank::combine");
    const auto& support = p.support();
    if (support.size() * 4 >= patterns()) return matvec(xi_, p.values());
    Vector out(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      auto row = xi_.row(i);
      double s = 0.0;
      for (std::size_t mu : support) s += row[mu] * p[mu];
      out[i] = s;
    }
    return out;
  }

 private:
  struct Cache {
    std::once_flag once;
    double radius = 0.0;
  };

  double compute_radius() const {
    if (patterns() < 2) return std::numeric_limits<double>::infinity();
    const Matrix rows = xi_.transposed();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < rows.rows(); ++a) {
      auto ra = rows.row(a);
      for (std::size_t b = a + 1; b < rows.rows(); ++b) {
        auto rb = rows.row(b);
        double s = 0.0;
        for (std::size_t i = 0; i < ra.size(); ++i) s += (ra[i] - rb[i]) * (ra[i] - rb[i]);
        best = std::min(best, s);
      }
    }
    return 0.5 * std::sqrt(best);
  }

  Matrix xi_;
  double max_norm_ = 0.0;
  std::shared_ptr<Cache> cache_;
};

struct HopfieldConfig {
  Alpha alpha{2.0};
  double beta = 1.0;
  int max_steps = 16;
  double fp_tol = 1e-8;

  void validate() const {
    if (!(beta > 0.0)) throw DomainError("HopfieldConfig: beta must be > 0");
    if (max_steps < 1) throw DomainError("HopfieldConfig: max_steps must be >= 1");
    if (!(fp_tol > 0.0)) throw DomainError("HopfieldConfig: fp_tol must be > 0");
  }
};

struct RetrievalTrace {
  std::vector<Vector> states;
  std::vector<double> energies;
  bool converged = false;
  int steps_used = 0;

  const Vector& final_state() const { return states.back(); }

  /// Largest E_{t+1} − E_t along the trace (≤ 0 for a descending trace).
  double max_energy_increase() const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t < energies.size(); ++t) {
      worst = std::max(worst, energies[t] - energies[t - 1]);
    }
    return energies.size() < 2 ? 0.0 : worst;
  }

  bool energy_monotone(double tol = 1e-10) const { return max_energy_increase() <= tol; }
};

/// H(x) = −(1/β)·Ψ*_α(β·Ξᵀx) + ½⟨x, x⟩.
///
/// The 1/β factor makes the retrieval update the exact CCCP step for H at
/// every β; at β = 1 it is the unscaled energy.
inline double energy(const MemoryBank& bank, const Vector& x, const HopfieldConfig& cfg) {
  cfg.validate();
  const Vector z = cfg.beta * bank.scores(x);
  return -conjugate_value(z, cfg.alpha) / cfg.beta + 0.5 * dot(x, x);
}

/// entmax(βΞᵀx): the attention over stored patterns for query x.
inline EntmaxResult retrieval_weights(const MemoryBank& bank, const Vector& x,
                                      const HopfieldConfig& cfg) {
  cfg.validate();
  return entmax(bank.scores(x), cfg.alpha, cfg.beta);
}

/// One update T(x) = Ξ·entmax(βΞᵀx).
inline Vector retrieve_step(const MemoryBank& bank, const Vector& x, const HopfieldConfig& cfg) {
  return bank.combine(retrieval_weights(bank, x, cfg).p);
}

/// Iterates T until successive states are within fp_tol or max_steps is hit.
inline RetrievalTrace retrieve(const MemoryBank& bank, const Vector& x0,
                               const HopfieldConfig& cfg) {
  cfg.validate();
  detail::require_same_length(x0.size(), bank.dim(), "retrieve");
  RetrievalTrace trace;
  trace.states.push_back(x0);
  trace.energies.push_back(energy(bank, x0, cfg));
  for (int t = 0; t < cfg.max_steps; ++t) {
    Vector next = retrieve_step(bank, trace.states.back(), cfg);
    const double moved = distance(next, trace.states.back());
    trace.energies.push_back(energy(bank, next, cfg));
    trace.states.push_back(std::move(next));
    trace.steps_used = t + 1;
    if (moved <= cfg.fp_tol) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Layer forms. These take patterns as matrix ROWS (len × d), unlike MemoryBank.

/// For each row r of `queries`: entmax(Y·r/√d, α, β)ᵀ·Y.
inline Matrix gsh_layer_lookup(const Matrix& queries, const Matrix& memory,
                               const HopfieldConfig& cfg) {
  cfg.validate();
  if (queries.cols() != memory.cols()) {
    throw DimensionError("gsh_layer_lookup: query dim " + std::to_string(queries.cols()) +
                         " vs memory dim " + std::to_string(memory.cols()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(memory.cols()));
  Matrix out(queries.rows(), memory.cols());
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    const Vector s = scale * matvec(memory, queries.row_vector(r));
    const EntmaxResult w = entmax(s, cfg.alpha, cfg.beta);
    const Vector y = matvec_transposed(memory, w.p.values());
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

/// Row-wise LayerNorm(R + GSHLayer(R, Y)) with all parameters fixed.
inline Matrix plug_memory(const Matrix& queries, const Matrix& memory, const HopfieldConfig& cfg,
                          double eps) {
  if (!(eps > 0.0)) throw DomainError("plug_memory: eps must be > 0");
  const Matrix retrieved = gsh_layer_lookup(queries, memory, cfg);
  Matrix out(queries.rows(), queries.cols());
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    const Vector y = layer_norm(queries.row_vector(r) + retrieved.row_vector(r), eps);
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

/// Retrieves the label block for each query: memories are concatenated with
/// their labels, queries are zero-padded in the label slots, and the label
/// part of the retrieved rows is returned (n × L).
inline Matrix pseudo_label_retrieve(const Matrix& queries, const Matrix& memory,
                                    const Matrix& labels, const HopfieldConfig& cfg) {
  cfg.validate();
  if (queries.cols() != memory.cols()) {
    throw DimensionError("pseudo_label_retrieve: query dim " + std::to_string(queries.cols()) +
                         " vs memory dim " + std::to_string(memory.cols()));
  }
  if (labels.rows() != memory.rows()) {
    throw DimensionError("pseudo_label_retrieve: " + std::to_string(memory.rows()) +
                         " memories but " + std::to_string(labels.rows()) + " label rows");
  }
  const std::size_t d = memory.cols();
  const std::size_t L = labels.cols();
  Matrix augmented(memory.rows(), d + L);
  for (std::size_t k = 0; k < memory.rows(); ++k) {
    auto dst = augmented.row(k);
    std::copy(memory.row(k).begin(), memory.row(k).end(), dst.begin());
    std::copy(labels.row(k).begin(), labels.row(k).end(), dst.begin() + static_cast<long>(d));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d + L));
  Matrix out(queries.rows(), L);
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    Vector padded(d + L);
    std::copy(queries.row(r).begin(), queries.row(r).end(), padded.begin());
    const Vector s = scale * matvec(augmented, padded);
    const EntmaxResult w = entmax(s, cfg.alpha, cfg.beta);
    const Vector full = matvec_transposed(augmented, w.p.values());
    for (std::size_t j = 0; j < L; ++j) out(r, j) = full[d + j];
  }
  return out;
}

/// Row-stochastic attention weights entmax(β·(R·Wq)·(Y·Wk)ᵀ), n × M.
inline Matrix gsh_attention_weights(const Matrix& queries, const Matrix& memory, const Matrix& wq,
                                    const Matrix& wk, const HopfieldConfig& cfg) {
  cfg.validate();
  const Matrix q = matmul(queries, wq);
  const Matrix k = matmul(memory, wk);
  if (q.cols() != k.cols()) {
    throw DimensionError("gsh_attention: W_Q yields " + std::to_string(q.cols()) +
                         " columns, W_K yields " + std::to_string(k.cols()));
  }
  Matrix weights(queries.rows(), memory.rows());
  for (std::size_t r = 0; r < q.rows(); ++r) {
    const EntmaxResult w = entmax(matvec(k, q.row_vector(r)), cfg.alpha, cfg.beta);
    std::copy(w.p.values().begin(), w.p.values().end(), weights.row(r).begin());
  }
  return weights;
}

/// Z = entmax(β·(R·Wq)·(Y·Wk)ᵀ)·(Y·Wk·Wv) with externally supplied weights.
inline Matrix gsh_attention(const Matrix& queries, const Matrix& memory, const Matrix& wq,
                            const Matrix& wk, const Matrix& wv, const HopfieldConfig& cfg) {
  const Matrix weights = gsh_attention_weights(queries, memory, wq, wk, cfg);
  const Matrix values = matmul(matmul(memory, wk), wv);
  return matmul(weights, values);
}

}  // namespace gsh
