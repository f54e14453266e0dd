#pragma once

// Experiment harness: capacity and noise-robustness sweeps, the bound
// verification suites and the capacity-bound table. Sweeps run their grid
// cells in parallel (GSH_THREADS caps the worker count) with one RNG stream
// per cell, and always emit rows in grid order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gsh/bounds.hpp"
#include "gsh/dataio.hpp"
#include "gsh/entmax.hpp"
#include "gsh/hopfield.hpp"
#include "gsh/numkit.hpp"

namespace gsh {

inline std::size_t thread_count() {
  if (const char* env = std::getenv("GSH_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Calls fn(i) for i in [0, n) on up to thread_count() workers. The first
/// exception thrown by any call is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Where a sweep draws its stored patterns from: a finite pool (e.g. MNIST)
/// sampled without replacement, or fresh uniform draws from a sphere.
class PatternSource {
 public:
  static PatternSource pool(PatternSet set) {
    PatternSource s;
    s.pool_ = std::move(set);
    return s;
  }
  static PatternSource sphere(std::size_t d, double radius) {
    if (d == 0) throw DimensionError("PatternSource::sphere: d must be >= 1");
    if (!(radius > 0.0)) throw DomainError("PatternSource::sphere: radius must be > 0");
    PatternSource s;
    s.sphere_d_ = d;
    s.sphere_radius_ = radius;
    return s;
  }

  std::size_t dim() const { return pool_ ? pool_->dim() : sphere_d_; }

  std::string describe() const {
    if (pool_) return "pool " + pool_->source + " (" + std::to_string(pool_->size()) + " patterns)";
    return "sphere d=" + std::to_string(sphere_d_) + " radius=" + detail::format_double(sphere_radius_);
  }

  /// M patterns as rows.
  Matrix sample(std::size_t M, Rng& rng) const {
    if (M == 0) throw DomainError("PatternSource: M must be >= 1");
    if (pool_) {
      if (M > pool_->size()) {
        throw DomainError("PatternSource: M = " + std::to_string(M) + " exceeds the " +
                          std::to_string(pool_->size()) + " available patterns");
      }
      const auto idx = rng.sample_without_replacement(pool_->size(), M);
      Matrix out(M, pool_->dim());
      for (std::size_t k = 0; k < M; ++k) {
        auto src = pool_->patterns.row(idx[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
      }
      return out;
    }
    Matrix out(M, sphere_d_);
    for (std::size_t k = 0; k < M; ++k) {
      const Vector v = uniform_sphere(rng, sphere_d_, sphere_radius_);
      std::copy(v.begin(), v.end(), out.row(k).begin());
    }
    return out;
  }

 private:
  std::optional<PatternSet> pool_;
  std::size_t sphere_d_ = 0;
  double sphere_radius_ = 0.0;
};

struct SweepConfig {
  std::vector<double> alphas{1.0, 2.0};
  std::vector<double> betas{0.01};
  double threshold = 0.2;
  int trials = 10;
  std::uint64_t seed = 0;
  std::size_t max_queries = 500;
  int max_steps = 16;
  double fp_tol = 1e-8;
  bool mask_leading = false;

  void validate() const {
    if (alphas.empty() || betas.empty()) throw DomainError("sweep: alpha and beta grids must be non-empty");
    if (trials < 1) throw DomainError("sweep: trials must be >= 1");
    if (max_queries < 1) throw DomainError("sweep: max_queries must be >= 1");
    for (double a : alphas) (void)Alpha(a);
  }
};

struct CapacityConfig : SweepConfig {
  std::vector<std::size_t> pattern_counts{100, 500, 1000, 2000};
};

struct RobustnessConfig : SweepConfig {
  std::size_t pattern_count = 100;
  std::vector<double> sigmas{0.0, 0.25, 0.5, 1.0, 2.0};
};

namespace detail {

struct CellScore {
  double success = 0.0;
  double cos_err = 0.0;
  std::size_t queries = 0;
};

/// Scores one (bank, queries) cell for every (α, β) pair; index = a·|β| + b.
inline std::vector<CellScore> score_cell(const Matrix& stored, const Matrix& queries,
                                         const SweepConfig& cfg) {
  const MemoryBank bank = MemoryBank::from_rows(stored);
  Matrix targets(queries.rows(), stored.cols());
  for (std::size_t q = 0; q < queries.rows(); ++q)
    std::copy(stored.row(q).begin(), stored.row(q).end(), targets.row(q).begin());
  std::vector<CellScore> out;
  for (double a : cfg.alphas) {
    for (double b : cfg.betas) {
      const HopfieldConfig hc{Alpha(a), b, cfg.max_steps, cfg.fp_tol};
      const RetrievalScore s = score_retrieval(bank, queries, targets, hc, cfg.threshold);
      out.push_back({s.success_rate, s.mean_cosine_error, s.queries});
    }
  }
  return out;
}

inline void aggregate(Table& table, const std::vector<double>& lead,
                      const std::vector<std::vector<CellScore>>& trials, const SweepConfig& cfg) {
  std::size_t k = 0;
  for (double a : cfg.alphas) {
    for (double b : cfg.betas) {
      double sum = 0.0, sq = 0.0, err = 0.0;
      std::size_t queries = 0;
      for (const auto& t : trials) {
        sum += t[k].success;
        sq += t[k].success * t[k].success;
        err += t[k].cos_err;
        queries = t[k].queries;
      }
      const auto n = static_cast<double>(trials.size());
      const double mean = sum / n;
      const double var = std::max(0.0, sq / n - mean * mean);
      std::vector<double> row = lead;
      row.insert(row.end(), {a, b, mean, std::sqrt(var), err / n, n, static_cast<double>(queries)});
      table.add_row(std::move(row));
      ++k;
    }
  }
}

}  // namespace detail

/// Half-masked retrieval success over a grid of stored-pattern counts.
/// Columns: M, alpha, beta, success_rate, success_std, mean_cosine_error,
/// trials, queries.
inline Table capacity_sweep(const PatternSource& source, const CapacityConfig& cfg) {
  cfg.validate();
  if (cfg.pattern_counts.empty()) throw DomainError("capacity: M grid must be non-empty");
  const std::size_t cells = cfg.pattern_counts.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<detail::CellScore>> results(cells);
  parallel_for(cells, [&](std::size_t cell) {
    const std::size_t M = cfg.pattern_counts[cell / cfg.trials];
    Rng rng(mix_seed(cfg.seed, cell));
    const Matrix stored = source.sample(M, rng);
    const std::size_t nq = std::min(M, cfg.max_queries);
    CorruptionSpec mask = CorruptionSpec::half_mask();
    mask.mask_leading = cfg.mask_leading;
    Matrix queries(nq, stored.cols());
    for (std::size_t q = 0; q < nq; ++q) {
      const Vector y = corrupt(stored.row_vector(q), mask, rng);
      std::copy(y.begin(), y.end(), queries.row(q).begin());
    }
    results[cell] = detail::score_cell(stored, queries, cfg);
  });

  Table table;
  table.comments.push_back("experiment: capacity (half-masked queries)");
  table.comments.push_back("source: " + source.describe());
  table.columns = {"M", "alpha", "beta", "success_rate", "success_std", "mean_cosine_error",
                   "trials", "queries"};
  for (std::size_t i = 0; i < cfg.pattern_counts.size(); ++i) {
    std::vector<std::vector<detail::CellScore>> trials(
        results.begin() + static_cast<long>(i * cfg.trials),
        results.begin() + static_cast<long>((i + 1) * cfg.trials));
    detail::aggregate(table, {static_cast<double>(cfg.pattern_counts[i])}, trials, cfg);
  }
  return table;
}

/// Retrieval success from Gaussian-noised stored patterns over a σ grid.
/// Columns: sigma, M, alpha, beta, success_rate, success_std,
/// mean_cosine_error, trials, queries.
inline Table robustness_sweep(const PatternSource& source, const RobustnessConfig& cfg) {
  cfg.validate();
  if (cfg.sigmas.empty()) throw DomainError("robustness: sigma grid must be non-empty");
  for (double s : cfg.sigmas)
    if (!(s >= 0.0)) throw DomainError("robustness: sigma must be >= 0");
  const std::size_t cells = cfg.sigmas.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<detail::CellScore>> results(cells);
  parallel_for(cells, [&](std::size_t cell) {
    const std::size_t si = cell / cfg.trials;
    const std::size_t trial = cell % cfg.trials;
    // Same bank and noise directions across σ for a given trial: the curve
    // then varies only through σ.
    Rng rng(mix_seed(cfg.seed, trial));
    const Matrix stored = source.sample(cfg.pattern_count, rng);
    const std::size_t nq = std::min(cfg.pattern_count, cfg.max_queries);
    const CorruptionSpec noise = CorruptionSpec::gaussian(cfg.sigmas[si]);
    Matrix queries(nq, stored.cols());
    for (std::size_t q = 0; q < nq; ++q) {
      const Vector y = corrupt(stored.row_vector(q), noise, rng);
      std::copy(y.begin(), y.end(), queries.row(q).begin());
    }
    results[cell] = detail::score_cell(stored, queries, cfg);
  });

  Table table;
  table.comments.push_back("experiment: robustness (gaussian noise)");
  table.comments.push_back("source: " + source.describe());
  table.columns = {"sigma", "M", "alpha", "beta", "success_rate", "success_std",
                   "mean_cosine_error", "trials", "queries"};
  for (std::size_t i = 0; i < cfg.sigmas.size(); ++i) {
    std::vector<std::vector<detail::CellScore>> trials(
        results.begin() + static_cast<long>(i * cfg.trials),
        results.begin() + static_cast<long>((i + 1) * cfg.trials));
    detail::aggregate(table, {cfg.sigmas[i], static_cast<double>(cfg.pattern_count)}, trials, cfg);
  }
  return table;
}

/// Success rate of the row matching (alpha, beta, lead_column = lead_value).
inline double lookup_success(const Table& t, const std::string& lead_column, double lead_value,
                             double alpha, double beta) {
  const auto lc = t.column_index(lead_column);
  const auto ac = t.column_index("alpha");
  const auto bc = t.column_index("beta");
  const auto sc = t.column_index("success_rate");
  for (const auto& row : t.rows)
    if (row[lc] == lead_value && row[ac] == alpha && row[bc] == beta) return row[sc];
  throw DomainError("lookup_success: no matching row");
}

// ---------------------------------------------------------------------------
// Bound verification suites

/// A random bank with an associated query in S_µ.
///
/// Patterns are drawn uniformly on the sphere of radius m (all norms equal),
/// x = ξ_µ + η with ‖η‖ ≤ ρ·R and x projected onto the ball of radius m, so
/// x ∈ S_µ and ⟨ξ_ν, x⟩ ≤ m² for every ν.
struct BoundInstance {
  MemoryBank bank;
  Vector query;
  std::size_t target;
  double beta;
};

struct InstanceSpec {
  std::size_t min_dim = 4;
  std::size_t max_dim = 32;
  std::size_t min_patterns = 2;
  std::size_t max_patterns = 12;
  double radius = 1.0;
  double min_beta = 0.5;
  double max_beta = 50.0;
  /// Fraction of the bank's R within which the query perturbation falls.
  double max_perturbation = 1.0;
};

inline BoundInstance random_bound_instance(Rng& rng, const InstanceSpec& spec = {}) {
  const std::size_t d = spec.min_dim + rng.index(spec.max_dim - spec.min_dim + 1);
  const std::size_t M = spec.min_patterns + rng.index(spec.max_patterns - spec.min_patterns + 1);
  std::vector<Vector> pats;
  for (std::size_t k = 0; k < M; ++k) pats.push_back(uniform_sphere(rng, d, spec.radius));
  MemoryBank bank = MemoryBank::from_patterns(pats);
  const std::size_t mu = rng.index(M);
  const double rho = spec.max_perturbation * bank.radius() * std::pow(rng.uniform(), 1.0 / d);
  Vector x = pats[mu] + uniform_sphere(rng, d, std::max(rho, 1e-300));
  const double nx = l2_norm(x);
  if (nx > spec.radius) x = (spec.radius / nx) * x;
  const double beta =
      spec.min_beta * std::pow(spec.max_beta / spec.min_beta, rng.uniform());
  return {std::move(bank), std::move(x), mu, beta};
}

struct DominationReport {
  Table instances;
  std::size_t dense_violations = 0;
  std::size_t sparse_violations = 0;
  /// ‖T_α(x) − ξ_µ‖ > ‖T_dense(x) − ξ_µ‖ + 1e-10, per alpha in `ordering_alphas`.
  std::vector<std::size_t> ordering_violations;
  std::vector<double> ordering_alphas{1.5, 2.0, 3.0};

  std::size_t total_violations() const {
    std::size_t n = dense_violations + sparse_violations;
    for (auto v : ordering_violations) n += v;
    return n;
  }
};

/// Measured single-step errors against the dense and α=2 bounds.
inline DominationReport bound_domination_suite(std::size_t count, std::uint64_t seed,
                                               const InstanceSpec& spec = {}) {
  DominationReport rep;
  rep.ordering_violations.assign(rep.ordering_alphas.size(), 0);
  rep.instances.comments.push_back("suite: bound domination, seed " + std::to_string(seed));
  rep.instances.columns = {"instance", "d", "M", "beta", "dense_error", "dense_bound",
                           "sparse_error", "sparse_bound", "entmax15_error", "entmax3_error"};
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, i));
    const BoundInstance inst = random_bound_instance(rng, spec);
    const Vector xi = inst.bank.pattern(inst.target);
    auto err = [&](double a) {
      return distance(retrieve_step(inst.bank, inst.query, {Alpha(a), inst.beta}), xi);
    };
    const double e_dense = err(1.0);
    const double b_dense = dense_error_bound(inst.bank, inst.query, inst.target, inst.beta);
    const double b_sparse = sparse_error_bound(inst.bank, inst.query, inst.beta);
    std::vector<double> errs;
    for (double a : rep.ordering_alphas) errs.push_back(err(a));
    const double e_sparse = errs[1];
    if (e_dense > b_dense) ++rep.dense_violations;
    if (e_sparse > b_sparse) ++rep.sparse_violations;
    for (std::size_t k = 0; k < errs.size(); ++k)
      if (errs[k] > e_dense + 1e-10) ++rep.ordering_violations[k];
    rep.instances.add_row({static_cast<double>(i), static_cast<double>(inst.bank.dim()),
                           static_cast<double>(inst.bank.patterns()), inst.beta, e_dense, b_dense,
                           e_sparse, b_sparse, errs[0], errs[2]});
  }
  return rep;
}

struct WellSeparatedBank {
  MemoryBank bank;
  double sphere_radius;  ///< R of S_µ
  double beta;
  double threshold;
};

/// Samples a sphere bank and picks R and β so that Δ_min equals
/// (1 + margin) times the well-separation threshold (δ = 0).
inline WellSeparatedBank make_well_separated_bank(Rng& rng, std::size_t d, std::size_t M,
                                                  double m, double margin) {
  for (;;) {
    std::vector<Vector> pats;
    for (std::size_t k = 0; k < M; ++k) pats.push_back(uniform_sphere(rng, d, m));
    MemoryBank bank = MemoryBank::from_patterns(pats);
    const double dmin = separation(bank).delta_min;
    if (!(dmin > 0.0)) continue;
    // Leave half of the separation budget to the 2mR term.
    const double R = std::min(0.25 * dmin / (1.0 + margin) / m, bank.radius());
    const double log_term = std::log(2.0 * static_cast<double>(M - 1) * m / R);
    const double beta = log_term / (dmin / (1.0 + margin) - 2.0 * m * R);
    if (!(beta > 0.0) || !std::isfinite(beta)) continue;
    const double thr = well_separation_threshold(M, m, R, 0.0, beta);
    return {std::move(bank), R, beta, thr};
  }
}

struct WellSeparationReport {
  std::size_t trials = 0;
  std::size_t landed_dense = 0;
  std::size_t landed_sparse = 0;
  double worst_ratio_dense = 0.0;   ///< max ‖T(x) − ξ_µ‖ / R
  double worst_ratio_sparse = 0.0;
};

/// Single-step retrieval (α = 1 and α = 2) from random x ∈ S_µ on banks that
/// meet the well-separation condition with the given margin.
inline WellSeparationReport well_separation_suite(std::size_t banks, std::uint64_t seed,
                                                  double margin = 0.1) {
  WellSeparationReport rep;
  for (std::size_t i = 0; i < banks; ++i) {
    Rng rng(mix_seed(seed, i));
    const std::size_t d = 16 + rng.index(49);
    const std::size_t M = 2 + rng.index(19);
    const WellSeparatedBank wsb = make_well_separated_bank(rng, d, M, 1.0, margin);
    const std::size_t mu = rng.index(M);
    const Vector xi = wsb.bank.pattern(mu);
    const double r = wsb.sphere_radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    const Vector x = xi + uniform_sphere(rng, d, std::max(r, 1e-300));
    const double ed = distance(retrieve_step(wsb.bank, x, {Alpha(1.0), wsb.beta}), xi);
    const double es = distance(retrieve_step(wsb.bank, x, {Alpha(2.0), wsb.beta}), xi);
    ++rep.trials;
    if (ed <= wsb.sphere_radius) ++rep.landed_dense;
    if (es <= wsb.sphere_radius) ++rep.landed_sparse;
    rep.worst_ratio_dense = std::max(rep.worst_ratio_dense, ed / wsb.sphere_radius);
    rep.worst_ratio_sparse = std::max(rep.worst_ratio_sparse, es / wsb.sphere_radius);
  }
  return rep;
}

/// Sparse vs dense capacity lower bounds over a β grid.
/// Columns: beta, a, b, C, w0, residual, log_M, M, a_dense, C_dense,
/// residual_dense, log_M_dense, M_dense, sparse_ge_dense.
inline Table capacity_table(CapacityInputs base, const std::vector<double>& betas,
                            int refine_passes = 0) {
  if (betas.empty()) throw DomainError("capacity_table: beta grid must be non-empty");
  Table t;
  t.comments.push_back("capacity lower bounds: d=" + std::to_string(base.d) +
                       " m=" + detail::format_double(base.m) + " R=" + detail::format_double(base.R) +
                       " delta=" + detail::format_double(base.delta) +
                       " p_fail=" + detail::format_double(base.p_fail) +
                       " refine_passes=" + std::to_string(refine_passes));
  t.columns = {"beta", "a", "b", "C", "w0", "residual", "log_M", "M", "a_dense", "C_dense",
               "residual_dense", "log_M_dense", "M_dense", "sparse_ge_dense"};
  for (double beta : betas) {
    base.beta = beta;
    const CapacityComparison c = compare_capacity(base, refine_passes);
    t.add_row({beta, c.sparse.a, c.sparse.b, c.sparse.C, c.sparse.w0, c.sparse.residual,
               c.sparse.log_M_lower, c.sparse.M_lower, c.dense.a, c.dense.C, c.dense.residual,
               c.dense.log_M_lower, c.dense.M_lower, c.sparse_at_least_dense() ? 1.0 : 0.0});
  }
  return t;
}

}  // namespace gsh
