#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "gsh/experiments.hpp"

namespace gsh {
namespace {

class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* n) { ::setenv("GSH_THREADS", n, 1); }
  ~ThreadsEnv() { ::unsetenv("GSH_THREADS"); }
};

TEST(ParallelFor, VisitsEveryIndexOnce) {
  ThreadsEnv env("4");
  EXPECT_EQ(thread_count(), 4u);
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
  ThreadsEnv env("3");
  std::atomic<int> done{0};
  EXPECT_THROW(parallel_for(50,
                            [&](std::size_t i) {
                              if (i == 17) throw std::runtime_error("boom");
                              ++done;
                            }),
               std::runtime_error);
  EXPECT_EQ(done.load(), 49);
}

TEST(ParallelFor, BadEnvFallsBackToHardware) {
  ThreadsEnv env("zero");
  EXPECT_GE(thread_count(), 1u);
}

TEST(PatternSource, PoolSamplingAndLimits) {
  Matrix m(5, 2);
  for (std::size_t r = 0; r < 5; ++r) m(r, 0) = static_cast<double>(r + 1);
  const auto src = PatternSource::pool({m, std::nullopt, std::nullopt, "five"});
  EXPECT_EQ(src.dim(), 2u);
  Rng rng(61);
  const Matrix s = src.sample(5, rng);
  double sum = 0.0;
  for (std::size_t r = 0; r < 5; ++r) sum += s(r, 0);
  EXPECT_EQ(sum, 15.0);
  EXPECT_THROW(src.sample(6, rng), DomainError);
  EXPECT_THROW(src.sample(0, rng), DomainError);
  EXPECT_NE(src.describe().find("five"), std::string::npos);
}

TEST(PatternSource, SphereRowsHaveRadius) {
  const auto src = PatternSource::sphere(16, 3.0);
  Rng rng(62);
  const Matrix s = src.sample(4, rng);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(l2_norm(s.row_vector(r)), 3.0, 1e-12);
  EXPECT_THROW(PatternSource::sphere(0, 1.0), DimensionError);
  EXPECT_THROW(PatternSource::sphere(4, -1.0), DomainError);
}

CapacityConfig small_capacity() {
  CapacityConfig cfg;
  cfg.pattern_counts = {4, 30};
  cfg.trials = 3;
  cfg.seed = 5;
  cfg.betas = {0.05, 1.0};
  return cfg;
}

TEST(CapacitySweep, TableShapeAndIndependenceFromThreadCount) {
  const auto src = PatternSource::sphere(64, 10.0);
  Table one, many;
  {
    ThreadsEnv env("1");
    one = capacity_sweep(src, small_capacity());
  }
  {
    ThreadsEnv env("4");
    many = capacity_sweep(src, small_capacity());
  }
  EXPECT_EQ(one.rows.size(), 2u * 2u * 2u);
  EXPECT_EQ(one.rows, many.rows);
  EXPECT_EQ(one.columns.front(), "M");
  for (const auto& row : one.rows) {
    EXPECT_GE(row[one.column_index("success_rate")], 0.0);
    EXPECT_LE(row[one.column_index("success_rate")], 1.0);
    EXPECT_EQ(row[one.column_index("trials")], 3.0);
    EXPECT_EQ(row[one.column_index("queries")], row[0]);
  }
  // Few well-spread patterns at moderate β are always completed.
  EXPECT_EQ(lookup_success(one, "M", 4, 2.0, 1.0), 1.0);
  EXPECT_THROW(lookup_success(one, "M", 7, 2.0, 1.0), DomainError);
}

TEST(CapacitySweep, RejectsBadConfig) {
  const auto src = PatternSource::sphere(8, 1.0);
  CapacityConfig cfg = small_capacity();
  cfg.trials = 0;
  EXPECT_THROW(capacity_sweep(src, cfg), DomainError);
  cfg = small_capacity();
  cfg.alphas = {0.5};
  EXPECT_THROW(capacity_sweep(src, cfg), DomainError);
  cfg = small_capacity();
  cfg.pattern_counts = {};
  EXPECT_THROW(capacity_sweep(src, cfg), DomainError);
}

TEST(RobustnessSweep, NoiselessQueriesAreRetrieved) {
  RobustnessConfig cfg;
  cfg.pattern_count = 20;
  cfg.trials = 2;
  cfg.sigmas = {0.0, 0.5, 100.0};
  cfg.betas = {1.0};
  const Table t = robustness_sweep(PatternSource::sphere(32, 4.0), cfg);
  EXPECT_EQ(t.rows.size(), 3u * 2u);
  EXPECT_EQ(lookup_success(t, "sigma", 0.0, 1.0, 1.0), 1.0);
  EXPECT_EQ(lookup_success(t, "sigma", 0.0, 2.0, 1.0), 1.0);
  EXPECT_LT(lookup_success(t, "sigma", 100.0, 2.0, 1.0), 0.5);
  cfg.sigmas = {-1.0};
  EXPECT_THROW(robustness_sweep(PatternSource::sphere(32, 4.0), cfg), DomainError);
}

TEST(BoundSuites, InstancesAreWellPosed) {
  Rng rng(63);
  for (int t = 0; t < 200; ++t) {
    const auto inst = random_bound_instance(rng);
    const Vector xi = inst.bank.pattern(inst.target);
    EXPECT_LE(distance(inst.query, xi), inst.bank.radius() * (1.0 + 1e-12));
    EXPECT_LE(l2_norm(inst.query), inst.bank.max_norm() * (1.0 + 1e-12));
    EXPECT_GE(inst.beta, 0.5);
    EXPECT_LE(inst.beta, 50.0);
  }
}

TEST(BoundSuites, ReproducibleUnderSeed) {
  const auto a = bound_domination_suite(20, 9);
  const auto b = bound_domination_suite(20, 9);
  EXPECT_EQ(a.instances.rows, b.instances.rows);
  const auto w = well_separation_suite(20, 9);
  EXPECT_EQ(w.trials, 20u);
  EXPECT_LE(w.worst_ratio_sparse, 1.0);
}

}  // namespace
}  // namespace gsh
