// Stores random patterns, hides half of each, and compares how dense and sparse
// retrieval fill in the missing half. Usage: retrieve_demo [d] [M] [beta] [seed]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "gsh/gsh.hpp"

int main(int argc, char** argv) {
  const std::size_t d = argc > 1 ? std::stoul(argv[1]) : 128;
  const std::size_t M = argc > 2 ? std::stoul(argv[2]) : 64;
  const double beta = argc > 3 ? std::stod(argv[3]) : 0.5;
  const std::uint64_t seed = argc > 4 ? std::stoull(argv[4]) : 1;

  try {
    gsh::Rng rng(seed);
    const gsh::Matrix stored = gsh::PatternSource::sphere(d, 4.0).sample(M, rng);
    const gsh::MemoryBank bank = gsh::MemoryBank::from_rows(stored);
    const gsh::Matrix queries = gsh::corrupt_rows(stored, gsh::CorruptionSpec::half_mask(seed));

    std::printf("d=%zu M=%zu beta=%g  (half of every pattern zeroed)\n\n", d, M, beta);
    std::printf("%6s %9s %10s %12s %14s\n", "alpha", "success", "mean_err", "mean_support", "first_energies");
    for (double a : {1.0, 1.5, 2.0, 3.0}) {
      const gsh::HopfieldConfig cfg{gsh::Alpha(a), beta, 16, 1e-8};
      std::size_t hits = 0, support = 0;
      double err_sum = 0.0;
      std::string energies;
      for (std::size_t q = 0; q < M; ++q) {
        const auto trace = gsh::retrieve(bank, queries.row_vector(q), cfg);
        const double err = gsh::retrieval_cosine_error(trace.final_state(), stored.row_vector(q));
        err_sum += err;
        if (err <= 0.2) ++hits;
        support += gsh::retrieval_weights(bank, trace.final_state(), cfg).p.support().size();
        if (q == 0) {
          for (std::size_t s = 0; s < trace.energies.size() && s < 3; ++s) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s%.3f", s ? " " : "", trace.energies[s]);
            energies += buf;
          }
        }
      }
      std::printf("%6.2f %9.3f %10.4f %12.2f   %s\n", a, static_cast<double>(hits) / M, err_sum / M,
                  static_cast<double>(support) / M, energies.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "retrieve_demo: %s\n", e.what());
    return 1;
  }
  return 0;
}
