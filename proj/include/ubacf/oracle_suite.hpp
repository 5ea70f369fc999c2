#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ubacf::oracle {

/// One measured comparison against a dense oracle.
struct SuiteCheck {
  std::string name;
  int instances = 0;
  double worst = 0;     // largest error over the instances
  double tolerance = 0; // pass when worst <= tolerance
  double seconds = 0;

  bool passed() const { return worst <= tolerance; }
};

/// FFT closed-form f_update vs the dense least-squares solve, random shapes
/// up to 8x8x3; error ||df|| / ||f||.
SuiteCheck check_f_subproblem(int instances, std::uint64_t seed, double tolerance = 1e-7);

/// Elementwise h_update vs the dense (lambda I + rho M M^T)^-1 solve with
/// random non-binary masks; max abs error.
SuiteCheck check_h_subproblem(int instances, std::uint64_t seed, double tolerance = 1e-9);

/// admm_solve (200 iterations, lambda = rho = 1, unit-norm 4x4x1 features)
/// vs the KKT minimiser: max abs error in f, objective error, primal residual.
std::vector<SuiteCheck> check_admm_kkt(int instances, std::uint64_t seed, double fTol = 1e-5,
                                       double objTol = 1e-8, double residualTol = 1e-6);

/// forward() with identical stages vs admm_solve truncated at K = 1..maxStages.
SuiteCheck check_unrolling(int instances, int maxStages, std::uint64_t seed,
                           double tolerance = 1e-12);

/// fft2 vs the naive DFT sum.
SuiteCheck check_fft(int instances, std::uint64_t seed, double tolerance = 1e-10);

/// Everything above at the default tolerances.
std::vector<SuiteCheck> run_oracle_suite(std::uint64_t seed);

} // namespace ubacf::oracle
