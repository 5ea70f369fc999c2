#pragma once

#include "ubacf/grad.hpp"
#include "ubacf/representor.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ubacf {

/// One scalar input to perturb, with the analytic derivative to compare to.
struct FdProbe {
  std::string name;
  double* value = nullptr;
  double analytic = 0;
};

struct FdEntry {
  std::string name;
  double analytic = 0;
  double numeric = 0;
  double absError = 0;
  double relError = 0;
  bool ok = true;
};

struct FdReport {
  std::vector<FdEntry> entries;
  double step = 0;
  double tolerance = 0;
  double absFloor = 0;
  double maxRelError = 0; // over entries whose absolute error exceeds absFloor
  double maxAbsError = 0;
  bool passed = true;

  void writeCsv(std::ostream& os) const;
};

/// Central differences (loss(x + step) - loss(x - step)) / (2 step) for each
/// probe. An entry passes when |a - n| <= max(tol * max(|a|, |n|), absFloor).
FdReport check_gradients(const std::vector<FdProbe>& probes, const std::function<double()>& loss,
                         double step, double tolerance, double absFloor = 1e-7);

/// Random instance for finite_diff_check.
struct FdSetup {
  Index rows = 6;
  Index cols = 6;
  Index channels = 2;
  Index stages = 2;
  std::uint64_t seed = 1;
  bool randomMasks = true;
  /// Features come from random patches through a learnable conv layer and
  /// W_F entries are probed instead of z_t / z_{t+1}.
  bool learnableFeatures = false;
  Index tensorSamples = 64; // per tensor, capped at its size
  int cellSize = 2;
};

/// Analytic gradients of total_loss (backward + representor_backward) against
/// central finite differences on a random instance.
FdReport finite_diff_check(const FdSetup& setup, double step = 1e-4, double tolerance = 1e-4);

} // namespace ubacf
