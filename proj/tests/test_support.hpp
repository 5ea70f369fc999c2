#pragma once

#include "ubacf/bacf.hpp"

#include <random>

namespace ubacf::testing {

inline double relativeError(const RealTensor3& a, const RealTensor3& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return std::sqrt(squaredDistance(a, b)) / denom;
}

inline double maxAbsDiff(const RealTensor3& a, const RealTensor3& b) {
  return (a - b).maxAbs();
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random features normalised to unit Frobenius norm, the scale at which
/// lambda = rho = 1 is a well-matched ADMM penalty.
inline RealTensor3 unitFeatures(std::mt19937_64& rng, Index rows, Index cols, Index channels) {
  RealTensor3 z = RealTensor3::Random(rows, cols, channels, rng);
  z *= 1.0 / z.norm();
  return z;
}

/// Centered crop covering roughly half of each side, with optional random weights.
inline CropOperator randomMask(std::mt19937_64& rng, Index rows, Index cols, bool randomWeights) {
  const Index dh = std::max<Index>(1, (rows + 1) / 2);
  const Index dw = std::max<Index>(1, (cols + 1) / 2);
  CropOperator mask = CropOperator::centered(rows, cols, dh, dw);
  if (randomWeights)
    for (Index j = 0; j < dw; ++j)
      for (Index i = 0; i < dh; ++i)
        mask.weights(i, j) = uniform(rng, 0.3, 1.7);
  return mask;
}

inline StageParams randomStage(std::mt19937_64& rng, Index rows, Index cols, bool randomWeights) {
  StageParams p;
  p.lambda = uniform(rng, 0.3, 2.0);
  p.rho = uniform(rng, 0.3, 2.0);
  p.eta = uniform(rng, 0.1, 0.9);
  p.mask = randomMask(rng, rows, cols, randomWeights);
  return p;
}

} // namespace ubacf::testing
