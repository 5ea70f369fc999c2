#pragma once

#include "ubacf/updater.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ubacf {

struct StageGradient {
  double lambda = 0;
  double rho = 0;
  double eta = 0;
  Eigen::MatrixXd mask; // d/dw, same shape as the stage mask weights
};

/// Gradients of the (weighted) unrolled loss w.r.t. Theta and the inputs.
struct GradientBundle {
  std::vector<StageGradient> stages;
  RealTensor3 z;     // d/dz_t
  RealTensor3 zNext; // d/dz_{t+1}
  RealTensor3 fPrev; // d/df_t
  double loss = 0;   // the loss these gradients belong to
  std::vector<double> stageLosses;

  bool allFinite() const;
};

/// Reverse pass through the unrolled stages recorded in `tape`.
///
/// Differentiates sum_k weight_k * J_k where J_k is stage_loss of stage k's
/// interpolated filter on (zNext, yNext). An empty `stageWeights` means
/// weight 1 for every stage, i.e. total_loss.
GradientBundle backward(const UpdaterTape& tape, const UpdaterParams& params,
                        const FeatureMap& zNext, const RealTensor3& yNext,
                        const std::vector<double>& stageWeights = {});

/// Vector-Jacobian products of the individual primitives used by backward.
namespace vjp {

/// Z f: channel-summed correlation of z (given by its spectrum) with f.
RealTensor3 correlate(const ComplexSpectrum& zHat, const RealTensor3& f);

/// Z^T e: adjoint of `correlate` with respect to the filter.
RealTensor3 correlateFilterAdjoint(const ComplexSpectrum& zHat, const RealTensor3& e);

/// d/dz <e, correlate(z, f)>, i.e. the circular convolution of e with each f_l.
RealTensor3 correlateFeatureAdjoint(const RealTensor3& e, const RealTensor3& f);

/// (Z^T Z + rho I)^-1 v. The operator is symmetric, so this is its own VJP.
RealTensor3 solveFilterSystem(const ComplexSpectrum& zHat, const RealTensor3& v, double rho);

struct HStepGradient {
  RealTensor3 window; // d/d extract_window(f + g)
  double lambda = 0;
  double rho = 0;
  Eigen::MatrixXd weights;
};

/// VJP of h = rho w c / (lambda + rho w^2) given the unweighted window c.
HStepGradient hStep(const RealTensor3& window, const RealTensor3& upstream,
                    const StageParams& params);

} // namespace vjp

} // namespace ubacf
