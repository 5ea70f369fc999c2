#pragma once

#include "ubacf/bacf.hpp"

#include <vector>

namespace ubacf {

/// Theta = {Theta^(1), ..., Theta^(K)}.
struct UpdaterParams {
  std::vector<StageParams> stages;

  Index stageCount() const { return static_cast<Index>(stages.size()); }

  /// K stages at lambda = rho = 1, eta = 0.013 with the binary crop `mask`.
  static UpdaterParams initial(Index stageCount, const CropOperator& mask);

  void validate() const;

  friend bool operator==(const UpdaterParams&, const UpdaterParams&) = default;
};

/// Interpolated filters f_{t+1}^(k), k = 1..K.
struct StageOutputs {
  std::vector<RealTensor3> filters;

  const RealTensor3& final() const { return filters.back(); }
};

struct StageRecord {
  FilterVars vars;    // h^(k), g^(k), f^(k)
  RealTensor3 output; // f_{t+1}^(k)
};

/// Everything the reverse pass needs from one forward evaluation.
struct UpdaterTape {
  FeatureMap z;
  RealTensor3 y;
  RealTensor3 fPrev;
  CorrelationProblem problem; // cached spectra of z and y
  std::vector<StageRecord> stages;

  /// f^(k-1), g^(k-1) feeding stage k (0-based index); zeros for the first.
  FilterVars stageInput(Index k, const CropOperator& mask) const;
};

struct UpdaterResult {
  StageOutputs outputs;
  UpdaterTape tape;
};

/// K unrolled ADMM stages from f^(0) = g^(0) = 0, each followed by
/// interpolation against fPrev with that stage's eta.
UpdaterResult forward(const FeatureMap& z, const RealTensor3& y, const RealTensor3& fPrev,
                      const UpdaterParams& params);

/// ||y_next - sum_l z_next,l * filter_l||^2
double stage_loss(const RealTensor3& filter, const FeatureMap& zNext, const RealTensor3& yNext);

double total_loss(const StageOutputs& outputs, const FeatureMap& zNext,
                  const RealTensor3& yNext);

} // namespace ubacf
