#include "ubacf/updater.hpp"

#include <string>

namespace ubacf {

UpdaterParams UpdaterParams::initial(Index stageCount, const CropOperator& mask) {
  if (stageCount < 1)
    throw std::invalid_argument("UpdaterParams: at least one stage is required");
  StageParams stage;
  stage.lambda = 1.0;
  stage.rho = 1.0;
  stage.eta = 0.013;
  stage.mask = mask;
  stage.mask.weights.setOnes();
  return UpdaterParams{std::vector<StageParams>(static_cast<std::size_t>(stageCount), stage)};
}

void UpdaterParams::validate() const {
  if (stages.empty())
    throw std::invalid_argument("UpdaterParams: at least one stage is required");
  for (const auto& s : stages) {
    s.validate();
    if (s.mask.fullRows != stages.front().mask.fullRows ||
        s.mask.fullCols != stages.front().mask.fullCols)
      throw ShapeError("UpdaterParams: stages disagree on the grid size");
  }
}

FilterVars UpdaterTape::stageInput(Index k, const CropOperator& mask) const {
  if (k == 0)
    return FilterVars::zeros(mask, z.channels());
  return stages[static_cast<std::size_t>(k - 1)].vars;
}

UpdaterResult forward(const FeatureMap& z, const RealTensor3& y, const RealTensor3& fPrev,
                      const UpdaterParams& params) {
  params.validate();
  z.requireSameShape(fPrev, "forward");
  const CropOperator& firstMask = params.stages.front().mask;
  if (z.rows() != firstMask.fullRows || z.cols() != firstMask.fullCols)
    throw ShapeError("forward: features " + z.shapeString() + " do not match the crop grid");

  UpdaterResult result;
  UpdaterTape& tape = result.tape;
  tape.z = z;
  tape.y = y;
  tape.fPrev = fPrev;
  tape.problem = CorrelationProblem::make(z, y);
  tape.stages.reserve(params.stages.size());

  FilterVars vars = FilterVars::zeros(firstMask, z.channels());
  for (const StageParams& stage : params.stages) {
    vars = admm_iteration(tape.problem, vars, stage);
    RealTensor3 out = interpolate(fPrev, vars.f, stage.eta);
    result.outputs.filters.push_back(out);
    tape.stages.push_back({vars, std::move(out)});
  }
  return result;
}

double stage_loss(const RealTensor3& filter, const FeatureMap& zNext, const RealTensor3& yNext) {
  const RealTensor3 response = cross_correlate(zNext, filter);
  return squaredDistance(yNext, response);
}

double total_loss(const StageOutputs& outputs, const FeatureMap& zNext,
                  const RealTensor3& yNext) {
  double sum = 0;
  for (const auto& f : outputs.filters)
    sum += stage_loss(f, zNext, yNext);
  return sum;
}

} // namespace ubacf
