#include "ubacf/grad.hpp"

#include <string>

namespace ubacf {

bool GradientBundle::allFinite() const {
  for (const auto& s : stages)
    if (!std::isfinite(s.lambda) || !std::isfinite(s.rho) || !std::isfinite(s.eta) ||
        !s.mask.allFinite())
      return false;
  return z.allFinite() && zNext.allFinite() && fPrev.allFinite() && std::isfinite(loss);
}

namespace vjp {

RealTensor3 correlate(const ComplexSpectrum& zHat, const RealTensor3& f) {
  return ifft2(correlateSpectra(zHat, fft2(f)));
}

RealTensor3 correlateFilterAdjoint(const ComplexSpectrum& zHat, const RealTensor3& e) {
  if (e.channels() != 1 || e.rows() != zHat.rows() || e.cols() != zHat.cols())
    throw ShapeError("correlateFilterAdjoint: upstream " + e.shapeString() +
                     " does not match features " + zHat.shapeString());
  const Eigen::MatrixXcd eConj = fft2(e)[0].conjugate();
  ComplexSpectrum out(zHat.rows(), zHat.cols(), zHat.channels());
  for (Index l = 0; l < zHat.channels(); ++l)
    out[l] = zHat[l].cwiseProduct(eConj);
  return ifft2(out);
}

RealTensor3 correlateFeatureAdjoint(const RealTensor3& e, const RealTensor3& f) {
  if (e.channels() != 1 || e.rows() != f.rows() || e.cols() != f.cols())
    throw ShapeError("correlateFeatureAdjoint: upstream " + e.shapeString() +
                     " does not match filter " + f.shapeString());
  const Eigen::MatrixXcd eHat = fft2(e)[0];
  ComplexSpectrum fHat = fft2(f);
  for (Index l = 0; l < fHat.channels(); ++l)
    fHat[l] = fHat[l].cwiseProduct(eHat);
  return ifft2(fHat);
}

RealTensor3 solveFilterSystem(const ComplexSpectrum& zHat, const RealTensor3& v, double rho) {
  return ifft2(solve_filter_system(zHat, fft2(v), rho));
}

HStepGradient hStep(const RealTensor3& window, const RealTensor3& upstream,
                    const StageParams& params) {
  window.requireSameShape(upstream, "hStep");
  const Eigen::ArrayXXd w = params.mask.weights.array();
  const double lambda = params.lambda;
  const double rho = params.rho;
  const Eigen::ArrayXXd den = lambda + rho * w.square();
  const Eigen::ArrayXXd den2 = den.square();
  const Eigen::ArrayXXd gain = rho * w / den;

  HStepGradient out;
  out.window = RealTensor3(window.rows(), window.cols(), window.channels());
  Eigen::ArrayXXd dGain = Eigen::ArrayXXd::Zero(w.rows(), w.cols());
  for (Index l = 0; l < window.channels(); ++l) {
    out.window[l] = (upstream[l].array() * gain).matrix();
    dGain += upstream[l].array() * window[l].array();
  }
  // gain = rho w / (lambda + rho w^2)
  out.lambda = (dGain * (-rho * w / den2)).sum();
  out.rho = (dGain * (lambda * w / den2)).sum();
  out.weights = (dGain * (rho * (lambda - rho * w.square()) / den2)).matrix();
  return out;
}

} // namespace vjp

GradientBundle backward(const UpdaterTape& tape, const UpdaterParams& params,
                        const FeatureMap& zNext, const RealTensor3& yNext,
                        const std::vector<double>& stageWeights) {
  const Index K = params.stageCount();
  if (static_cast<Index>(tape.stages.size()) != K)
    throw std::invalid_argument("backward: tape has " + std::to_string(tape.stages.size()) +
                                " stages but params have " + std::to_string(K));
  if (!stageWeights.empty() && static_cast<Index>(stageWeights.size()) != K)
    throw std::invalid_argument("backward: one loss weight per stage is required");
  zNext.requireSameShape(tape.z, "backward");
  if (yNext.channels() != 1 || yNext.rows() != zNext.rows() || yNext.cols() != zNext.cols())
    throw ShapeError("backward: label " + yNext.shapeString() + " does not match features");

  const Index m = tape.z.rows();
  const Index n = tape.z.cols();
  const Index L = tape.z.channels();
  const ComplexSpectrum& zHat = tape.problem.zHat;
  const ComplexSpectrum zNextHat = fft2(zNext);

  GradientBundle grads;
  grads.stages.resize(static_cast<std::size_t>(K));
  grads.stageLosses.assign(static_cast<std::size_t>(K), 0.0);
  grads.z = RealTensor3(m, n, L);
  grads.zNext = RealTensor3(m, n, L);
  grads.fPrev = RealTensor3(m, n, L);

  // Adjoints flowing into f^(k) and g^(k) from stage k + 1.
  RealTensor3 adjF(m, n, L);
  RealTensor3 adjG(m, n, L);

  for (Index k = K - 1; k >= 0; --k) {
    const StageParams& stage = params.stages[static_cast<std::size_t>(k)];
    const StageRecord& rec = tape.stages[static_cast<std::size_t>(k)];
    StageGradient& sg = grads.stages[static_cast<std::size_t>(k)];
    const double weight = stageWeights.empty() ? 1.0 : stageWeights[static_cast<std::size_t>(k)];

    // J_k = ||Z' F_k - y'||^2
    const RealTensor3 residual = vjp::correlate(zNextHat, rec.output) - yNext;
    const double stageLoss = residual.squaredNorm();
    grads.stageLosses[static_cast<std::size_t>(k)] = stageLoss;
    grads.loss += weight * stageLoss;

    RealTensor3 dOutput(m, n, L);
    if (weight != 0.0) {
      const RealTensor3 scaled = residual * (2.0 * weight);
      dOutput = vjp::correlateFilterAdjoint(zNextHat, scaled);
      grads.zNext += vjp::correlateFeatureAdjoint(scaled, rec.output);
    }

    // F_k = eta f^(k) + (1 - eta) f_t
    sg.eta = dOutput.dot(rec.vars.f - tape.fPrev);
    grads.fPrev.axpy(1.0 - stage.eta, dOutput);
    RealTensor3 vF = adjF;
    vF.axpy(stage.eta, dOutput);

    // f^(k) = A^-1 (Z^T y + rho a),  A = Z^T Z + rho I,  a = M^T h^(k) - g^(k)
    const RealTensor3 u = vjp::solveFilterSystem(zHat, vF, stage.rho);
    const RealTensor3 anchor = apply_crop_adjoint(stage.mask, rec.vars.h) - rec.vars.g;
    sg.rho = u.dot(anchor - rec.vars.f);
    {
      const RealTensor3 fitResidual = tape.y - vjp::correlate(zHat, rec.vars.f);
      const RealTensor3 zu = vjp::correlate(zHat, u);
      grads.z += vjp::correlateFeatureAdjoint(fitResidual, u);
      grads.z -= vjp::correlateFeatureAdjoint(zu, rec.vars.f);
    }

    // g^(k) = g^(k-1) + f^(k-1) - M^T h^(k)
    RealTensor3 vG = adjG;
    vG.axpy(-stage.rho, u);
    RealTensor3 vPadded = u * stage.rho; // adjoint on M^T h^(k)
    vPadded -= vG;

    // M^T h = embed(w . h)
    const RealTensor3 vWindow = extract_window(stage.mask, vPadded);
    RealTensor3 vH(vWindow.rows(), vWindow.cols(), L);
    sg.mask = Eigen::MatrixXd::Zero(stage.mask.cropRows(), stage.mask.cropCols());
    for (Index l = 0; l < L; ++l) {
      vH[l] = vWindow[l].cwiseProduct(stage.mask.weights);
      sg.mask += rec.vars.h[l].cwiseProduct(vWindow[l]);
    }

    // h^(k) = gain . extract_window(f^(k-1) + g^(k-1))
    const FilterVars in = tape.stageInput(k, stage.mask);
    const vjp::HStepGradient hg = vjp::hStep(extract_window(stage.mask, in.f + in.g), vH, stage);
    sg.lambda = hg.lambda;
    sg.rho += hg.rho;
    sg.mask += hg.weights;
    const RealTensor3 vIn = embed_window(stage.mask, hg.window);

    adjF = vG + vIn;
    adjG = vG + vIn;
  }
  return grads;
}

} // namespace ubacf
