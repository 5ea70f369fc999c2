#include "ubacf/bacf.hpp"

#include <cmath>
#include <string>

namespace ubacf {

namespace {

constexpr double kDegenerateDenominator = 1e-12;

void requireMaskFits(const CropOperator& mask, const RealTensor3& full, const char* what) {
  if (full.rows() != mask.fullRows || full.cols() != mask.fullCols)
    throw ShapeError(std::string(what) + ": tensor " + full.shapeString() +
                     " does not match crop full size " + std::to_string(mask.fullRows) + "x" +
                     std::to_string(mask.fullCols));
}

void requireCropShape(const CropOperator& mask, const RealTensor3& h, const char* what) {
  if (h.rows() != mask.cropRows() || h.cols() != mask.cropCols())
    throw ShapeError(std::string(what) + ": tensor " + h.shapeString() +
                     " does not match crop size " + std::to_string(mask.cropRows()) + "x" +
                     std::to_string(mask.cropCols()));
}

} // namespace

CropOperator CropOperator::centered(Index fullRows, Index fullCols, Index cropRows,
                                    Index cropCols) {
  CropOperator op;
  op.fullRows = fullRows;
  op.fullCols = fullCols;
  op.top = (fullRows - cropRows) / 2;
  op.left = (fullCols - cropCols) / 2;
  op.weights = Eigen::MatrixXd::Ones(cropRows, cropCols);
  op.validate();
  return op;
}

void CropOperator::validate() const {
  if (fullRows < 1 || fullCols < 1 || cropRows() < 1 || cropCols() < 1)
    throw ShapeError("CropOperator: empty grid or crop");
  if (top < 0 || left < 0 || top + cropRows() > fullRows || left + cropCols() > fullCols)
    throw ShapeError("CropOperator: crop window outside the full grid");
  if (!weights.allFinite())
    throw NumericalError("CropOperator: non-finite mask weights");
}

void StageParams::validate() const {
  if (!(lambda >= 0) || !std::isfinite(lambda))
    throw NumericalError("StageParams: lambda must be finite and >= 0");
  if (!(rho > 0) || !std::isfinite(rho))
    throw NumericalError("StageParams: rho must be finite and > 0");
  if (!(eta >= 0 && eta <= 1))
    throw NumericalError("StageParams: eta must lie in [0, 1]");
  mask.validate();
}

FilterVars FilterVars::zeros(const CropOperator& mask, Index channels) {
  return {RealTensor3(mask.fullRows, mask.fullCols, channels),
          RealTensor3(mask.cropRows(), mask.cropCols(), channels),
          RealTensor3(mask.fullRows, mask.fullCols, channels)};
}

CorrelationProblem CorrelationProblem::make(const RealTensor3& z, const RealTensor3& y) {
  if (y.channels() != 1 || y.rows() != z.rows() || y.cols() != z.cols())
    throw ShapeError("CorrelationProblem: label " + y.shapeString() +
                     " does not match features " + z.shapeString());
  return make(z, fft2(y));
}

CorrelationProblem CorrelationProblem::make(const RealTensor3& z, const ComplexSpectrum& yHat) {
  if (yHat.channels() != 1 || yHat.rows() != z.rows() || yHat.cols() != z.cols())
    throw ShapeError("CorrelationProblem: label spectrum " + yHat.shapeString() +
                     " does not match features " + z.shapeString());
  CorrelationProblem p;
  p.zHat = fft2(z);
  p.yHat = yHat;
  p.dataRhs = ComplexSpectrum(z.rows(), z.cols(), z.channels());
  const Eigen::MatrixXcd yConj = yHat[0].conjugate();
  for (Index l = 0; l < z.channels(); ++l)
    p.dataRhs[l] = p.zHat[l].cwiseProduct(yConj);
  return p;
}

RealTensor3 extract_window(const CropOperator& mask, const RealTensor3& x) {
  requireMaskFits(mask, x, "extract_window");
  RealTensor3 out(mask.cropRows(), mask.cropCols(), x.channels());
  for (Index l = 0; l < x.channels(); ++l)
    out[l] = x[l].block(mask.top, mask.left, mask.cropRows(), mask.cropCols());
  return out;
}

RealTensor3 embed_window(const CropOperator& mask, const RealTensor3& h) {
  requireCropShape(mask, h, "embed_window");
  RealTensor3 out(mask.fullRows, mask.fullCols, h.channels());
  for (Index l = 0; l < h.channels(); ++l)
    out[l].block(mask.top, mask.left, mask.cropRows(), mask.cropCols()) = h[l];
  return out;
}

RealTensor3 apply_crop(const CropOperator& mask, const RealTensor3& x) {
  RealTensor3 out = extract_window(mask, x);
  for (Index l = 0; l < out.channels(); ++l)
    out[l] = out[l].cwiseProduct(mask.weights);
  return out;
}

RealTensor3 apply_crop_adjoint(const CropOperator& mask, const RealTensor3& h) {
  requireCropShape(mask, h, "apply_crop_adjoint");
  RealTensor3 out(mask.fullRows, mask.fullCols, h.channels());
  for (Index l = 0; l < h.channels(); ++l)
    out[l].block(mask.top, mask.left, mask.cropRows(), mask.cropCols()) =
        h[l].cwiseProduct(mask.weights);
  return out;
}

RealTensor3 h_update(const FilterVars& vars, const StageParams& params) {
  vars.f.requireSameShape(vars.g, "h_update");
  if (!(params.rho > 0))
    throw NumericalError("h_update: rho must be positive");
  const CropOperator& mask = params.mask;
  const Eigen::MatrixXd w = mask.weights;
  const Eigen::MatrixXd denom = (params.rho * w.array().square() + params.lambda).matrix();
  if (denom.minCoeff() < kDegenerateDenominator)
    throw NumericalError("h_update: lambda + rho * w^2 is degenerate");
  const Eigen::MatrixXd gain = (params.rho * w.array() / denom.array()).matrix();

  RealTensor3 h = extract_window(mask, vars.f + vars.g);
  for (Index l = 0; l < h.channels(); ++l)
    h[l] = h[l].cwiseProduct(gain);
  return h;
}

RealTensor3 g_update(const FilterVars& vars, const RealTensor3& newH, const CropOperator& mask) {
  vars.f.requireSameShape(vars.g, "g_update");
  RealTensor3 g = vars.g + vars.f;
  g -= apply_crop_adjoint(mask, newH);
  return g;
}

ComplexSpectrum solve_filter_system(const ComplexSpectrum& zHat, const ComplexSpectrum& rhsHat,
                                    double rho, FilterSolve method) {
  zHat.requireSameShape(rhsHat, "solve_filter_system");
  if (!(rho > 0))
    throw NumericalError("solve_filter_system: rho must be positive");
  const Index m = zHat.rows();
  const Index n = zHat.cols();
  const Index L = zHat.channels();
  ComplexSpectrum out(m, n, L);

  if (method == FilterSolve::ShermanMorrison) {
    // (z z^H + rho I)^-1 b = (b - z (z^H b) / (rho + z^H z)) / rho
    Eigen::MatrixXd energy = Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXcd projection = Eigen::MatrixXcd::Zero(m, n);
    for (Index l = 0; l < L; ++l) {
      energy += zHat[l].cwiseAbs2();
      projection += zHat[l].conjugate().cwiseProduct(rhsHat[l]);
    }
    const Eigen::MatrixXcd coeff =
        projection.array() / (energy.array() + rho).cast<std::complex<double>>();
    for (Index l = 0; l < L; ++l)
      out[l] = (rhsHat[l] - zHat[l].cwiseProduct(coeff)) / rho;
    return out;
  }

  Eigen::MatrixXcd system(L, L);
  Eigen::VectorXcd zv(L), bv(L);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < m; ++r) {
      for (Index l = 0; l < L; ++l) {
        zv(l) = zHat(r, c, l);
        bv(l) = rhsHat(r, c, l);
      }
      system = zv * zv.adjoint();
      system.diagonal().array() += rho;
      const Eigen::VectorXcd sol = system.ldlt().solve(bv);
      for (Index l = 0; l < L; ++l)
        out(r, c, l) = sol(l);
    }
  return out;
}

RealTensor3 f_update(const CorrelationProblem& problem, const RealTensor3& newH,
                     const RealTensor3& newG, const StageParams& params, FilterSolve method) {
  if (!(params.rho > 0))
    throw NumericalError("f_update: rho must be positive");
  if (newG.rows() != problem.rows() || newG.cols() != problem.cols() ||
      newG.channels() != problem.channels())
    throw ShapeError("f_update: dual " + newG.shapeString() + " does not match features " +
                     problem.zHat.shapeString());
  // rhs = Z^T y + rho (M^T h - g)
  RealTensor3 anchor = apply_crop_adjoint(params.mask, newH);
  anchor -= newG;
  ComplexSpectrum rhs = fft2(anchor);
  rhs *= std::complex<double>(params.rho, 0.0);
  rhs += problem.dataRhs;
  return ifft2(solve_filter_system(problem.zHat, rhs, params.rho, method));
}

RealTensor3 f_update(const FeatureMap& z, const ComplexSpectrum& yHat, const FilterVars& vars,
                     const RealTensor3& newH, const RealTensor3& newG, const StageParams& params,
                     FilterSolve method) {
  z.requireSameShape(vars.f, "f_update");
  return f_update(CorrelationProblem::make(z, yHat), newH, newG, params, method);
}

RealTensor3 interpolate(const RealTensor3& previous, const RealTensor3& next, double eta) {
  previous.requireSameShape(next, "interpolate");
  if (!(eta >= 0 && eta <= 1))
    throw std::invalid_argument("interpolate: eta must lie in [0, 1]");
  RealTensor3 out = previous * (1.0 - eta);
  out.axpy(eta, next);
  return out;
}

ObjectiveBreakdown bacf_objective(const FeatureMap& z, const RealTensor3& y,
                                  const FilterVars& vars, const StageParams& params) {
  ObjectiveBreakdown out;
  const RealTensor3 residual = y - cross_correlate(z, vars.f);
  out.dataTerm = 0.5 * residual.squaredNorm();
  out.regTerm = 0.5 * params.lambda * vars.h.squaredNorm();
  out.constraintResidual = squaredDistance(vars.f, apply_crop_adjoint(params.mask, vars.h));
  return out;
}

FilterVars admm_iteration(const CorrelationProblem& problem, const FilterVars& vars,
                          const StageParams& params) {
  FilterVars next;
  next.h = h_update(vars, params);
  next.g = g_update(vars, next.h, params.mask);
  next.f = f_update(problem, next.h, next.g, params);
  return next;
}

AdmmResult admm_solve(const FeatureMap& z, const RealTensor3& y, const StageParams& params,
                      int maxIters, double tol) {
  if (maxIters < 1)
    throw std::invalid_argument("admm_solve: maxIters must be >= 1");
  if (!(tol > 0))
    throw std::invalid_argument("admm_solve: tol must be positive");
  params.validate();
  if (z.rows() != params.mask.fullRows || z.cols() != params.mask.fullCols)
    throw ShapeError("admm_solve: features " + z.shapeString() + " do not match the crop grid");

  const CorrelationProblem problem = CorrelationProblem::make(z, y);
  AdmmResult result;
  result.vars = FilterVars::zeros(params.mask, z.channels());
  for (int it = 0; it < maxIters; ++it) {
    result.vars = admm_iteration(problem, result.vars, params);
    if (!result.vars.f.allFinite() || !result.vars.g.allFinite() || !result.vars.h.allFinite())
      throw NumericalError("admm_solve: non-finite iterate at iteration " +
                           std::to_string(it + 1) + " (rho too small?)");
    const double residual = std::sqrt(
        squaredDistance(result.vars.f, apply_crop_adjoint(params.mask, result.vars.h)));
    result.primalResiduals.push_back(residual);
    result.iterations = it + 1;
    if (residual <= tol)
      break;
  }
  return result;
}

} // namespace ubacf
