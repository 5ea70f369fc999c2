#pragma once

#include "ubacf/fft.hpp"
#include "ubacf/tensor.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ubacf {

/// The crop operator M of the BACF model: a fixed rectangular window of the
/// full grid followed by a per-cell weight mask shared across channels.
///
/// With weights == 1 this is the binary selection matrix. Keeping the
/// weights diagonal keeps M M^T diagonal, so the h-subproblem stays
/// elementwise.
struct CropOperator {
  Index fullRows = 0;
  Index fullCols = 0;
  Index top = 0;
  Index left = 0;
  Eigen::MatrixXd weights; // cropRows() x cropCols()

  Index cropRows() const { return weights.rows(); }
  Index cropCols() const { return weights.cols(); }

  /// Binary crop of size cropRows x cropCols centered on the full grid.
  static CropOperator centered(Index fullRows, Index fullCols, Index cropRows,
                               Index cropCols);

  void validate() const;

  friend bool operator==(const CropOperator&, const CropOperator&) = default;
};

/// One unrolled ADMM stage: {lambda, rho, eta, M}.
struct StageParams {
  double lambda = 1.0;
  double rho = 1.0;
  double eta = 0.013;
  CropOperator mask;

  void validate() const;

  friend bool operator==(const StageParams&, const StageParams&) = default;
};

/// ADMM variables: full-support filter f, cropped filter h, scaled dual g.
struct FilterVars {
  RealTensor3 f; // m x n x L
  RealTensor3 h; // cropRows x cropCols x L
  RealTensor3 g; // m x n x L

  static FilterVars zeros(const CropOperator& mask, Index channels);
};

struct ObjectiveBreakdown {
  double dataTerm = 0;           // 0.5 * ||y - sum_l z_l * f_l||^2
  double regTerm = 0;            // 0.5 * lambda * ||h||^2
  double constraintResidual = 0; // sum_l ||f_l - M^T h_l||^2

  double objective() const { return dataTerm + regTerm; }
};

/// Per-frequency solver for the f-subproblem.
enum class FilterSolve {
  ShermanMorrison, // rank-one closed form over the channel vector
  DenseChannels,   // explicit L x L Hermitian solve per bin
};

/// Frequency-domain data shared by every f-solve on the same (z, y).
struct CorrelationProblem {
  ComplexSpectrum zHat;    // fft2(z)
  ComplexSpectrum yHat;    // fft2(y), single channel
  ComplexSpectrum dataRhs; // zHat_l * conj(yHat): spectrum of Z^T y

  static CorrelationProblem make(const RealTensor3& z, const RealTensor3& y);
  static CorrelationProblem make(const RealTensor3& z, const ComplexSpectrum& yHat);

  Index rows() const { return zHat.rows(); }
  Index cols() const { return zHat.cols(); }
  Index channels() const { return zHat.channels(); }
};

/// Weighted crop: (M x)_{d,l} = w_d * x_l(window cell d).
RealTensor3 apply_crop(const CropOperator& mask, const RealTensor3& x);

/// Adjoint of apply_crop: weight by w and zero-pad into the full grid.
RealTensor3 apply_crop_adjoint(const CropOperator& mask, const RealTensor3& h);

/// Unweighted window extraction (the binary part of M).
RealTensor3 extract_window(const CropOperator& mask, const RealTensor3& x);

/// Unweighted zero-padding embed, adjoint of extract_window.
RealTensor3 embed_window(const CropOperator& mask, const RealTensor3& h);

/// argmin_h  lambda/2 ||h||^2 + rho/2 sum_l ||f_l - M^T h_l + g_l||^2
RealTensor3 h_update(const FilterVars& vars, const StageParams& params);

/// g + f - M^T h_new
RealTensor3 g_update(const FilterVars& vars, const RealTensor3& newH,
                     const CropOperator& mask);

/// Solve (Z^T Z + rho I) f = rhs per frequency bin, where Z is the
/// channel-summed correlation with z. All arguments are spectra.
ComplexSpectrum solve_filter_system(const ComplexSpectrum& zHat, const ComplexSpectrum& rhsHat,
                                    double rho,
                                    FilterSolve method = FilterSolve::ShermanMorrison);

/// argmin_f  1/2 ||y - sum_l z_l * f_l||^2 + rho/2 sum_l ||f_l - M^T h_l + g_l||^2
RealTensor3 f_update(const CorrelationProblem& problem, const RealTensor3& newH,
                     const RealTensor3& newG, const StageParams& params,
                     FilterSolve method = FilterSolve::ShermanMorrison);

RealTensor3 f_update(const FeatureMap& z, const ComplexSpectrum& yHat, const FilterVars& vars,
                     const RealTensor3& newH, const RealTensor3& newG,
                     const StageParams& params,
                     FilterSolve method = FilterSolve::ShermanMorrison);

/// (1 - eta) * previous + eta * next
RealTensor3 interpolate(const RealTensor3& previous, const RealTensor3& next, double eta);

ObjectiveBreakdown bacf_objective(const FeatureMap& z, const RealTensor3& y,
                                  const FilterVars& vars, const StageParams& params);

/// One h -> g -> f sweep starting from `vars`.
FilterVars admm_iteration(const CorrelationProblem& problem, const FilterVars& vars,
                          const StageParams& params);

struct AdmmResult {
  FilterVars vars;
  int iterations = 0;
  /// ||f - M^T h|| after each iteration.
  std::vector<double> primalResiduals;

  double primalResidual() const {
    return primalResiduals.empty() ? 0.0 : primalResiduals.back();
  }
};

/// Runs ADMM from f = g = 0 until ||f - M^T h|| <= tol or maxIters.
AdmmResult admm_solve(const FeatureMap& z, const RealTensor3& y, const StageParams& params,
                      int maxIters, double tol);

} // namespace ubacf
