#pragma once

// Dense, spatial-domain reference implementations. Nothing in here touches
// the FFT path; every routine works on explicit matrices built from the
// spatial definitions, so it can check the frequency-domain closed forms.

#include "ubacf/bacf.hpp"

#include <Eigen/Dense>

namespace ubacf::oracle {

/// Stack a tensor as [channel][row][col] (channel-major, row-major planes).
Eigen::VectorXd flatten(const RealTensor3& x);
RealTensor3 unflatten(const Eigen::VectorXd& v, Index rows, Index cols, Index channels);

/// O((mn)^2) DFT summation per channel.
ComplexSpectrum naive_dft(const RealTensor3& x);

/// r(u,v) = sum_l sum_{x,y} z_l((x+u) mod m, (y+v) mod n) f_l(x,y)
RealTensor3 spatial_correlate(const RealTensor3& z, const RealTensor3& f);

/// Dense (mn) x (mnL) matrix of f -> spatial_correlate(z, f).
Eigen::MatrixXd correlation_matrix(const RealTensor3& z);

/// Dense (D L) x (m n L) matrix of M (x) I_L for the weighted crop.
Eigen::MatrixXd crop_matrix(const CropOperator& mask, Index channels);

/// (lambda I + rho (M M^T (x) I_L))^-1 rho (M (x) I_L)(f + g), dense solve.
RealTensor3 dense_h_solve(const FilterVars& vars, const StageParams& params);

/// argmin_f 1/2||y - Z f||^2 + rho/2 ||f - M^T h + g||^2 by dense normal equations.
RealTensor3 dense_f_solve(const RealTensor3& z, const RealTensor3& y, const RealTensor3& h,
                          const RealTensor3& g, const StageParams& params);

/// Constrained BACF minimiser: h = (M Z^T Z M^T + lambda I)^-1 M Z^T y, f = M^T h.
FilterVars kkt_solve(const RealTensor3& z, const RealTensor3& y, const StageParams& params);

/// 1/2||y - Z f||^2 + lambda/2 ||h||^2 with explicit loops.
double naive_objective(const RealTensor3& z, const RealTensor3& y, const FilterVars& vars,
                       const StageParams& params);

/// Same-size zero-padded convolution with explicit loops.
RealTensor3 naive_conv(const RealTensor3& x, const std::vector<Eigen::MatrixXd>& kernels,
                       const Eigen::VectorXd& bias, Index outChannels);

} // namespace ubacf::oracle
