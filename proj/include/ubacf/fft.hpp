#pragma once

#include "ubacf/tensor.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace ubacf {

// Conventions: unnormalised forward DFT, 1/(mn) on the inverse.
//
//   cross_correlate(z, f)(u, v) = sum_l sum_{x,y} z_l(x+u, y+v) f_l(x, y)
//
// (indices mod m, n) which in the frequency domain is
// sum_l Zhat_l * conj(Fhat_l).

namespace detail {

template <typename T> Eigen::FFT<T>& fftEngine() {
  thread_local Eigen::FFT<T> engine;
  return engine;
}

template <typename T>
void fft2InPlace(Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>& a,
                 bool inverse) {
  auto& engine = fftEngine<T>();
  const Index m = a.rows();
  const Index n = a.cols();
  std::vector<std::complex<T>> in(static_cast<std::size_t>(std::max(m, n)));
  std::vector<std::complex<T>> out(in.size());

  if (m > 1) {
    for (Index c = 0; c < n; ++c) {
      std::copy_n(a.col(c).data(), m, in.begin());
      if (inverse)
        engine.inv(out.data(), in.data(), m);
      else
        engine.fwd(out.data(), in.data(), m);
      std::copy_n(out.begin(), m, a.col(c).data());
    }
  }
  if (n > 1) {
    for (Index r = 0; r < m; ++r) {
      for (Index c = 0; c < n; ++c)
        in[static_cast<std::size_t>(c)] = a(r, c);
      if (inverse)
        engine.inv(out.data(), in.data(), n);
      else
        engine.fwd(out.data(), in.data(), n);
      for (Index c = 0; c < n; ++c)
        a(r, c) = out[static_cast<std::size_t>(c)];
    }
  }
}

} // namespace detail

/// Forward 2-D DFT of every channel (unnormalised).
template <typename T>
Tensor3<std::complex<T>> fft2(const Tensor3<T>& x) {
  Tensor3<std::complex<T>> out(x.rows(), x.cols(), x.channels());
  for (Index l = 0; l < x.channels(); ++l) {
    out[l] = x[l].template cast<std::complex<T>>();
    detail::fft2InPlace<T>(out[l], false);
  }
  return out;
}

/// Inverse 2-D DFT of every channel, complex result.
template <typename T>
Tensor3<std::complex<T>> ifft2Complex(const Tensor3<std::complex<T>>& X) {
  Tensor3<std::complex<T>> out(X);
  for (Index l = 0; l < X.channels(); ++l)
    detail::fft2InPlace<T>(out[l], true);
  return out;
}

/// Inverse 2-D DFT of a spectrum that should belong to a real signal.
///
/// Throws NumericalError when the imaginary residue exceeds `tolerance`
/// relative to the larger of the real output and the input spectrum.
template <typename T>
Tensor3<T> ifft2(const Tensor3<std::complex<T>>& X, T tolerance = T(1e-10)) {
  Tensor3<T> out(X.rows(), X.cols(), X.channels());
  T scale = 0;
  T imagMax = 0;
  for (Index l = 0; l < X.channels(); ++l) {
    Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic> plane = X[l];
    if (plane.size() > 0)
      scale = std::max(scale, plane.cwiseAbs().maxCoeff());
    detail::fft2InPlace<T>(plane, true);
    out[l] = plane.real();
    scale = std::max(scale, plane.real().cwiseAbs().maxCoeff());
    imagMax = std::max(imagMax, plane.imag().cwiseAbs().maxCoeff());
  }
  if (!(imagMax <= tolerance * std::max(scale, std::numeric_limits<T>::min())) &&
      imagMax > 0)
    throw NumericalError("ifft2: imaginary residue " + std::to_string(imagMax) +
                         " exceeds tolerance (spectrum is not conjugate-symmetric)");
  return out;
}

/// Channel-summed correlation spectrum sum_l Zhat_l * conj(Fhat_l).
template <typename T>
Tensor3<std::complex<T>> correlateSpectra(const Tensor3<std::complex<T>>& zHat,
                                          const Tensor3<std::complex<T>>& fHat) {
  zHat.requireSameShape(fHat, "correlateSpectra");
  Tensor3<std::complex<T>> out(zHat.rows(), zHat.cols(), 1);
  for (Index l = 0; l < zHat.channels(); ++l)
    out[0] += zHat[l].cwiseProduct(fHat[l].conjugate());
  return out;
}

/// Circular cross-correlation summed over channels; single-channel result.
template <typename T>
Tensor3<T> cross_correlate(const Tensor3<T>& z, const Tensor3<T>& f) {
  z.requireSameShape(f, "cross_correlate");
  return ifft2(correlateSpectra(fft2(z), fft2(f)));
}

/// Gaussian label with its peak (value exactly 1) at (peakRow, peakCol),
/// using circular distances.
template <typename T = double>
Tensor3<T> gaussian_label(Index rows, Index cols, T peakRow, T peakCol, T sigma) {
  if (!(sigma > 0))
    throw std::invalid_argument("gaussian_label: sigma must be positive");
  if (peakRow < 0 || peakRow >= rows || peakCol < 0 || peakCol >= cols)
    throw std::invalid_argument("gaussian_label: peak outside the grid");
  auto circular = [](T d, Index period) {
    d = std::abs(d);
    return std::min(d, T(period) - d);
  };
  Tensor3<T> y(rows, cols, 1);
  const T denom = 2 * sigma * sigma;
  for (Index c = 0; c < cols; ++c) {
    const T dc = circular(T(c) - peakCol, cols);
    for (Index r = 0; r < rows; ++r) {
      const T dr = circular(T(r) - peakRow, rows);
      y(r, c, 0) = std::exp(-(dr * dr + dc * dc) / denom);
    }
  }
  return y;
}

/// 1-D Hann window of length n >= 2, zero at both ends.
template <typename T = double> Eigen::Matrix<T, Eigen::Dynamic, 1> hann(Index n) {
  Eigen::Matrix<T, Eigen::Dynamic, 1> w(n);
  for (Index i = 0; i < n; ++i)
    w(i) = T(0.5) * (1 - std::cos(2 * std::numbers::pi_v<T> * T(i) / T(n - 1)));
  return w;
}

/// Outer product of Hann windows.
template <typename T = double> Tensor3<T> cosine_window(Index rows, Index cols) {
  if (rows < 2 || cols < 2)
    throw std::invalid_argument("cosine_window: both sides must be >= 2");
  return Tensor3<T>::FromChannel(hann<T>(rows) * hann<T>(cols).transpose());
}

/// Circular shift: out(r, c) = x(r - dr, c - dc).
template <typename Scalar>
Tensor3<Scalar> circshift(const Tensor3<Scalar>& x, Index dr, Index dc) {
  Tensor3<Scalar> out(x.rows(), x.cols(), x.channels());
  const Index m = x.rows();
  const Index n = x.cols();
  for (Index l = 0; l < x.channels(); ++l)
    for (Index c = 0; c < n; ++c)
      for (Index r = 0; r < m; ++r)
        out(((r + dr) % m + m) % m, ((c + dc) % n + n) % n, l) = x(r, c, l);
  return out;
}

} // namespace ubacf
