#pragma once

#include "ubacf/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace ubacf {

/// Grayscale image, row-major in spirit (rows = height), values in [0, 1].
using GrayImage = Eigen::MatrixXd;

enum class ChannelRecipe {
  Grayscale,          // 1 channel
  GrayscaleGradients, // gray, |d/dx|, |d/dy|
};

struct FeatureConfig {
  int cellSize = 4;
  ChannelRecipe recipe = ChannelRecipe::GrayscaleGradients;
  bool learnable = false;
  int kernelSize = 3;
  int outChannels = 6;
  bool windowFeatures = true;
  bool normalize = true; // scale the final map to unit Frobenius norm

  Index baseChannels() const { return recipe == ChannelRecipe::Grayscale ? 1 : 3; }
  Index channels() const { return learnable ? outChannels : baseChannels(); }
};

/// W_F: one k x k convolution from C_in to L channels plus bias.
struct ConvLayerParams {
  Index inChannels = 0;
  Index outChannels = 0;
  Index kernelSize = 0;
  std::vector<Eigen::MatrixXd> kernels; // kernels[out * inChannels + in], k x k
  Eigen::VectorXd bias;

  Eigen::MatrixXd& kernel(Index out, Index in) {
    return kernels[static_cast<std::size_t>(out * inChannels + in)];
  }
  const Eigen::MatrixXd& kernel(Index out, Index in) const {
    return kernels[static_cast<std::size_t>(out * inChannels + in)];
  }

  Index parameterCount() const {
    return inChannels * outChannels * kernelSize * kernelSize + outChannels;
  }
  bool empty() const { return kernels.empty(); }

  static ConvLayerParams zeros(Index inChannels, Index outChannels, Index kernelSize);

  /// Center-tap +1/-1 pairs (out 2c = x_c, out 2c+1 = -x_c) so that the
  /// rectifier keeps both signs of every base channel; remaining outputs
  /// and taps are zero.
  static ConvLayerParams signSplit(Index inChannels, Index outChannels, Index kernelSize);

  /// Entries ~ N(0, scale^2), bias zero.
  static ConvLayerParams random(Index inChannels, Index outChannels, Index kernelSize,
                                std::mt19937_64& rng, double scale);

  /// Flat view: kernels in storage order (column-major taps) then bias.
  Eigen::VectorXd toVector() const;
  void fromVector(const Eigen::VectorXd& v);
  double* entry(Index flatIndex);

  void validate() const;

  friend bool operator==(const ConvLayerParams&, const ConvLayerParams&) = default;
};

/// Intermediates of extract_features kept for representor_backward.
struct FeatureCache {
  RealTensor3 base;          // mean-subtracted cell channels
  RealTensor3 preActivation; // conv output before the rectifier (learnable only)
  Eigen::MatrixXd window;    // cosine window (ones when windowing is off)
  bool learnable = false;
  double norm = 0;    // Frobenius norm before normalisation; 0 when disabled
  FeatureMap output;  // normalised features, kept when normalising
};

struct FeatureResult {
  FeatureMap features;
  FeatureCache cache;
};

/// Cell-averaged base channels of a patch, one value per cell.
RealTensor3 base_channels(const GrayImage& patch, const FeatureConfig& cfg);

/// psi(x; W_F): base channels, per-channel mean removal, optional
/// conv + max(0, .), the cosine window, then optional unit-norm scaling.
/// An all-zero map stays zero.
FeatureResult extract_features(const GrayImage& patch, const FeatureConfig& cfg,
                               const ConvLayerParams& weights = {});

/// Same-size zero-padded convolution (correlation orientation) plus bias.
RealTensor3 conv_same(const RealTensor3& input, const ConvLayerParams& weights);

/// Gradient of <dFeatures, extract_features(...)> w.r.t. W_F.
ConvLayerParams representor_backward(const FeatureMap& dFeatures, const FeatureCache& cache,
                                     const ConvLayerParams& weights);

} // namespace ubacf
