#include "ubacf/representor.hpp"

#include "ubacf/fft.hpp"

#include <cmath>
#include <string>

namespace ubacf {

ConvLayerParams ConvLayerParams::zeros(Index inChannels, Index outChannels, Index kernelSize) {
  ConvLayerParams p;
  p.inChannels = inChannels;
  p.outChannels = outChannels;
  p.kernelSize = kernelSize;
  p.kernels.assign(static_cast<std::size_t>(inChannels * outChannels),
                   Eigen::MatrixXd::Zero(kernelSize, kernelSize));
  p.bias = Eigen::VectorXd::Zero(outChannels);
  p.validate();
  return p;
}

ConvLayerParams ConvLayerParams::signSplit(Index inChannels, Index outChannels,
                                           Index kernelSize) {
  ConvLayerParams p = zeros(inChannels, outChannels, kernelSize);
  const Index mid = kernelSize / 2;
  for (Index out = 0; out < outChannels; ++out) {
    const Index in = (out / 2) % inChannels;
    p.kernel(out, in)(mid, mid) = (out % 2 == 0) ? 1.0 : -1.0;
  }
  return p;
}

ConvLayerParams ConvLayerParams::random(Index inChannels, Index outChannels, Index kernelSize,
                                        std::mt19937_64& rng, double scale) {
  ConvLayerParams p = zeros(inChannels, outChannels, kernelSize);
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& k : p.kernels)
    for (Index j = 0; j < kernelSize; ++j)
      for (Index i = 0; i < kernelSize; ++i)
        k(i, j) = normal(rng);
  return p;
}

Eigen::VectorXd ConvLayerParams::toVector() const {
  Eigen::VectorXd v(parameterCount());
  Index at = 0;
  for (const auto& k : kernels) {
    v.segment(at, k.size()) = k.reshaped();
    at += k.size();
  }
  v.segment(at, outChannels) = bias;
  return v;
}

void ConvLayerParams::fromVector(const Eigen::VectorXd& v) {
  if (v.size() != parameterCount())
    throw ShapeError("ConvLayerParams::fromVector: expected " +
                     std::to_string(parameterCount()) + " entries");
  Index at = 0;
  for (auto& k : kernels) {
    k.reshaped() = v.segment(at, k.size());
    at += k.size();
  }
  bias = v.segment(at, outChannels);
}

double* ConvLayerParams::entry(Index flatIndex) {
  const Index perKernel = kernelSize * kernelSize;
  const Index kernelEntries = perKernel * inChannels * outChannels;
  if (flatIndex < 0 || flatIndex >= parameterCount())
    throw std::out_of_range("ConvLayerParams::entry");
  if (flatIndex >= kernelEntries)
    return &bias(flatIndex - kernelEntries);
  return kernels[static_cast<std::size_t>(flatIndex / perKernel)].data() + flatIndex % perKernel;
}

void ConvLayerParams::validate() const {
  if (inChannels < 1 || outChannels < 1 || kernelSize < 1 || kernelSize % 2 == 0)
    throw ShapeError("ConvLayerParams: channels must be >= 1 and the kernel size odd");
  if (static_cast<Index>(kernels.size()) != inChannels * outChannels ||
      bias.size() != outChannels)
    throw ShapeError("ConvLayerParams: inconsistent kernel/bias storage");
  for (const auto& k : kernels)
    if (k.rows() != kernelSize || k.cols() != kernelSize || !k.allFinite())
      throw ShapeError("ConvLayerParams: bad kernel");
  if (!bias.allFinite())
    throw NumericalError("ConvLayerParams: non-finite bias");
}

RealTensor3 base_channels(const GrayImage& patch, const FeatureConfig& cfg) {
  if (patch.size() == 0)
    throw std::invalid_argument("extract_features: empty patch");
  if (cfg.cellSize < 1)
    throw std::invalid_argument("extract_features: cell size must be >= 1");
  const Index cell = cfg.cellSize;
  if (patch.rows() % cell != 0 || patch.cols() % cell != 0)
    throw ShapeError("extract_features: patch " + std::to_string(patch.rows()) + "x" +
                     std::to_string(patch.cols()) + " is not divisible into " +
                     std::to_string(cell) + "-pixel cells");
  const Index m = patch.rows() / cell;
  const Index n = patch.cols() / cell;
  const double area = static_cast<double>(cell * cell);

  auto cellAverage = [&](const Eigen::MatrixXd& img) {
    Eigen::MatrixXd out(m, n);
    for (Index c = 0; c < n; ++c)
      for (Index r = 0; r < m; ++r)
        out(r, c) = img.block(r * cell, c * cell, cell, cell).sum() / area;
    return out;
  };

  RealTensor3 base(m, n, cfg.baseChannels());
  base[0] = cellAverage(patch);
  if (cfg.recipe == ChannelRecipe::GrayscaleGradients) {
    const Index H = patch.rows();
    const Index W = patch.cols();
    Eigen::MatrixXd gx(H, W), gy(H, W);
    for (Index c = 0; c < W; ++c)
      for (Index r = 0; r < H; ++r) {
        const Index cl = std::max<Index>(c - 1, 0), cr = std::min<Index>(c + 1, W - 1);
        const Index ru = std::max<Index>(r - 1, 0), rd = std::min<Index>(r + 1, H - 1);
        gx(r, c) = std::abs(patch(r, cr) - patch(r, cl)) * 0.5;
        gy(r, c) = std::abs(patch(rd, c) - patch(ru, c)) * 0.5;
      }
    base[1] = cellAverage(gx);
    base[2] = cellAverage(gy);
  }
  return base;
}

RealTensor3 conv_same(const RealTensor3& input, const ConvLayerParams& weights) {
  weights.validate();
  if (input.channels() != weights.inChannels)
    throw ShapeError("conv_same: input has " + std::to_string(input.channels()) +
                     " channels, kernel expects " + std::to_string(weights.inChannels));
  const Index m = input.rows();
  const Index n = input.cols();
  const Index k = weights.kernelSize;
  const Index half = k / 2;
  RealTensor3 out(m, n, weights.outChannels);
  for (Index o = 0; o < weights.outChannels; ++o) {
    out[o].setConstant(weights.bias(o));
    for (Index in = 0; in < weights.inChannels; ++in) {
      const Eigen::MatrixXd& ker = weights.kernel(o, in);
      for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < k; ++i) {
          const double tap = ker(i, j);
          if (tap == 0.0)
            continue;
          const Index dr = i - half;
          const Index dc = j - half;
          // out(r, c) += tap * in(r + dr, c + dc) over the valid overlap
          const Index r0 = std::max<Index>(0, -dr), r1 = std::min<Index>(m, m - dr);
          const Index c0 = std::max<Index>(0, -dc), c1 = std::min<Index>(n, n - dc);
          if (r1 <= r0 || c1 <= c0)
            continue;
          out[o].block(r0, c0, r1 - r0, c1 - c0) +=
              tap * input[in].block(r0 + dr, c0 + dc, r1 - r0, c1 - c0);
        }
    }
  }
  return out;
}

FeatureResult extract_features(const GrayImage& patch, const FeatureConfig& cfg,
                               const ConvLayerParams& weights) {
  FeatureResult result;
  FeatureCache& cache = result.cache;
  cache.base = base_channels(patch, cfg);
  for (Index l = 0; l < cache.base.channels(); ++l)
    cache.base[l].array() -= cache.base[l].mean();

  const Index m = cache.base.rows();
  const Index n = cache.base.cols();
  cache.window = cfg.windowFeatures ? cosine_window(m, n)[0] : Eigen::MatrixXd::Ones(m, n);
  cache.learnable = cfg.learnable;

  RealTensor3 activated;
  if (cfg.learnable) {
    if (weights.empty())
      throw std::invalid_argument("extract_features: learnable layer enabled without weights");
    if (weights.outChannels != cfg.outChannels || weights.kernelSize != cfg.kernelSize)
      throw ShapeError("extract_features: weights do not match the feature config");
    cache.preActivation = conv_same(cache.base, weights);
    activated = cache.preActivation;
    for (Index l = 0; l < activated.channels(); ++l)
      activated[l] = activated[l].cwiseMax(0.0);
  } else {
    activated = cache.base;
  }
  for (Index l = 0; l < activated.channels(); ++l)
    activated[l] = activated[l].cwiseProduct(cache.window);
  if (cfg.normalize) {
    const double norm = activated.norm();
    if (norm > 0) {
      activated *= 1.0 / norm;
      cache.norm = norm;
      cache.output = activated;
    }
  }
  result.features = std::move(activated);
  return result;
}

ConvLayerParams representor_backward(const FeatureMap& dFeatures, const FeatureCache& cache,
                                     const ConvLayerParams& weights) {
  if (!cache.learnable)
    throw std::invalid_argument("representor_backward: learnable layer was disabled");
  if (dFeatures.rows() != cache.preActivation.rows() ||
      dFeatures.cols() != cache.preActivation.cols() ||
      dFeatures.channels() != cache.preActivation.channels() ||
      weights.outChannels != cache.preActivation.channels() ||
      weights.inChannels != cache.base.channels())
    throw ShapeError("representor_backward: gradient " + dFeatures.shapeString() +
                     " does not match the cached forward pass");

  const Index m = cache.base.rows();
  const Index n = cache.base.cols();
  const Index k = weights.kernelSize;
  const Index half = k / 2;
  ConvLayerParams grad = ConvLayerParams::zeros(weights.inChannels, weights.outChannels, k);

  // through x / ||x||: (d - out <out, d>) / ||x||
  RealTensor3 dWindowed = dFeatures;
  if (cache.norm > 0) {
    dWindowed.axpy(-cache.output.dot(dFeatures), cache.output);
    dWindowed *= 1.0 / cache.norm;
  }

  for (Index o = 0; o < weights.outChannels; ++o) {
    // subgradient of max(0, .) at 0 taken as 0
    const Eigen::MatrixXd dPre =
        (dWindowed[o].array() * cache.window.array() *
         (cache.preActivation[o].array() > 0.0).cast<double>())
            .matrix();
    grad.bias(o) = dPre.sum();
    for (Index in = 0; in < weights.inChannels; ++in) {
      Eigen::MatrixXd& gk = grad.kernel(o, in);
      for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < k; ++i) {
          const Index dr = i - half;
          const Index dc = j - half;
          const Index r0 = std::max<Index>(0, -dr), r1 = std::min<Index>(m, m - dr);
          const Index c0 = std::max<Index>(0, -dc), c1 = std::min<Index>(n, n - dc);
          if (r1 <= r0 || c1 <= c0)
            continue;
          gk(i, j) = dPre.block(r0, c0, r1 - r0, c1 - c0)
                         .cwiseProduct(cache.base[in].block(r0 + dr, c0 + dc, r1 - r0, c1 - c0))
                         .sum();
        }
    }
  }
  return grad;
}

} // namespace ubacf
