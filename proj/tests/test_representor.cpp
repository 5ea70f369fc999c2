#include "doctest.h"

#include "test_support.hpp"
#include "ubacf/fft.hpp"
#include "ubacf/gradcheck.hpp"
#include "ubacf/oracles.hpp"
#include "ubacf/representor.hpp"

using namespace ubacf;
using namespace ubacf::testing;

namespace {

GrayImage randomPatch(std::mt19937_64& rng, Index rows, Index cols) {
  GrayImage p(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r)
      p(r, c) = uniform(rng, 0.0, 1.0);
  return p;
}

} // namespace

TEST_CASE("constant patch gives a zero feature map") {
  FeatureConfig cfg;
  cfg.recipe = ChannelRecipe::Grayscale;
  const auto out = extract_features(GrayImage::Constant(16, 12, 0.4), cfg);
  CHECK(out.features.rows() == 4);
  CHECK(out.features.cols() == 3);
  CHECK(out.features.maxAbs() < 1e-15);
}

TEST_CASE("identity path: base channels times the window") {
  std::mt19937_64 rng(51);
  FeatureConfig cfg;
  cfg.cellSize = 2;
  cfg.normalize = false;
  const auto patch = randomPatch(rng, 10, 14);
  const auto out = extract_features(patch, cfg);
  REQUIRE(out.features.channels() == 3);
  const auto win = cosine_window(5, 7);
  auto base = base_channels(patch, cfg);
  for (Index l = 0; l < 3; ++l) {
    base[l].array() -= base[l].mean();
    CHECK((out.features[l] - base[l].cwiseProduct(win[0])).cwiseAbs().maxCoeff() < 1e-15);
  }
  // cell averaging by hand for one cell of the gray channel
  const double cell = patch.block(2, 4, 2, 2).mean();
  CHECK(base_channels(patch, cfg)(1, 2, 0) == doctest::Approx(cell).epsilon(1e-15));
}

TEST_CASE("normalised features have unit norm and keep direction") {
  std::mt19937_64 rng(58);
  FeatureConfig cfg;
  cfg.cellSize = 2;
  const auto patch = randomPatch(rng, 12, 16);
  const auto unit = extract_features(patch, cfg).features;
  CHECK(unit.norm() == doctest::Approx(1.0).epsilon(1e-14));
  cfg.normalize = false;
  const auto raw = extract_features(patch, cfg).features;
  CHECK(maxAbsDiff(unit * raw.norm(), raw) < 1e-14);
  // brightness offsets and contrast gains leave the normalised map unchanged
  cfg.normalize = true;
  const GrayImage other = (0.5 * patch.array() + 0.2).matrix();
  CHECK(maxAbsDiff(extract_features(other, cfg).features, unit) < 1e-12);
}

TEST_CASE("feature shape depends only on patch size, cell size and L") {
  std::mt19937_64 rng(52);
  FeatureConfig cfg;
  cfg.cellSize = 4;
  cfg.learnable = true;
  cfg.outChannels = 5;
  const auto w = ConvLayerParams::random(3, 5, 3, rng, 0.3);
  for (int trial = 0; trial < 3; ++trial) {
    const auto f = extract_features(randomPatch(rng, 24, 32), cfg, w).features;
    CHECK(f.rows() == 6);
    CHECK(f.cols() == 8);
    CHECK(f.channels() == 5);
  }
}

TEST_CASE("extract_features errors") {
  FeatureConfig cfg;
  CHECK_THROWS(extract_features(GrayImage(), cfg));
  CHECK_THROWS_AS(extract_features(GrayImage::Zero(10, 12), cfg), ShapeError);
  cfg.learnable = true;
  CHECK_THROWS(extract_features(GrayImage::Zero(16, 16), cfg));
}

TEST_CASE("conv_same matches naive loops") {
  std::mt19937_64 rng(53);
  for (Index k : {1, 3, 5}) {
    const auto x = RealTensor3::Random(7, 9, 3, rng);
    auto w = ConvLayerParams::random(3, 4, k, rng, 1.0);
    for (Index o = 0; o < 4; ++o)
      w.bias(o) = uniform(rng, -1, 1);
    const auto naive = oracle::naive_conv(x, w.kernels, w.bias, 4);
    CHECK(maxAbsDiff(conv_same(x, w), naive) < 1e-10);
  }
}

TEST_CASE("learnable layer forward matches naive convolution + rectifier + window") {
  std::mt19937_64 rng(54);
  FeatureConfig cfg;
  cfg.cellSize = 2;
  cfg.learnable = true;
  cfg.outChannels = 4;
  cfg.normalize = false;
  const auto w = ConvLayerParams::random(3, 4, 3, rng, 0.7);
  const auto patch = randomPatch(rng, 16, 20);
  const auto out = extract_features(patch, cfg, w);
  auto base = base_channels(patch, cfg);
  for (Index l = 0; l < 3; ++l)
    base[l].array() -= base[l].mean();
  auto expected = oracle::naive_conv(base, w.kernels, w.bias, 4);
  const auto win = cosine_window(8, 10);
  for (Index l = 0; l < 4; ++l)
    expected[l] = expected[l].cwiseMax(0.0).cwiseProduct(win[0]);
  CHECK(maxAbsDiff(out.features, expected) < 1e-10);
}

TEST_CASE("sign split initialisation keeps both signs of the base channels") {
  std::mt19937_64 rng(55);
  FeatureConfig cfg;
  cfg.cellSize = 2;
  cfg.learnable = true;
  cfg.outChannels = 6;
  cfg.windowFeatures = false;
  const auto w = ConvLayerParams::signSplit(3, 6, 3);
  const auto patch = randomPatch(rng, 12, 12);
  const auto out = extract_features(patch, cfg, w);
  const auto plain = [&] {
    FeatureConfig c = cfg;
    c.learnable = false;
    return extract_features(patch, c).features;
  }();
  for (Index l = 0; l < 3; ++l)
    CHECK((out.features[2 * l] - out.features[2 * l + 1] - plain[l]).cwiseAbs().maxCoeff() <
          1e-15);
}

TEST_CASE("representor_backward") {
  std::mt19937_64 rng(56);
  FeatureConfig cfg;
  cfg.cellSize = 2;
  cfg.learnable = true;
  cfg.outChannels = 3;
  auto w = ConvLayerParams::random(3, 3, 3, rng, 0.5);
  const auto patch = randomPatch(rng, 12, 14);
  const auto fwd = extract_features(patch, cfg, w);

  SUBCASE("zero upstream") {
    const auto g = representor_backward(RealTensor3(6, 7, 3), fwd.cache, w);
    CHECK(g.toVector().cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("all-active rectifier reduces to the linear layer gradient") {
    cfg.normalize = false;
    auto wa = w;
    wa.bias.setConstant(100.0); // every pre-activation positive
    const auto a = extract_features(patch, cfg, wa);
    const auto up = RealTensor3::Random(6, 7, 3, rng);
    const auto g = representor_backward(up, a.cache, wa);
    // linear layer: d bias_o = sum(up_o . window), d W = correlation of (up . window) with x
    const auto win = cosine_window(6, 7)[0];
    for (Index o = 0; o < 3; ++o) {
      const Eigen::MatrixXd u = up[o].cwiseProduct(win);
      CHECK(g.bias(o) == doctest::Approx(u.sum()).epsilon(1e-12));
      for (Index in = 0; in < 3; ++in)
        for (Index i = 0; i < 3; ++i)
          for (Index j = 0; j < 3; ++j) {
            double s = 0;
            for (Index r = 0; r < 6; ++r)
              for (Index c = 0; c < 7; ++c) {
                const Index rr = r + i - 1, cc = c + j - 1;
                if (rr >= 0 && rr < 6 && cc >= 0 && cc < 7)
                  s += u(r, c) * a.cache.base(rr, cc, in);
              }
            CHECK(g.kernel(o, in)(i, j) == doctest::Approx(s).epsilon(1e-10));
          }
    }
  }

  SUBCASE("finite differences on W_F") {
    const auto up = RealTensor3::Random(6, 7, 3, rng);
    const auto g = representor_backward(up, fwd.cache, w).toVector();
    std::vector<FdProbe> probes;
    for (Index i = 0; i < w.parameterCount(); ++i)
      probes.push_back({"w" + std::to_string(i), w.entry(i), g(i)});
    const auto report = check_gradients(
        probes, [&] { return extract_features(patch, cfg, w).features.dot(up); }, 1e-5, 1e-4);
    CAPTURE(report.maxRelError);
    CHECK(report.passed);
  }

  SUBCASE("cache mismatch") {
    CHECK_THROWS_AS(representor_backward(RealTensor3(5, 7, 3), fwd.cache, w), ShapeError);
    FeatureConfig plain;
    plain.cellSize = 2;
    const auto p = extract_features(patch, plain);
    CHECK_THROWS(representor_backward(RealTensor3(6, 7, 3), p.cache, w));
  }
}

TEST_CASE("ConvLayerParams flat view round trip") {
  std::mt19937_64 rng(57);
  auto w = ConvLayerParams::random(2, 3, 3, rng, 1.0);
  const auto v = w.toVector();
  CHECK(v.size() == w.parameterCount());
  ConvLayerParams copy = ConvLayerParams::zeros(2, 3, 3);
  copy.fromVector(v);
  CHECK(copy == w);
  *w.entry(w.parameterCount() - 1) = 4.0;
  CHECK(w.bias(2) == 4.0);
  CHECK_THROWS(ConvLayerParams::zeros(2, 2, 2));
}
