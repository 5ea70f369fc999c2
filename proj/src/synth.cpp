#include "ubacf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ubacf {

void SynthSpec::validate() const {
  if (frameWidth < 8 || frameHeight < 8 || frames < 1)
    throw std::invalid_argument("SynthSpec: frame size must be >= 8 and frames >= 1");
  if (!(targetWidth >= 2) || !(targetHeight >= 2))
    throw std::invalid_argument("SynthSpec: target must be at least 2x2 px");
  if (!(scaleDrift > 0) || !(noise >= 0) || !(morph >= 0 && morph <= 1))
    throw std::invalid_argument("SynthSpec: bad drift, noise or morph");
}

GrayImage value_noise(Index rows, Index cols, double cellSize, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index gr = static_cast<Index>(std::ceil(double(rows) / cellSize)) + 2;
  const Index gc = static_cast<Index>(std::ceil(double(cols) / cellSize)) + 2;
  GrayImage lattice(gr, gc);
  for (Index c = 0; c < gc; ++c)
    for (Index r = 0; r < gr; ++r)
      lattice(r, c) = u(rng);
  GrayImage out(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) {
      // smoothstep between lattice points
      const double fx = double(c) / cellSize, fy = double(r) / cellSize;
      const Index x0 = static_cast<Index>(fx), y0 = static_cast<Index>(fy);
      double ax = fx - double(x0), ay = fy - double(y0);
      ax = ax * ax * (3 - 2 * ax);
      ay = ay * ay * (3 - 2 * ay);
      const double top = (1 - ax) * lattice(y0, x0) + ax * lattice(y0, x0 + 1);
      const double bot = (1 - ax) * lattice(y0 + 1, x0) + ax * lattice(y0 + 1, x0 + 1);
      out(r, c) = (1 - ay) * top + ay * bot;
    }
  return out;
}

namespace {

constexpr Index kTextureSize = 64;

GrayImage targetTexture(std::uint64_t seed) {
  GrayImage t = 0.6 * value_noise(kTextureSize, kTextureSize, 12.0, seed) +
                0.4 * value_noise(kTextureSize, kTextureSize, 5.0, seed + 1);
  // stretch to full contrast so the target stands out from the background
  const double lo = t.minCoeff(), hi = t.maxCoeff();
  return ((t.array() - lo) / std::max(hi - lo, 1e-12)).matrix();
}

} // namespace

SyntheticSequence synth_sequence_gen(const SynthSpec& spec, const std::string& name) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::uint64_t texSeed = rng();
  const GrayImage background =
      0.25 + 0.5 * value_noise(spec.frameHeight, spec.frameWidth, 16.0, texSeed).array();
  const GrayImage texA = targetTexture(rng());
  const GrayImage texB = targetTexture(rng());
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticSequence seq;
  seq.name = name;
  double w = spec.targetWidth, h = spec.targetHeight;
  const double cx0 = spec.startX + 0.5 * spec.targetWidth;
  const double cy0 = spec.startY + 0.5 * spec.targetHeight;
  for (int t = 0; t < spec.frames; ++t) {
    BoundingBox box;
    if (spec.scaleDrift == 1.0) {
      box = {spec.startX + spec.velocityX * t, spec.startY + spec.velocityY * t, w, h};
    } else {
      box = BoundingBox::fromCenter(cx0 + spec.velocityX * t, cy0 + spec.velocityY * t, w, h);
    }
    if (box.x < 0 || box.y < 0 || box.x + box.width > spec.frameWidth ||
        box.y + box.height > spec.frameHeight)
      throw std::invalid_argument("synth_sequence_gen: target leaves the frame at frame " +
                                  std::to_string(t));
    const double blend = std::min(1.0, spec.morph * t);
    GrayImage frame = background;
    const Index c0 = std::max<Index>(0, static_cast<Index>(std::floor(box.x)));
    const Index r0 = std::max<Index>(0, static_cast<Index>(std::floor(box.y)));
    const Index c1 = std::min<Index>(spec.frameWidth, static_cast<Index>(std::ceil(box.x + box.width)));
    const Index r1 = std::min<Index>(spec.frameHeight, static_cast<Index>(std::ceil(box.y + box.height)));
    for (Index c = c0; c < c1; ++c)
      for (Index r = r0; r < r1; ++r) {
        // pixel coverage handles sub-pixel box edges
        const double cover = std::clamp(std::min(double(c + 1), box.x + box.width) -
                                            std::max(double(c), box.x), 0.0, 1.0) *
                             std::clamp(std::min(double(r + 1), box.y + box.height) -
                                            std::max(double(r), box.y), 0.0, 1.0);
        if (cover <= 0)
          continue;
        const double u = (double(c) + 0.5 - box.x) / box.width * kTextureSize - 0.5;
        const double v = (double(r) + 0.5 - box.y) / box.height * kTextureSize - 0.5;
        double value = sample_bilinear(texA, u, v);
        if (blend > 0)
          value = (1 - blend) * value + blend * sample_bilinear(texB, u, v);
        frame(r, c) = (1 - cover) * frame(r, c) + cover * value;
      }
    if (spec.noise > 0)
      for (Index c = 0; c < frame.cols(); ++c)
        for (Index r = 0; r < frame.rows(); ++r)
          frame(r, c) = std::clamp(frame(r, c) + spec.noise * gauss(rng), 0.0, 1.0);
    seq.frames.push_back(std::move(frame));
    seq.boxes.push_back(box);
    w *= spec.scaleDrift;
    h *= spec.scaleDrift;
  }
  return seq;
}

std::vector<SynthSpec> synth_suite(int count, int frames, double maxSpeed, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SynthSpec> specs;
  for (int i = 0; i < count; ++i) {
    SynthSpec s;
    s.frames = frames;
    s.targetWidth = std::round(20 + 12 * u(rng));
    s.targetHeight = std::round(20 + 12 * u(rng));
    const double angle = 2 * M_PI * u(rng);
    const double speed = maxSpeed * u(rng);
    s.velocityX = speed * std::cos(angle);
    s.velocityY = speed * std::sin(angle);
    s.scaleDrift = 1.0 + 0.004 * (u(rng) - 0.5);
    s.noise = 0.02 * u(rng);
    s.seed = rng();
    // start so that the whole trajectory stays inside with a margin
    const double travelX = s.velocityX * (frames - 1), travelY = s.velocityY * (frames - 1);
    const double grow = std::pow(std::max(s.scaleDrift, 1.0), frames);
    const double wMax = s.targetWidth * grow, hMax = s.targetHeight * grow;
    const double cxLo = 0.5 * wMax + 4 - std::min(0.0, travelX);
    const double cxHi = s.frameWidth - 0.5 * wMax - 4 - std::max(0.0, travelX);
    const double cyLo = 0.5 * hMax + 4 - std::min(0.0, travelY);
    const double cyHi = s.frameHeight - 0.5 * hMax - 4 - std::max(0.0, travelY);
    const double cx = cxLo + (cxHi - cxLo) * u(rng);
    const double cy = cyLo + (cyHi - cyLo) * u(rng);
    s.startX = cx - 0.5 * s.targetWidth;
    s.startY = cy - 0.5 * s.targetHeight;
    specs.push_back(s);
  }
  return specs;
}

} // namespace ubacf
