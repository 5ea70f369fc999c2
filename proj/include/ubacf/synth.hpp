#pragma once

#include "ubacf/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ubacf {

/// Motion and appearance of one synthetic sequence.
struct SynthSpec {
  int frameWidth = 160;
  int frameHeight = 160;
  int frames = 20;
  double targetWidth = 24;
  double targetHeight = 24;
  double startX = 68; // top-left of the first box
  double startY = 68;
  double velocityX = 0; // px per frame
  double velocityY = 0;
  double scaleDrift = 1.0; // per-frame multiplicative size change
  double noise = 0.0;      // additive Gaussian noise sigma, intensities in [0, 1]
  double morph = 0.0;      // per-frame blend towards a second target texture
  std::uint64_t seed = 1;

  void validate() const;
};

/// Frames in memory plus exact ground truth, one box per frame.
struct SyntheticSequence {
  std::string name;
  std::vector<GrayImage> frames;
  std::vector<BoundingBox> boxes;
};

/// Any frames-plus-boxes sequence, synthetic or loaded from disk.
using LabeledSequence = SyntheticSequence;

SyntheticSequence synth_sequence_gen(const SynthSpec& spec, const std::string& name = "synth");

/// Random but reproducible specs for a training or evaluation suite: target
/// sizes 20..32 px, velocities up to maxSpeed px/frame, mild noise and
/// scale drift, all kept inside the frame.
std::vector<SynthSpec> synth_suite(int count, int frames, double maxSpeed, std::uint64_t seed);

/// Smooth value-noise texture in [0, 1].
GrayImage value_noise(Index rows, Index cols, double cellSize, std::uint64_t seed);

} // namespace ubacf
