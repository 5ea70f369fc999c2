#pragma once

#include "ubacf/image.hpp"
#include "ubacf/updater.hpp"

#include <functional>
#include <vector>

namespace ubacf {

struct TrackerConfig {
  FeatureConfig features;
  ConvLayerParams weights; // W_F, used when features.learnable
  UpdaterParams params;    // Theta; the mask grid fixes the feature grid
  double padding = 5.0;    // crop side = padding * sqrt(W H)
  double scaleStep = 1.01;
  int numScales = 5;
  double scalePenalty = 0.98; // response factor per scale step away from 1
  double labelSigmaFactor = 0.1; // sigma = factor * sqrt(W_f H_f) in cells
  double initLambda = 1.0;
  double initRho = 1.0;
  int initIterations = 100;
  double initTolerance = 1e-6;
  bool responseWindow = true;
  bool subcell = true; // parabolic refinement of the peak along rows and columns

  Index gridSize() const;
  double labelSigma() const;
  std::vector<double> scaleFactors() const;
  void validate() const;
};

/// Binary centered crop of side ceil(grid / padding), the target extent in
/// cells for a square target.
CropOperator default_mask(Index gridSize, double padding);

/// Fresh config: initial Theta with K stages on a grid x grid feature grid.
TrackerConfig default_tracker_config(Index gridSize, Index stages, const FeatureConfig& features);

struct TrackerState {
  double centerX = 0;
  double centerY = 0;
  double baseWidth = 0; // target size at scale 1
  double baseHeight = 0;
  double scale = 1.0;
  RealTensor3 filter; // f_t
  int frameIndex = 0;
  TrackerConfig config;

  BoundingBox box() const {
    return BoundingBox::fromCenter(centerX, centerY, baseWidth * scale, baseHeight * scale);
  }
  double cropSide() const;
};

/// Features of the square crop of side `side` px centered at (cx, cy).
FeatureResult crop_features(const GrayImage& frame, double cx, double cy, double side,
                            const TrackerConfig& config);

/// Label peaked at zero displacement, the (0, 0) cell.
RealTensor3 tracking_label(const TrackerConfig& config);

TrackerState init_first_frame(const GrayImage& frame, const BoundingBox& box,
                              const TrackerConfig& config);

struct Location {
  double centerX = 0;
  double centerY = 0;
  double scale = 1.0;
  double peak = 0;
  int scaleIndex = 0;
  Index rowShift = 0; // integer displacement in cells
  Index colShift = 0;
  double rowOffset = 0; // sub-cell refinement added to the shift
  double colOffset = 0;
};

/// Global response maximum over the scale set, each scale's response
/// multiplied by scalePenalty^|steps from 1|. Ties go to the scale nearest
/// 1 (the smaller one first), then the first cell in row-major order.
Location locate(const TrackerState& state, const GrayImage& frame);

/// Moves the state to `loc` (clamped to the frame) and advances the frame index.
void apply_location(TrackerState& state, const Location& loc, const GrayImage& frame);

/// f_{t+1} from the K-stage updater on features at the current position.
TrackerState update_model(const TrackerState& state, const GrayImage& frame);

using FrameSource = std::function<GrayImage(std::size_t)>;

std::vector<BoundingBox> track_sequence(const FrameSource& frames, std::size_t frameCount,
                                        const BoundingBox& firstBox, const TrackerConfig& config);

std::vector<BoundingBox> track_sequence(const std::vector<GrayImage>& frames,
                                        const BoundingBox& firstBox, const TrackerConfig& config);

} // namespace ubacf
