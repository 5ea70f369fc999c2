#include "ubacf/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ubacf {

Index TrackerConfig::gridSize() const {
  if (params.stages.empty())
    throw std::invalid_argument("TrackerConfig: no updater stages");
  return params.stages.front().mask.fullRows;
}

double TrackerConfig::labelSigma() const {
  return labelSigmaFactor * double(gridSize()) / padding;
}

std::vector<double> TrackerConfig::scaleFactors() const {
  std::vector<double> out;
  const int half = numScales / 2;
  for (int i = 0; i < numScales; ++i)
    out.push_back(std::pow(scaleStep, double(i - half)));
  return out;
}

void TrackerConfig::validate() const {
  params.validate();
  const Index grid = gridSize();
  for (const auto& s : params.stages)
    if (s.mask.fullRows != grid || s.mask.fullCols != grid)
      throw ShapeError("TrackerConfig: stage masks must share one square grid");
  if (grid < 2)
    throw ShapeError("TrackerConfig: feature grid must be at least 2x2 cells");
  if (features.learnable) {
    weights.validate();
    if (weights.inChannels != features.baseChannels() ||
        weights.outChannels != features.channels())
      throw ShapeError("TrackerConfig: W_F does not match the feature config");
  }
  if (!(padding > 0) || !(scaleStep > 0) || numScales < 1 || !(labelSigmaFactor > 0) ||
      !(scalePenalty > 0 && scalePenalty <= 1))
    throw std::invalid_argument("TrackerConfig: bad padding, scales or label sigma");
  if (!(initLambda >= 0) || !(initRho > 0) || initIterations < 1 || !(initTolerance > 0))
    throw std::invalid_argument("TrackerConfig: bad initial solve settings");
}

CropOperator default_mask(Index gridSize, double padding) {
  const Index side =
      std::clamp<Index>(static_cast<Index>(std::ceil(double(gridSize) / padding)), 1, gridSize);
  return CropOperator::centered(gridSize, gridSize, side, side);
}

TrackerConfig default_tracker_config(Index gridSize, Index stages, const FeatureConfig& features) {
  TrackerConfig cfg;
  cfg.features = features;
  cfg.params = UpdaterParams::initial(stages, default_mask(gridSize, cfg.padding));
  if (features.learnable)
    cfg.weights = ConvLayerParams::signSplit(features.baseChannels(), features.channels(),
                                             features.kernelSize);
  return cfg;
}

double TrackerState::cropSide() const {
  return config.padding * std::sqrt(baseWidth * baseHeight) * scale;
}

FeatureResult crop_features(const GrayImage& frame, double cx, double cy, double side,
                            const TrackerConfig& config) {
  const Index pixels = config.gridSize() * config.features.cellSize;
  const GrayImage patch = sample_patch(frame, cx, cy, side, side, pixels, pixels);
  return extract_features(patch, config.features, config.weights);
}

RealTensor3 tracking_label(const TrackerConfig& config) {
  const Index grid = config.gridSize();
  return gaussian_label(grid, grid, 0.0, 0.0, config.labelSigma());
}

TrackerState init_first_frame(const GrayImage& frame, const BoundingBox& box,
                              const TrackerConfig& config) {
  config.validate();
  if (!box.valid())
    throw std::invalid_argument("init_first_frame: invalid box");
  const double cell = double(config.features.cellSize);
  if (box.width < 2 * cell || box.height < 2 * cell)
    throw std::invalid_argument("init_first_frame: target smaller than 2x2 cells");
  if (box.x < 0 || box.y < 0 || box.x + box.width > double(frame.cols()) ||
      box.y + box.height > double(frame.rows()))
    throw std::invalid_argument("init_first_frame: box outside the frame");

  TrackerState state;
  state.config = config;
  state.centerX = box.centerX();
  state.centerY = box.centerY();
  state.baseWidth = box.width;
  state.baseHeight = box.height;
  const auto z = crop_features(frame, state.centerX, state.centerY, state.cropSide(), config);
  StageParams solve;
  solve.lambda = config.initLambda;
  solve.rho = config.initRho;
  solve.mask = config.params.stages.front().mask;
  solve.mask.weights.setOnes();
  state.filter = admm_solve(z.features, tracking_label(config), solve, config.initIterations,
                            config.initTolerance)
                     .vars.f;
  return state;
}

namespace {

/// Periodic Hann centered on zero displacement: 0.5 (1 + cos(2 pi d / n)).
Eigen::VectorXd displacementWindow(Index n) {
  Eigen::VectorXd w(n);
  for (Index i = 0; i < n; ++i)
    w(i) = 0.5 * (1.0 + std::cos(2.0 * M_PI * double(i) / double(n)));
  return w;
}

Index wrapShift(Index i, Index n) { return i <= (n - 1) / 2 ? i : i - n; }

/// Vertex of the parabola through (-1, a), (0, b), (1, c), within half a cell.
double parabolicOffset(double a, double b, double c) {
  const double curvature = a - 2 * b + c;
  if (!(curvature < 0))
    return 0.0;
  return std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
}

} // namespace

Location locate(const TrackerState& state, const GrayImage& frame) {
  const TrackerConfig& cfg = state.config;
  const Index grid = cfg.gridSize();
  const auto fHat = fft2(state.filter);
  const Eigen::VectorXd win = displacementWindow(grid);
  const auto factors = cfg.scaleFactors();

  Location best;
  bool found = false;
  Eigen::MatrixXd bestResponse;
  // center scale first, then outwards; ties keep the earlier one
  const int center = int(factors.size()) / 2;
  std::vector<int> order{center};
  for (int d = 1; d <= center + 1; ++d)
    for (int s : {center - d, center + d})
      if (s >= 0 && s < int(factors.size()))
        order.push_back(s);
  for (int s : order) {
    const double scale = state.scale * factors[std::size_t(s)];
    const double side = cfg.padding * std::sqrt(state.baseWidth * state.baseHeight) * scale;
    const auto z = crop_features(frame, state.centerX, state.centerY, side, cfg).features;
    if (z.channels() != state.filter.channels() || z.rows() != state.filter.rows())
      throw ShapeError("locate: filter does not match the feature grid");
    RealTensor3 response = ifft2(correlateSpectra(fft2(z), fHat));
    if (cfg.responseWindow)
      response[0] = (win * win.transpose()).cwiseProduct(response[0]);
    response[0] *= std::pow(cfg.scalePenalty, std::abs(s - center));
    bool improved = false;
    for (Index r = 0; r < grid; ++r)
      for (Index c = 0; c < grid; ++c)
        if (!found || response(r, c, 0) > best.peak) {
          found = improved = true;
          best.peak = response(r, c, 0);
          best.scaleIndex = s;
          best.scale = scale;
          best.rowShift = wrapShift(r, grid);
          best.colShift = wrapShift(c, grid);
        }
    if (improved)
      bestResponse = response[0];
  }
  if (cfg.subcell) {
    const Index r = (best.rowShift + grid) % grid, c = (best.colShift + grid) % grid;
    const auto& R = bestResponse;
    best.rowOffset = parabolicOffset(R((r + grid - 1) % grid, c), R(r, c), R((r + 1) % grid, c));
    best.colOffset = parabolicOffset(R(r, (c + grid - 1) % grid), R(r, c), R(r, (c + 1) % grid));
  }
  const double side = cfg.padding * std::sqrt(state.baseWidth * state.baseHeight) * best.scale;
  const double pixelsPerCell = side / double(grid);
  best.centerX = state.centerX + (double(best.colShift) + best.colOffset) * pixelsPerCell;
  best.centerY = state.centerY + (double(best.rowShift) + best.rowOffset) * pixelsPerCell;
  return best;
}

void apply_location(TrackerState& state, const Location& loc, const GrayImage& frame) {
  state.scale = loc.scale;
  const double w = state.baseWidth * state.scale, h = state.baseHeight * state.scale;
  const BoundingBox clamped = clamp_box(BoundingBox::fromCenter(loc.centerX, loc.centerY, w, h),
                                        double(frame.cols()), double(frame.rows()));
  state.centerX = clamped.centerX();
  state.centerY = clamped.centerY();
  ++state.frameIndex;
}

TrackerState update_model(const TrackerState& state, const GrayImage& frame) {
  TrackerState next = state;
  const auto z =
      crop_features(frame, state.centerX, state.centerY, state.cropSide(), state.config);
  next.filter =
      forward(z.features, tracking_label(state.config), state.filter, state.config.params)
          .outputs.final();
  return next;
}

std::vector<BoundingBox> track_sequence(const FrameSource& frames, std::size_t frameCount,
                                        const BoundingBox& firstBox, const TrackerConfig& config) {
  if (frameCount < 1)
    throw std::invalid_argument("track_sequence: no frames");
  GrayImage frame = frames(0);
  TrackerState state = init_first_frame(frame, firstBox, config);
  std::vector<BoundingBox> boxes{firstBox};
  for (std::size_t t = 1; t < frameCount; ++t) {
    frame = frames(t);
    apply_location(state, locate(state, frame), frame);
    boxes.push_back(clamp_box(state.box(), double(frame.cols()), double(frame.rows())));
    state = update_model(state, frame);
  }
  return boxes;
}

std::vector<BoundingBox> track_sequence(const std::vector<GrayImage>& frames,
                                        const BoundingBox& firstBox, const TrackerConfig& config) {
  return track_sequence([&](std::size_t i) { return frames[i]; }, frames.size(), firstBox,
                        config);
}

} // namespace ubacf
