#include "doctest.h"

#include "test_support.hpp"
#include "ubacf/metrics.hpp"
#include "ubacf/synth.hpp"
#include "ubacf/tracker.hpp"

#include <cmath>

using namespace ubacf;

namespace {

FeatureConfig grayGradients() {
  FeatureConfig f;
  f.cellSize = 4;
  return f;
}

TrackerConfig smallConfig(Index stages = 2) {
  return default_tracker_config(32, stages, grayGradients());
}

// 200 x 200 view into a larger noise image, shifted left by `dx` pixels so
// that content moves right by dx relative to dx = 0.
GrayImage shiftedFrame(int dx) {
  static const GrayImage big = value_noise(200, 240, 6.0, 42);
  return big.block(0, 20 - dx, 200, 200);
}

const BoundingBox kBox{84, 84, 32, 32};

} // namespace

TEST_CASE("sample_patch") {
  const GrayImage flat = GrayImage::Constant(20, 30, 0.4);
  const GrayImage p = sample_patch(flat, 3.0, 2.0, 50.0, 50.0, 8, 8);
  CHECK((p.array() - 0.4).abs().maxCoeff() < 1e-15);

  // unit spacing on pixel centers reproduces the pixels
  GrayImage ramp(6, 8);
  for (Index c = 0; c < 8; ++c)
    for (Index r = 0; r < 6; ++r)
      ramp(r, c) = double(r * 10 + c);
  const GrayImage same = sample_patch(ramp, 4.0, 3.0, 8.0, 6.0, 6, 8);
  CHECK((same - ramp).cwiseAbs().maxCoeff() < 1e-12);

  // far outside the image: edge replication
  CHECK(sample_bilinear(ramp, -5.0, -5.0) == ramp(0, 0));
  CHECK(sample_bilinear(ramp, 100.0, 2.0) == ramp(2, 7));
  CHECK(sample_bilinear(ramp, 1.5, 2.0) == doctest::Approx(21.5));
}

TEST_CASE("clamp_box keeps boxes inside the frame") {
  const BoundingBox b = clamp_box({-10, 5, 30, 200}, 100, 80);
  CHECK(b.x == 0);
  CHECK(b.width == 30);
  CHECK(b.y == 0);
  CHECK(b.height == 80);
  const BoundingBox inside{10, 10, 20, 20};
  CHECK(clamp_box(inside, 100, 80) == inside);
  const BoundingBox gone = clamp_box({150, 150, 10, 10}, 100, 80);
  CHECK(gone.valid());
  CHECK(gone.x + gone.width <= 100);
  CHECK(gone.y + gone.height <= 80);
}

TEST_CASE("tracker config defaults") {
  const auto cfg = smallConfig();
  CHECK(cfg.gridSize() == 32);
  CHECK(cfg.params.stageCount() == 2);
  for (const auto& s : cfg.params.stages) {
    CHECK(s.lambda == 1.0);
    CHECK(s.rho == 1.0);
    CHECK(s.eta == 0.013);
  }
  const auto f = cfg.scaleFactors();
  REQUIRE(f.size() == 5);
  CHECK(f[2] == 1.0);
  CHECK(f[0] == doctest::Approx(std::pow(1.01, -2)));
  CHECK(f[4] == doctest::Approx(std::pow(1.01, 2)));
  // ceil(32 / 5) = 7 cells of support
  CHECK(cfg.params.stages[0].mask.cropRows() == 7);
  CHECK(cfg.labelSigma() == doctest::Approx(0.1 * 32 / 5.0));
}

TEST_CASE("init_first_frame") {
  const auto cfg = smallConfig();
  const GrayImage frame = shiftedFrame(0);
  const auto state = init_first_frame(frame, kBox, cfg);
  CHECK(state.scale == 1.0);
  CHECK(state.centerX == 100.0);
  CHECK(state.cropSide() == doctest::Approx(160.0));

  SUBCASE("own response peaks at the label peak") {
    const auto z = crop_features(frame, state.centerX, state.centerY, state.cropSide(), cfg);
    const RealTensor3 r = cross_correlate(z.features, state.filter);
    Index row = -1, col = -1;
    r[0].maxCoeff(&row, &col);
    CHECK(row == 0);
    CHECK(col == 0);
  }
  SUBCASE("deterministic") {
    const auto again = init_first_frame(frame, kBox, cfg);
    CHECK((again.filter - state.filter).maxAbs() == 0.0);
  }
  SUBCASE("degenerate targets are rejected") {
    CHECK_THROWS_AS(init_first_frame(frame, {50, 50, 4, 4}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(init_first_frame(frame, {50, 50, 7, 40}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(init_first_frame(frame, {190, 50, 32, 32}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(init_first_frame(frame, {50, 50, 0, 32}, cfg), std::invalid_argument);
  }
}

TEST_CASE("locate") {
  const auto cfg = smallConfig();
  const auto state = init_first_frame(shiftedFrame(0), kBox, cfg);

  SUBCASE("self-match") {
    const Location loc = locate(state, shiftedFrame(0));
    CHECK(loc.rowShift == 0);
    CHECK(loc.colShift == 0);
    CHECK(loc.scaleIndex == 2);
    CHECK(loc.scale == state.scale);
    CHECK(std::abs(loc.centerX - state.centerX) < 0.5);
    CHECK(std::abs(loc.centerY - state.centerY) < 0.5);
  }
  SUBCASE("translation by two cells") {
    // 160 px crop on a 32-cell grid: 5 px per cell
    const Location loc = locate(state, shiftedFrame(10));
    CHECK(loc.colShift == 2);
    CHECK(loc.rowShift == 0);
    CHECK(loc.scaleIndex == 2);
    CHECK(loc.centerX == doctest::Approx(110.0).epsilon(0.01));
    CHECK(loc.centerY == doctest::Approx(100.0).epsilon(0.01));
  }
  SUBCASE("blank frame") {
    const GrayImage blank = GrayImage::Zero(200, 200);
    const Location loc = locate(state, blank);
    CHECK(loc.peak == 0.0);
    CHECK(loc.centerX == state.centerX);
    CHECK(loc.centerY == state.centerY);
    CHECK(loc.scale == state.scale);
  }
  SUBCASE("decision invariant to positive filter scaling") {
    for (int dx : {0, 3, 7, -6}) {
      const Location ref = locate(state, shiftedFrame(dx));
      for (double c : {0.1, 10.0}) {
        TrackerState scaled = state;
        scaled.filter *= c;
        const Location loc = locate(scaled, shiftedFrame(dx));
        CHECK(loc.scaleIndex == ref.scaleIndex);
        CHECK(loc.rowShift == ref.rowShift);
        CHECK(loc.colShift == ref.colShift);
        CHECK(loc.centerX == doctest::Approx(ref.centerX).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("update_model") {
  auto cfg = smallConfig(3);
  const GrayImage frame = shiftedFrame(0);
  const auto state = init_first_frame(frame, kBox, cfg);
  const GrayImage next = shiftedFrame(4);

  SUBCASE("eta = 0 keeps the filter") {
    TrackerState frozen = state;
    for (auto& s : frozen.config.params.stages)
      s.eta = 0.0;
    CHECK((update_model(frozen, next).filter - state.filter).maxAbs() == 0.0);
  }
  SUBCASE("identical stages equal interpolated truncated ADMM") {
    const auto& stage = cfg.params.stages[0];
    const auto z = crop_features(next, state.centerX, state.centerY, state.cropSide(), cfg);
    const auto admm = admm_solve(z.features, tracking_label(cfg), stage, 3, 1e-300);
    const auto expected = interpolate(state.filter, admm.vars.f, stage.eta);
    CHECK((update_model(state, next).filter - expected).maxAbs() <=
          1e-12 * expected.maxAbs());
  }
  SUBCASE("static scene: filter changes shrink") {
    TrackerState s = state;
    double previous = INFINITY;
    for (int t = 0; t < 10; ++t) {
      const TrackerState n = update_model(s, frame);
      const double step = std::sqrt(squaredDistance(n.filter, s.filter));
      CHECK(step < previous);
      previous = step;
      s = n;
    }
  }
}

TEST_CASE("track_sequence") {
  const auto cfg = smallConfig();

  SUBCASE("single frame returns the first box") {
    const auto boxes = track_sequence(std::vector<GrayImage>{shiftedFrame(0)}, kBox, cfg);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0] == kBox);
  }
  SUBCASE("static sequence") {
    SynthSpec spec;
    spec.frames = 20;
    spec.noise = 0.02;
    spec.seed = 3;
    const auto seq = synth_sequence_gen(spec);
    const auto boxes = track_sequence(seq.frames, seq.boxes[0], cfg);
    const auto report = eval_metrics(boxes, seq.boxes);
    for (double v : report.ious)
      CHECK(v >= 0.9);
  }
  SUBCASE("constant velocity, deterministic, clamped") {
    SynthSpec spec;
    spec.frames = 30;
    spec.noise = 0.02;
    spec.startX = 20;
    spec.velocityX = 2;
    spec.seed = 8;
    const auto seq = synth_sequence_gen(spec);
    const auto boxes = track_sequence(seq.frames, seq.boxes[0], cfg);
    CHECK(eval_metrics(boxes, seq.boxes).meanIou >= 0.6);
    CHECK(track_sequence(seq.frames, seq.boxes[0], cfg) == boxes);
    for (const auto& b : boxes) {
      CHECK(b.valid());
      CHECK(b.x >= 0);
      CHECK(b.y >= 0);
      CHECK(b.x + b.width <= spec.frameWidth);
      CHECK(b.y + b.height <= spec.frameHeight);
    }
  }
  SUBCASE("empty input") {
    CHECK_THROWS(track_sequence(std::vector<GrayImage>{}, kBox, cfg));
  }
}
