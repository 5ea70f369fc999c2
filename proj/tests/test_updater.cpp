#include "doctest.h"

#include "test_support.hpp"
#include "ubacf/oracles.hpp"
#include "ubacf/updater.hpp"

using namespace ubacf;
using namespace ubacf::testing;

namespace {

struct Instance {
  RealTensor3 z, y, fPrev, zNext, yNext;
};

Instance randomInstance(std::mt19937_64& rng, Index m, Index n, Index L) {
  return {unitFeatures(rng, m, n, L), gaussian_label(m, n, 0.0, 0.0, 1.0),
          RealTensor3::Random(m, n, L, rng) * 0.3, unitFeatures(rng, m, n, L),
          gaussian_label(m, n, 1.0, 0.0, 1.0)};
}

} // namespace

TEST_CASE("initial parameters") {
  const auto mask = CropOperator::centered(8, 8, 4, 4);
  const auto p = UpdaterParams::initial(3, mask);
  REQUIRE(p.stageCount() == 3);
  for (const auto& s : p.stages) {
    CHECK(s.lambda == 1.0);
    CHECK(s.rho == 1.0);
    CHECK(s.eta == 0.013);
    CHECK(s.mask.weights == Eigen::MatrixXd::Ones(4, 4));
  }
  CHECK_THROWS(UpdaterParams::initial(0, mask));
}

TEST_CASE("equal stages reproduce truncated admm_solve bit for bit") {
  std::mt19937_64 rng(21);
  for (Index K = 1; K <= 4; ++K) {
    const auto inst = randomInstance(rng, 6, 7, 2);
    const auto stage = randomStage(rng, 6, 7, true);
    const UpdaterParams params{std::vector<StageParams>(static_cast<std::size_t>(K), stage)};
    const auto result = forward(inst.z, inst.y, inst.fPrev, params);
    const auto solved = admm_solve(inst.z, inst.y, stage, static_cast<int>(K), 1e-300);
    REQUIRE(solved.iterations == K);
    const auto& last = result.tape.stages.back().vars;
    CHECK(last.f == solved.vars.f);
    CHECK(last.g == solved.vars.g);
    CHECK(last.h == solved.vars.h);
    CHECK(maxAbsDiff(result.outputs.final(), interpolate(inst.fPrev, solved.vars.f, stage.eta)) <=
          1e-12);
  }
}

TEST_CASE("prefix property") {
  std::mt19937_64 rng(22);
  const auto inst = randomInstance(rng, 6, 6, 2);
  const auto stage = randomStage(rng, 6, 6, false);
  const UpdaterParams four{std::vector<StageParams>(4, stage)};
  const auto full = forward(inst.z, inst.y, inst.fPrev, four);
  for (std::size_t k = 1; k <= 4; ++k) {
    const UpdaterParams prefix{std::vector<StageParams>(k, stage)};
    const auto part = forward(inst.z, inst.y, inst.fPrev, prefix);
    CHECK(part.outputs.final() == full.outputs.filters[k - 1]);
  }
}

TEST_CASE("zero interpolation rate keeps the previous filter") {
  std::mt19937_64 rng(23);
  const auto inst = randomInstance(rng, 6, 6, 3);
  UpdaterParams params;
  for (int k = 0; k < 3; ++k) {
    auto s = randomStage(rng, 6, 6, true);
    s.eta = 0.0;
    params.stages.push_back(s);
  }
  const auto result = forward(inst.z, inst.y, inst.fPrev, params);
  for (const auto& f : result.outputs.filters)
    CHECK(f == inst.fPrev);
}

TEST_CASE("two stages equal the hand-sequenced composition of bacf_core ops") {
  std::mt19937_64 rng(24);
  const auto inst = randomInstance(rng, 5, 6, 2);
  const UpdaterParams params{{randomStage(rng, 5, 6, true), randomStage(rng, 5, 6, true)}};
  const auto result = forward(inst.z, inst.y, inst.fPrev, params);

  const ComplexSpectrum yHat = fft2(inst.y);
  FilterVars v = FilterVars::zeros(params.stages[0].mask, 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& s = params.stages[k];
    const auto h = h_update(v, s);
    const auto g = g_update(v, h, s.mask);
    const auto f = f_update(inst.z, yHat, v, h, g, s);
    v = {f, h, g};
    CHECK(maxAbsDiff(result.tape.stages[k].vars.f, f) <= 1e-12);
    CHECK(maxAbsDiff(result.outputs.filters[k], interpolate(inst.fPrev, f, s.eta)) <= 1e-12);
  }
}

TEST_CASE("forward is deterministic") {
  std::mt19937_64 rng(25);
  const auto inst = randomInstance(rng, 6, 6, 2);
  const UpdaterParams params{{randomStage(rng, 6, 6, true), randomStage(rng, 6, 6, true)}};
  const auto a = forward(inst.z, inst.y, inst.fPrev, params);
  const auto b = forward(inst.z, inst.y, inst.fPrev, params);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a.tape.stages[k].vars.f == b.tape.stages[k].vars.f);
    CHECK(a.tape.stages[k].vars.g == b.tape.stages[k].vars.g);
    CHECK(a.tape.stages[k].vars.h == b.tape.stages[k].vars.h);
    CHECK(a.tape.stages[k].output == b.tape.stages[k].output);
  }
  CHECK(a.tape.problem.zHat == b.tape.problem.zHat);
}

TEST_CASE("forward rejects inconsistent shapes") {
  std::mt19937_64 rng(26);
  const auto inst = randomInstance(rng, 6, 6, 2);
  const UpdaterParams params{{randomStage(rng, 5, 6, false)}};
  CHECK_THROWS_AS(forward(inst.z, inst.y, inst.fPrev, params), ShapeError);
  const UpdaterParams ok{{randomStage(rng, 6, 6, false)}};
  CHECK_THROWS_AS(forward(inst.z, inst.y, RealTensor3(6, 6, 1), ok), ShapeError);
}

TEST_CASE("stage_loss") {
  std::mt19937_64 rng(27);
  const auto zNext = RealTensor3::Random(5, 5, 2, rng);
  const auto f = RealTensor3::Random(5, 5, 2, rng);
  const auto perfect = cross_correlate(zNext, f);
  CHECK(stage_loss(f, zNext, perfect) < 1e-20);

  const auto y = gaussian_label(5, 5, 2.0, 1.0, 1.0);
  CHECK(stage_loss(RealTensor3(5, 5, 2), zNext, y) == doctest::Approx(y.squaredNorm()));

  for (int trial = 0; trial < 5; ++trial) {
    const auto z = RealTensor3::Random(4, 6, 3, rng);
    const auto ff = RealTensor3::Random(4, 6, 3, rng);
    const auto r = oracle::spatial_correlate(z, ff);
    double naive = 0;
    for (Index u = 0; u < 4; ++u)
      for (Index v = 0; v < 6; ++v)
        naive += std::pow(gaussian_label(4, 6, 0.0, 0.0, 1.0)(u, v, 0) - r(u, v, 0), 2);
    CHECK(std::abs(stage_loss(ff, z, gaussian_label(4, 6, 0.0, 0.0, 1.0)) - naive) < 1e-10);
  }
}

TEST_CASE("total_loss") {
  std::mt19937_64 rng(28);
  const auto inst = randomInstance(rng, 6, 6, 2);
  const UpdaterParams three{{randomStage(rng, 6, 6, true), randomStage(rng, 6, 6, true),
                             randomStage(rng, 6, 6, true)}};
  const auto out = forward(inst.z, inst.y, inst.fPrev, three).outputs;
  const double explicitSum = stage_loss(out.filters[0], inst.zNext, inst.yNext) +
                             stage_loss(out.filters[1], inst.zNext, inst.yNext) +
                             stage_loss(out.filters[2], inst.zNext, inst.yNext);
  CHECK(total_loss(out, inst.zNext, inst.yNext) == doctest::Approx(explicitSum).epsilon(1e-14));
  CHECK(total_loss(out, inst.zNext, inst.yNext) >= 0);

  const UpdaterParams one{{three.stages[0]}};
  const auto single = forward(inst.z, inst.y, inst.fPrev, one).outputs;
  CHECK(total_loss(single, inst.zNext, inst.yNext) ==
        stage_loss(single.filters[0], inst.zNext, inst.yNext));

  // every stage filter perfect: the label is exactly each stage's response
  StageOutputs same{{inst.fPrev, inst.fPrev}};
  CHECK(total_loss(same, inst.zNext, cross_correlate(inst.zNext, inst.fPrev)) < 1e-20);
}
