#include "doctest.h"

#include "test_support.hpp"
#include "ubacf/synth.hpp"
#include "ubacf/trainer.hpp"

#include <cmath>
#include <cstring>

using namespace ubacf;

namespace {

TrackerConfig tinyConfig(Index stages, bool learnable = false) {
  FeatureConfig f;
  f.cellSize = 2;
  f.learnable = learnable;
  f.outChannels = 4;
  return default_tracker_config(16, stages, f);
}

SynthSpec tinySpec(std::uint64_t seed, int frames, double vx) {
  SynthSpec s;
  s.frameWidth = 96;
  s.frameHeight = 96;
  s.targetWidth = 12;
  s.targetHeight = 12;
  s.startX = 30;
  s.startY = 40;
  s.frames = frames;
  s.velocityX = vx;
  s.noise = 0.01;
  s.seed = seed;
  return s;
}

std::vector<LabeledSequence> tinySequences(int count, int frames) {
  std::vector<LabeledSequence> seqs;
  for (int i = 0; i < count; ++i)
    seqs.push_back(synth_sequence_gen(tinySpec(100 + i, frames, double(i % 3))));
  return seqs;
}

SgdConfig fastSgd(int epochs) {
  SgdConfig cfg;
  cfg.epochs = epochs;
  cfg.batchSize = 4;
  return cfg;
}

bool bitwiseEqual(const StageParams& a, const StageParams& b) {
  const auto& wa = a.mask.weights;
  const auto& wb = b.mask.weights;
  return std::memcmp(&a.lambda, &b.lambda, sizeof(double)) == 0 &&
         std::memcmp(&a.rho, &b.rho, sizeof(double)) == 0 &&
         std::memcmp(&a.eta, &b.eta, sizeof(double)) == 0 && wa.rows() == wb.rows() &&
         wa.cols() == wb.cols() &&
         std::memcmp(wa.data(), wb.data(), sizeof(double) * std::size_t(wa.size())) == 0;
}

} // namespace

TEST_CASE("learning rate schedule") {
  SgdConfig cfg;
  cfg.epochs = 5;
  cfg.initialRate = 1e-2;
  cfg.finalRate = 1e-5;
  CHECK(learning_rate(cfg, 0) == 1e-2);
  for (int e = 0; e < 5; ++e)
    CHECK(learning_rate(cfg, e) == doctest::Approx(1e-2 * std::pow(1e-3, e / 4.0)).epsilon(1e-14));
  CHECK(learning_rate(cfg, 4) == doctest::Approx(1e-5).epsilon(1e-14));
  cfg.epochs = 1;
  CHECK(learning_rate(cfg, 0) == 1e-2);
}

TEST_CASE("sgd_step") {
  Eigen::VectorXd p(1), g(1);
  p << 1.0;
  g << 2.0;
  CHECK(sgd_step(p, g, 0.1)(0) == doctest::Approx(0.8).epsilon(1e-15));

  std::mt19937_64 rng(4);
  const Eigen::VectorXd q = Eigen::VectorXd::Random(7);
  const Eigen::VectorXd grad = Eigen::VectorXd::Random(7);
  CHECK(sgd_step(q, Eigen::VectorXd::Zero(7), 0.3) == q);
  CHECK(sgd_step(q, grad, 0.0) == q);
  const Eigen::VectorXd scaling = Eigen::VectorXd::LinSpaced(7, 1.0, 7.0);
  CHECK((sgd_step(q, grad, 0.5, scaling) - (q - 0.5 * scaling.cwiseProduct(grad)))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK_THROWS_AS(sgd_step(q, Eigen::VectorXd::Zero(3), 0.1), ShapeError);
}

TEST_CASE("reparameterisation keeps parameters in range") {
  auto params = tinyConfig(2).params;
  ConvLayerParams none;
  const ParamLayout layout{{0, 1}, false};
  const Eigen::VectorXd v = pack_unconstrained(params, none, layout);
  UpdaterParams back = params;
  unpack_unconstrained(v, back, none, layout);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(back.stages[k].lambda == doctest::Approx(params.stages[k].lambda).epsilon(1e-14));
    CHECK(back.stages[k].eta == doctest::Approx(params.stages[k].eta).epsilon(1e-14));
  }
  for (double value : {-40.0, -3.0, 0.0, 3.0, 40.0}) {
    unpack_unconstrained(Eigen::VectorXd::Constant(v.size(), value), back, none, layout);
    for (const auto& s : back.stages) {
      CHECK(s.lambda >= 0.0);
      CHECK(s.rho > 0.0);
      CHECK(s.eta >= 0.0);
      CHECK(s.eta <= 1.0);
    }
  }
}

TEST_CASE("make_dataset") {
  const auto cfg = tinyConfig(1);
  const auto seqs = tinySequences(3, 4);
  const auto data = make_dataset(seqs, cfg);
  CHECK(data.sequences.size() == 3);
  CHECK(data.sampleCount() == 9);
  const auto& s = data.sequences[0].samples[0];
  CHECK(s.z.rows() == 16);
  CHECK(s.z.channels() == 3);
  CHECK(s.y(0, 0, 0) == 1.0);
  // static first sequence: the next label also peaks at zero displacement
  Index r = -1, c = -1;
  s.yNext[0].maxCoeff(&r, &c);
  CHECK(r == 0);
  CHECK(c == 0);

  auto broken = seqs;
  broken[1].boxes.pop_back();
  CHECK_THROWS(make_dataset(broken, cfg));
}

TEST_CASE("stagewise_train") {
  const auto cfg = tinyConfig(2);
  const auto seqs = tinySequences(4, 5);

  SUBCASE("single pair: loss strictly decreases") {
    TrainDataset data = make_dataset({synth_sequence_gen(tinySpec(7, 2, 1.0))}, tinyConfig(1));
    const auto result = stagewise_train(data, 1, fastSgd(6));
    REQUIRE(result.log.size() == 6);
    for (std::size_t e = 1; e < result.log.size(); ++e)
      CHECK(result.log[e].loss < result.log[e - 1].loss);
  }
  SUBCASE("stage 2 starts from trained stage 1, which stays frozen") {
    TrainDataset one = make_dataset(seqs, cfg);
    const auto stage1 = stagewise_train(one, 1, fastSgd(2)).params.stages[0];

    TrainDataset two = make_dataset(seqs, cfg);
    bool firstStage2Step = true;
    int observed = 0;
    const auto result = stagewise_train(
        two, 2, fastSgd(2), [&](const UpdaterParams& p, const std::string& phase, int stage, int) {
          CHECK(phase == "stage");
          for (const auto& s : p.stages) {
            CHECK(s.lambda >= 0.0);
            CHECK(s.rho > 0.0);
            CHECK(s.eta >= 0.0);
            CHECK(s.eta <= 1.0);
          }
          if (stage != 2)
            return;
          ++observed;
          CHECK(bitwiseEqual(p.stages[0], stage1));
          if (firstStage2Step) {
            CHECK(bitwiseEqual(p.stages[1], stage1));
            firstStage2Step = false;
          }
        });
    CHECK(observed > 0);
    CHECK(bitwiseEqual(result.params.stages[0], stage1));
    CHECK(!bitwiseEqual(result.params.stages[1], stage1));
    REQUIRE(result.log.size() == 4);
    CHECK(result.log[0].stage == 1);
    CHECK(result.log[3].stage == 2);
    CHECK(result.log[1].rate == doctest::Approx(1e-5));
  }
  SUBCASE("reproducible") {
    TrainDataset a = make_dataset(seqs, cfg);
    TrainDataset b = make_dataset(seqs, cfg);
    const auto ra = stagewise_train(a, 2, fastSgd(2));
    const auto rb = stagewise_train(b, 2, fastSgd(2));
    CHECK(ra.params == rb.params);
    CHECK(ra.log == rb.log);
  }
  SUBCASE("zero epochs returns the initial parameters") {
    TrainDataset data = make_dataset(seqs, cfg);
    const auto result = stagewise_train(data, 2, fastSgd(0));
    CHECK(result.params == UpdaterParams::initial(2, cfg.params.stages[0].mask));
    CHECK(result.log.empty());
  }
}

TEST_CASE("joint_finetune") {
  const auto seqs = tinySequences(3, 4);

  SUBCASE("zero learning rate leaves parameters unchanged") {
    const auto cfg = tinyConfig(2, true);
    TrainDataset data = make_dataset(seqs, cfg);
    SgdConfig sgd = fastSgd(2);
    sgd.initialRate = sgd.finalRate = 0.0;
    const auto result = joint_finetune(data, cfg.params, cfg.weights, sgd);
    CHECK(result.params == cfg.params);
    CHECK(result.weights.toVector() == cfg.weights.toVector());
  }
  SUBCASE("one step moves by -rate * gradient") {
    const auto cfg = tinyConfig(2);
    TrainDataset data = make_dataset({synth_sequence_gen(tinySpec(9, 2, 2.0))}, cfg);
    SgdConfig sgd = fastSgd(1);
    sgd.lambdaScale = sgd.rhoScale = sgd.etaScale = sgd.maskScale = 1.0;
    const double rate = sgd.initialRate;

    const ParamLayout layout{{0, 1}, false};
    bootstrap_filters(data, cfg.params);
    const TrainSample& s = data.sequences[0].samples[0];
    const auto fwd = forward(s.z, s.y, s.fPrev, cfg.params);
    const auto grads = backward(fwd.tape, cfg.params, s.zNext, s.yNext);
    const Eigen::VectorXd g = pack_gradient(grads, ConvLayerParams{}, cfg.params, layout);
    const Eigen::VectorXd before = pack_unconstrained(cfg.params, ConvLayerParams{}, layout);

    const auto result = joint_finetune(data, cfg.params, cfg.weights, sgd);
    const Eigen::VectorXd after = pack_unconstrained(result.params, ConvLayerParams{}, layout);
    CHECK(g.norm() > 0);
    CHECK(((after - before) + rate * g).cwiseAbs().maxCoeff() <=
          1e-14 * (1.0 + before.cwiseAbs().maxCoeff()));
    CHECK((after - before).norm() == doctest::Approx(rate * g.norm()).epsilon(1e-6));
  }
  SUBCASE("50 epochs do not increase the loss") {
    const auto cfg = tinyConfig(2, true);
    TrainDataset data = make_dataset(seqs, cfg);
    const double initial = dataset_loss(data, cfg.params);
    SgdConfig sgd = fastSgd(50);
    const auto result = joint_finetune(data, cfg.params, cfg.weights, sgd);
    refresh_features(data, result.weights);
    const double final = dataset_loss(data, result.params);
    MESSAGE("joint loss " << initial << " -> " << final);
    CHECK(final <= initial);
  }
}
