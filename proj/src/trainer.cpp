#include "ubacf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ubacf {

void SgdConfig::validate() const {
  if (batchSize < 1 || epochs < 0)
    throw std::invalid_argument("SgdConfig: batch size must be >= 1 and epochs >= 0");
  if (!(initialRate >= 0) || !(finalRate >= 0) || finalRate > initialRate)
    throw std::invalid_argument("SgdConfig: need 0 <= final rate <= initial rate");
  for (double s : {lambdaScale, rhoScale, etaScale, maskScale, weightScale})
    if (!(s >= 0))
      throw std::invalid_argument("SgdConfig: scaling factors must be >= 0");
}

double learning_rate(const SgdConfig& cfg, int epoch) {
  if (cfg.epochs <= 1 || cfg.initialRate == 0)
    return cfg.initialRate;
  const double T = double(cfg.epochs - 1);
  return cfg.initialRate * std::pow(cfg.finalRate / cfg.initialRate, double(epoch) / T);
}

std::size_t TrainDataset::sampleCount() const {
  std::size_t n = 0;
  for (const auto& s : sequences)
    n += s.samples.size();
  return n;
}

TrainDataset make_dataset(const std::vector<LabeledSequence>& sequences,
                          const TrackerConfig& config, const PairSampling& sampling) {
  config.validate();
  if (!(sampling.jitter >= 0))
    throw std::invalid_argument("make_dataset: jitter must be >= 0");
  std::mt19937_64 rng(sampling.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  TrainDataset data;
  data.config = config;
  const Index grid = config.gridSize();
  const Index pixels = grid * config.features.cellSize;
  const double sigma = config.labelSigma();
  for (const auto& seq : sequences) {
    if (seq.frames.size() != seq.boxes.size())
      throw std::invalid_argument("make_dataset: frame and box counts differ in " + seq.name);
    TrainSequence ts;
    ts.name = seq.name;
    for (std::size_t t = 0; t + 1 < seq.frames.size(); ++t) {
      const BoundingBox& a = seq.boxes[t];
      const BoundingBox& b = seq.boxes[t + 1];
      const double side = config.padding * std::sqrt(a.width * a.height);
      const double spread = t == 0 ? 0.0 : sampling.jitter * std::sqrt(a.width * a.height);
      const double cx = a.centerX() + spread * unit(rng);
      const double cy = a.centerY() + spread * unit(rng);
      TrainSample s;
      s.patch = sample_patch(seq.frames[t], cx, cy, side, side, pixels, pixels);
      s.patchNext = sample_patch(seq.frames[t + 1], cx, cy, side, side, pixels, pixels);
      const double cells = double(grid) / side;
      auto wrap = [&](double d) {
        const double w = std::fmod(d * cells, double(grid));
        return w < 0 ? w + double(grid) : w;
      };
      s.y = gaussian_label(grid, grid, 0.0, 0.0, sigma);
      s.yNext = gaussian_label(grid, grid, wrap(b.centerY() - cy), wrap(b.centerX() - cx), sigma);
      ts.samples.push_back(std::move(s));
    }
    if (!ts.samples.empty())
      data.sequences.push_back(std::move(ts));
  }
  if (data.sequences.empty())
    throw std::invalid_argument("make_dataset: no frame pairs");
  refresh_features(data, config.weights);
  return data;
}

void refresh_features(TrainDataset& dataset, const ConvLayerParams& weights) {
  TrackerConfig& cfg = dataset.config;
  cfg.weights = weights;
  StageParams solve;
  solve.lambda = cfg.initLambda;
  solve.rho = cfg.initRho;
  solve.mask = cfg.params.stages.front().mask;
  solve.mask.weights.setOnes();
  for (auto& seq : dataset.sequences) {
    for (auto& s : seq.samples) {
      s.z = extract_features(s.patch, cfg.features, weights).features;
      s.zNext = extract_features(s.patchNext, cfg.features, weights).features;
    }
    const auto& first = seq.samples.front();
    seq.fInit = admm_solve(first.z, first.y, solve, cfg.initIterations, cfg.initTolerance).vars.f;
  }
}

void bootstrap_filters(TrainDataset& dataset, const UpdaterParams& params) {
  for (auto& seq : dataset.sequences) {
    RealTensor3 f = seq.fInit;
    for (auto& s : seq.samples) {
      s.fPrev = f;
      f = forward(s.z, s.y, f, params).outputs.final();
    }
  }
}

namespace {

double weightedLoss(const StageOutputs& out, const TrainSample& s,
                    const std::vector<double>& stageWeights) {
  double loss = 0;
  for (std::size_t k = 0; k < out.filters.size(); ++k) {
    const double w = stageWeights.empty() ? 1.0 : stageWeights[k];
    if (w != 0)
      loss += w * stage_loss(out.filters[k], s.zNext, s.yNext);
  }
  return loss;
}

} // namespace

double dataset_loss(TrainDataset& dataset, const UpdaterParams& params,
                    const std::vector<double>& stageWeights) {
  bootstrap_filters(dataset, params);
  double sum = 0;
  for (const auto& seq : dataset.sequences)
    for (const auto& s : seq.samples)
      sum += weightedLoss(forward(s.z, s.y, s.fPrev, params).outputs, s, stageWeights);
  return sum / double(dataset.sampleCount());
}

namespace {

Index layoutSize(const UpdaterParams& params, const ConvLayerParams& weights,
                 const ParamLayout& layout) {
  Index n = 0;
  for (Index k : layout.stages)
    n += 3 + params.stages.at(std::size_t(k)).mask.weights.size();
  if (layout.weights)
    n += weights.parameterCount();
  return n;
}

double logit(double p) { return std::log(p) - std::log1p(-p); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

Eigen::VectorXd pack_unconstrained(const UpdaterParams& params, const ConvLayerParams& weights,
                                   const ParamLayout& layout) {
  Eigen::VectorXd v(layoutSize(params, weights, layout));
  Index i = 0;
  for (Index k : layout.stages) {
    const StageParams& s = params.stages.at(std::size_t(k));
    v(i++) = std::log(s.lambda);
    v(i++) = std::log(s.rho);
    v(i++) = logit(s.eta);
    const Index n = s.mask.weights.size();
    v.segment(i, n) = s.mask.weights.reshaped();
    i += n;
  }
  if (layout.weights)
    v.tail(weights.parameterCount()) = weights.toVector();
  return v;
}

void unpack_unconstrained(const Eigen::VectorXd& v, UpdaterParams& params,
                          ConvLayerParams& weights, const ParamLayout& layout) {
  if (v.size() != layoutSize(params, weights, layout))
    throw ShapeError("unpack_unconstrained: vector does not match the layout");
  Index i = 0;
  for (Index k : layout.stages) {
    StageParams& s = params.stages.at(std::size_t(k));
    s.lambda = std::exp(v(i++));
    s.rho = std::exp(v(i++));
    s.eta = sigmoid(v(i++));
    const Index n = s.mask.weights.size();
    s.mask.weights.reshaped() = v.segment(i, n);
    i += n;
  }
  if (layout.weights)
    weights.fromVector(v.tail(weights.parameterCount()));
}

Eigen::VectorXd pack_gradient(const GradientBundle& grads, const ConvLayerParams& dWeights,
                              const UpdaterParams& params, const ParamLayout& layout) {
  Eigen::VectorXd v(layoutSize(params, dWeights, layout));
  Index i = 0;
  for (Index k : layout.stages) {
    const StageParams& s = params.stages.at(std::size_t(k));
    const StageGradient& g = grads.stages.at(std::size_t(k));
    v(i++) = g.lambda * s.lambda;
    v(i++) = g.rho * s.rho;
    v(i++) = g.eta * s.eta * (1.0 - s.eta);
    const Index n = g.mask.size();
    v.segment(i, n) = g.mask.reshaped();
    i += n;
  }
  if (layout.weights)
    v.tail(dWeights.parameterCount()) = dWeights.toVector();
  return v;
}

Eigen::VectorXd scaling_vector(const SgdConfig& cfg, const UpdaterParams& params,
                               const ConvLayerParams& weights, const ParamLayout& layout) {
  Eigen::VectorXd v(layoutSize(params, weights, layout));
  Index i = 0;
  for (Index k : layout.stages) {
    v(i++) = cfg.lambdaScale;
    v(i++) = cfg.rhoScale;
    v(i++) = cfg.etaScale;
    const Index n = params.stages.at(std::size_t(k)).mask.weights.size();
    v.segment(i, n).setConstant(cfg.maskScale);
    i += n;
  }
  if (layout.weights)
    v.tail(weights.parameterCount()).setConstant(cfg.weightScale);
  return v;
}

Eigen::VectorXd sgd_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                         double rate, const Eigen::VectorXd& scaling) {
  if (grads.size() != params.size() || (scaling.size() != 0 && scaling.size() != params.size()))
    throw ShapeError("sgd_step: parameter, gradient and scaling sizes differ");
  if (scaling.size() == 0)
    return params - rate * grads;
  return params - rate * scaling.cwiseProduct(grads);
}

namespace {

struct SampleRef {
  std::size_t sequence;
  std::size_t sample;
};

std::vector<SampleRef> allSamples(const TrainDataset& dataset) {
  std::vector<SampleRef> refs;
  for (std::size_t i = 0; i < dataset.sequences.size(); ++i)
    for (std::size_t j = 0; j < dataset.sequences[i].samples.size(); ++j)
      refs.push_back({i, j});
  return refs;
}

void checkFinite(double loss, const Eigen::VectorXd& g, const std::string& phase, int stage,
                 int epoch) {
  if (!std::isfinite(loss) || !g.allFinite())
    throw TrainingDiverged("training diverged in " + phase + " phase, stage " +
                           std::to_string(stage) + ", epoch " + std::to_string(epoch) +
                           ": loss " + std::to_string(loss) +
                           "; lower the learning rate or scaling factors");
}

/// Shared SGD loop. `gradient` returns the minibatch-mean loss and fills the
/// mean gradient in unconstrained coordinates.
template <typename GradFn, typename ApplyFn, typename EpochFn>
void runPhase(TrainDataset& dataset, const SgdConfig& cfg, Eigen::VectorXd& p,
              const Eigen::VectorXd& scaling, const std::string& phase, int stage,
              std::vector<LossRow>& log, GradFn gradient, ApplyFn apply, EpochFn beginEpoch,
              const StepObserver& observer, const UpdaterParams& current) {
  std::mt19937_64 rng(cfg.seed + 7919 * std::uint64_t(stage));
  auto refs = allSamples(dataset);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    beginEpoch();
    const double rate = learning_rate(cfg, epoch);
    std::shuffle(refs.begin(), refs.end(), rng);
    double lossSum = 0;
    int batches = 0;
    for (std::size_t start = 0; start < refs.size(); start += std::size_t(cfg.batchSize)) {
      const std::size_t end = std::min(refs.size(), start + std::size_t(cfg.batchSize));
      Eigen::VectorXd g = Eigen::VectorXd::Zero(p.size());
      double loss = 0;
      for (std::size_t i = start; i < end; ++i)
        loss += gradient(dataset.sequences[refs[i].sequence].samples[refs[i].sample], g);
      const double count = double(end - start);
      loss /= count;
      g /= count;
      checkFinite(loss, g, phase, stage, epoch);
      if (observer)
        observer(current, phase, stage, epoch);
      Eigen::VectorXd next = sgd_step(p, g, rate, scaling);
      if (next != p) {
        p = std::move(next);
        apply(p);
      }
      lossSum += loss;
      ++batches;
    }
    log.push_back({epoch, phase, stage, lossSum / std::max(batches, 1), rate});
  }
}

} // namespace

TrainResult stagewise_train(TrainDataset& dataset, Index stages, const SgdConfig& cfg,
                            const StepObserver& observer) {
  cfg.validate();
  if (stages < 1)
    throw std::invalid_argument("stagewise_train: need at least one stage");
  if (dataset.sampleCount() == 0)
    throw std::invalid_argument("stagewise_train: empty dataset");

  TrainResult result;
  result.weights = dataset.config.weights;
  const CropOperator binary = dataset.config.params.stages.front().mask;
  UpdaterParams& params = result.params;
  for (Index k = 0; k < stages; ++k) {
    if (k == 0) {
      params = UpdaterParams::initial(1, binary);
      params.stages[0].mask.weights.setOnes();
    } else {
      params.stages.push_back(params.stages.back());
    }
    const ParamLayout layout{{k}, false};
    Eigen::VectorXd p = pack_unconstrained(params, result.weights, layout);
    const Eigen::VectorXd scaling = scaling_vector(cfg, params, result.weights, layout);
    std::vector<double> weights(std::size_t(k + 1), 0.0);
    weights.back() = 1.0;

    auto gradient = [&](const TrainSample& s, Eigen::VectorXd& g) {
      const auto fwd = forward(s.z, s.y, s.fPrev, params);
      const auto grads = backward(fwd.tape, params, s.zNext, s.yNext, weights);
      g += pack_gradient(grads, ConvLayerParams{}, params, layout);
      return grads.loss;
    };
    ConvLayerParams unused;
    auto apply = [&](const Eigen::VectorXd& v) { unpack_unconstrained(v, params, unused, layout); };
    auto beginEpoch = [&] { bootstrap_filters(dataset, params); };
    runPhase(dataset, cfg, p, scaling, "stage", int(k + 1), result.log, gradient, apply,
             beginEpoch, observer, params);
  }
  return result;
}

TrainResult joint_finetune(TrainDataset& dataset, const UpdaterParams& params,
                           const ConvLayerParams& weights, const SgdConfig& cfg,
                           const StepObserver& observer) {
  cfg.validate();
  params.validate();
  TrainResult result;
  result.params = params;
  result.weights = weights;
  const bool learnable = dataset.config.features.learnable;
  ParamLayout layout;
  for (Index k = 0; k < params.stageCount(); ++k)
    layout.stages.push_back(k);
  layout.weights = learnable;
  Eigen::VectorXd p = pack_unconstrained(result.params, result.weights, layout);
  const Eigen::VectorXd scaling = scaling_vector(cfg, result.params, result.weights, layout);
  const FeatureConfig& fcfg = dataset.config.features;

  auto gradient = [&](const TrainSample& s, Eigen::VectorXd& g) {
    if (!learnable) {
      const auto fwd = forward(s.z, s.y, s.fPrev, result.params);
      const auto grads = backward(fwd.tape, result.params, s.zNext, s.yNext);
      g += pack_gradient(grads, ConvLayerParams{}, result.params, layout);
      return grads.loss;
    }
    const auto a = extract_features(s.patch, fcfg, result.weights);
    const auto b = extract_features(s.patchNext, fcfg, result.weights);
    const auto fwd = forward(a.features, s.y, s.fPrev, result.params);
    const auto grads = backward(fwd.tape, result.params, b.features, s.yNext);
    const Eigen::VectorXd dW = representor_backward(grads.z, a.cache, result.weights).toVector() +
                               representor_backward(grads.zNext, b.cache, result.weights).toVector();
    ConvLayerParams dWeights = result.weights;
    dWeights.fromVector(dW);
    g += pack_gradient(grads, dWeights, result.params, layout);
    return grads.loss;
  };
  auto apply = [&](const Eigen::VectorXd& v) {
    unpack_unconstrained(v, result.params, result.weights, layout);
  };
  auto beginEpoch = [&] {
    if (learnable)
      refresh_features(dataset, result.weights);
    bootstrap_filters(dataset, result.params);
  };
  runPhase(dataset, cfg, p, scaling, "joint", 0, result.log, gradient, apply, beginEpoch,
           observer, result.params);
  if (learnable)
    refresh_features(dataset, result.weights);
  return result;
}

} // namespace ubacf
