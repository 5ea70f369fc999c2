#pragma once

#include "ubacf/grad.hpp"
#include "ubacf/synth.hpp"
#include "ubacf/tracker.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ubacf {

struct SgdConfig {
  int batchSize = 16;
  int epochs = 5; // per phase
  double initialRate = 1e-2;
  double finalRate = 1e-5;
  // per-parameter multipliers on the rate, applied in the unconstrained space
  double lambdaScale = 1000.0;
  double rhoScale = 1000.0;
  double etaScale = 1000.0;
  double maskScale = 100.0;
  double weightScale = 10.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// r(e) = r0 (rT / r0)^(e / T) with T = epochs - 1.
double learning_rate(const SgdConfig& cfg, int epoch);

/// Exits training with a diagnostic when the loss or a gradient is not finite.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One frame pair. Both patches are cropped at the (jittered) frame-t
/// ground-truth center with the frame-t crop size; y_t peaks at the crop
/// center and y_{t+1} at the true target position in cells.
struct TrainSample {
  GrayImage patch;
  GrayImage patchNext;
  FeatureMap z;
  FeatureMap zNext;
  RealTensor3 y;
  RealTensor3 yNext;
  RealTensor3 fPrev; // f_t, refreshed by bootstrap_filters
};

struct TrainSequence {
  std::string name;
  RealTensor3 fInit; // admm_solve on the first pair's z_t
  std::vector<TrainSample> samples;
};

struct TrainDataset {
  TrackerConfig config; // feature config, W_F, grid, label and init-solve settings
  std::vector<TrainSequence> sequences;

  std::size_t sampleCount() const;
};

/// How frame pairs are cut from a sequence.
struct PairSampling {
  /// Crop centers after the first frame are displaced by up to
  /// jitter * sqrt(W H) px per axis, imitating localisation error.
  double jitter = 0.1;
  std::uint64_t seed = 1;
};

TrainDataset make_dataset(const std::vector<LabeledSequence>& sequences,
                          const TrackerConfig& config, const PairSampling& sampling = {});

/// Recomputes every z from the stored patches with `weights` and the
/// sequence bootstrap filters fInit.
void refresh_features(TrainDataset& dataset, const ConvLayerParams& weights);

/// Rolls f_t forward through each sequence with the current updater.
void bootstrap_filters(TrainDataset& dataset, const UpdaterParams& params);

/// Mean over samples of sum_k weight_k J_k (total_loss for empty weights),
/// after bootstrapping f_t with `params`.
double dataset_loss(TrainDataset& dataset, const UpdaterParams& params,
                    const std::vector<double>& stageWeights = {});

/// Which parameters a flat vector covers.
struct ParamLayout {
  std::vector<Index> stages; // 0-based stage indices
  bool weights = false;      // W_F entries appended after the stages
};

/// Unconstrained coordinates: log lambda, log rho, logit eta, mask entries
/// (column-major) for each listed stage, then W_F.
Eigen::VectorXd pack_unconstrained(const UpdaterParams& params, const ConvLayerParams& weights,
                                   const ParamLayout& layout);
void unpack_unconstrained(const Eigen::VectorXd& v, UpdaterParams& params,
                          ConvLayerParams& weights, const ParamLayout& layout);

/// Chain rule from constrained gradients to the unconstrained coordinates.
Eigen::VectorXd pack_gradient(const GradientBundle& grads, const ConvLayerParams& dWeights,
                              const UpdaterParams& params, const ParamLayout& layout);

Eigen::VectorXd scaling_vector(const SgdConfig& cfg, const UpdaterParams& params,
                               const ConvLayerParams& weights, const ParamLayout& layout);

/// p - rate * scaling .* g  (empty scaling means all ones)
Eigen::VectorXd sgd_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                         double rate, const Eigen::VectorXd& scaling = {});

struct LossRow {
  int epoch = 0;
  std::string phase; // "stage" or "joint"
  int stage = 0;     // 0 for the joint phase
  double loss = 0;   // mean minibatch loss over the epoch
  double rate = 0;

  friend bool operator==(const LossRow&, const LossRow&) = default;
};

/// Called before every SGD step with the parameters about to be updated.
using StepObserver =
    std::function<void(const UpdaterParams&, const std::string& phase, int stage, int epoch)>;

struct TrainResult {
  UpdaterParams params;
  ConvLayerParams weights;
  std::vector<LossRow> log;
};

/// Greedy stage-wise training: stage k starts from the trained stage k - 1
/// (stage 1 from lambda = rho = 1, eta = 0.013, binary mask) and minimises
/// J_k with stages < k and W_F frozen.
TrainResult stagewise_train(TrainDataset& dataset, Index stages, const SgdConfig& cfg,
                            const StepObserver& observer = {});

/// Joint SGD on total_loss over every stage and, when the features are
/// learnable, W_F. f_t is treated as data.
TrainResult joint_finetune(TrainDataset& dataset, const UpdaterParams& params,
                           const ConvLayerParams& weights, const SgdConfig& cfg,
                           const StepObserver& observer = {});

} // namespace ubacf
