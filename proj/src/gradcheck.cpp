#include "ubacf/gradcheck.hpp"

#include "ubacf/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace ubacf {

void FdReport::writeCsv(std::ostream& os) const {
  const auto oldPrecision = os.precision(17);
  os << "name,analytic,numeric,abs_error,rel_error,ok\n";
  for (const auto& e : entries)
    os << e.name << ',' << e.analytic << ',' << e.numeric << ',' << e.absError << ','
       << e.relError << ',' << (e.ok ? 1 : 0) << '\n';
  os << "# step=" << step << " tolerance=" << tolerance << " abs_floor=" << absFloor
     << " max_rel_error=" << maxRelError << " max_abs_error=" << maxAbsError
     << " entries=" << entries.size() << " passed=" << (passed ? 1 : 0) << '\n';
  os.precision(oldPrecision);
}

FdReport check_gradients(const std::vector<FdProbe>& probes, const std::function<double()>& loss,
                         double step, double tolerance, double absFloor) {
  if (!(step > 0))
    throw std::invalid_argument("check_gradients: step must be positive");
  FdReport report;
  report.step = step;
  report.tolerance = tolerance;
  report.absFloor = absFloor;
  for (const FdProbe& probe : probes) {
    const double saved = *probe.value;
    *probe.value = saved + step;
    const double up = loss();
    *probe.value = saved - step;
    const double down = loss();
    *probe.value = saved;

    FdEntry e;
    e.name = probe.name;
    e.analytic = probe.analytic;
    e.numeric = (up - down) / (2.0 * step);
    e.absError = std::abs(e.analytic - e.numeric);
    const double scale = std::max(std::abs(e.analytic), std::abs(e.numeric));
    e.relError = scale > 0 ? e.absError / scale : 0.0;
    e.ok = e.absError <= std::max(tolerance * scale, absFloor);
    report.passed = report.passed && e.ok;
    report.maxAbsError = std::max(report.maxAbsError, e.absError);
    if (e.absError > absFloor)
      report.maxRelError = std::max(report.maxRelError, e.relError);
    report.entries.push_back(std::move(e));
  }
  return report;
}

namespace {

struct Instance {
  RealTensor3 z, zNext, y, yNext, fPrev;
  UpdaterParams params;
  GrayImage patch, patchNext;
  FeatureConfig cfg;
  ConvLayerParams weights;
};

std::vector<Index> sampleIndices(std::mt19937_64& rng, Index size, Index count) {
  std::vector<Index> all(static_cast<std::size_t>(size));
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(std::min(size, count)));
  std::sort(all.begin(), all.end());
  return all;
}

void addTensorProbes(std::vector<FdProbe>& probes, const std::string& name, RealTensor3& primal,
                     const RealTensor3& grad, std::mt19937_64& rng, Index count) {
  const Index plane = primal.rows() * primal.cols();
  for (Index flat : sampleIndices(rng, primal.size(), count)) {
    const Index l = flat / plane;
    const Index r = (flat % plane) % primal.rows();
    const Index c = (flat % plane) / primal.rows();
    probes.push_back({name + "[" + std::to_string(r) + "," + std::to_string(c) + "," +
                          std::to_string(l) + "]",
                      &primal(r, c, l), grad(r, c, l)});
  }
}

GrayImage randomPatch(std::mt19937_64& rng, Index rows, Index cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r)
      img(r, c) = u(rng);
  return img;
}

} // namespace

FdReport finite_diff_check(const FdSetup& setup, double step, double tolerance) {
  std::mt19937_64 rng(setup.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const Index m = setup.rows;
  const Index n = setup.cols;
  const Index L = setup.channels;

  Instance inst;
  if (setup.learnableFeatures) {
    inst.cfg.cellSize = setup.cellSize;
    inst.cfg.recipe = ChannelRecipe::GrayscaleGradients;
    inst.cfg.learnable = true;
    inst.cfg.kernelSize = 3;
    inst.cfg.outChannels = static_cast<int>(L);
    inst.weights = ConvLayerParams::random(inst.cfg.baseChannels(), L, 3, rng, 0.5);
    for (Index o = 0; o < L; ++o)
      inst.weights.bias(o) = uniform(0.02, 0.1);
    inst.patch = randomPatch(rng, m * setup.cellSize, n * setup.cellSize);
    inst.patchNext = randomPatch(rng, m * setup.cellSize, n * setup.cellSize);
  } else {
    inst.z = RealTensor3::Random(m, n, L, rng);
    inst.z *= 1.0 / inst.z.norm();
    inst.zNext = RealTensor3::Random(m, n, L, rng);
    inst.zNext *= 1.0 / inst.zNext.norm();
  }
  inst.y = gaussian_label<double>(m, n, 0.0, 0.0, 1.0);
  inst.yNext = gaussian_label<double>(m, n, 1.0, double(n - 1), 1.0);
  inst.fPrev = RealTensor3::Random(m, n, L, rng);
  inst.fPrev *= 0.5;

  CropOperator mask = CropOperator::centered(m, n, (m + 1) / 2, (n + 1) / 2);
  for (Index k = 0; k < setup.stages; ++k) {
    StageParams s;
    s.lambda = uniform(0.3, 2.0);
    s.rho = uniform(0.3, 2.0);
    s.eta = uniform(0.1, 0.9);
    s.mask = mask;
    if (setup.randomMasks)
      for (Index j = 0; j < mask.cropCols(); ++j)
        for (Index i = 0; i < mask.cropRows(); ++i)
          s.mask.weights(i, j) = uniform(0.3, 1.7);
    inst.params.stages.push_back(s);
  }

  FeatureCache cache, cacheNext;
  auto refreshFeatures = [&] {
    if (!setup.learnableFeatures)
      return;
    auto a = extract_features(inst.patch, inst.cfg, inst.weights);
    auto b = extract_features(inst.patchNext, inst.cfg, inst.weights);
    inst.z = std::move(a.features);
    inst.zNext = std::move(b.features);
    cache = std::move(a.cache);
    cacheNext = std::move(b.cache);
  };
  auto loss = [&] {
    refreshFeatures();
    const auto result = forward(inst.z, inst.y, inst.fPrev, inst.params);
    return total_loss(result.outputs, inst.zNext, inst.yNext);
  };

  refreshFeatures();
  const auto result = forward(inst.z, inst.y, inst.fPrev, inst.params);
  const GradientBundle grads = backward(result.tape, inst.params, inst.zNext, inst.yNext);

  std::vector<FdProbe> probes;
  for (Index k = 0; k < setup.stages; ++k) {
    auto& s = inst.params.stages[static_cast<std::size_t>(k)];
    const auto& g = grads.stages[static_cast<std::size_t>(k)];
    const std::string tag = "stage" + std::to_string(k + 1) + ".";
    probes.push_back({tag + "lambda", &s.lambda, g.lambda});
    probes.push_back({tag + "rho", &s.rho, g.rho});
    probes.push_back({tag + "eta", &s.eta, g.eta});
    for (Index j = 0; j < s.mask.cropCols(); ++j)
      for (Index i = 0; i < s.mask.cropRows(); ++i)
        probes.push_back({tag + "mask[" + std::to_string(i) + "," + std::to_string(j) + "]",
                          &s.mask.weights(i, j), g.mask(i, j)});
  }
  addTensorProbes(probes, "f_t", inst.fPrev, grads.fPrev, rng, setup.tensorSamples);
  if (setup.learnableFeatures) {
    ConvLayerParams dW = representor_backward(grads.z, cache, inst.weights);
    const ConvLayerParams dWNext = representor_backward(grads.zNext, cacheNext, inst.weights);
    const Eigen::VectorXd flat = dW.toVector() + dWNext.toVector();
    for (Index i = 0; i < inst.weights.parameterCount(); ++i)
      probes.push_back({"W_F[" + std::to_string(i) + "]", inst.weights.entry(i), flat(i)});
  } else {
    addTensorProbes(probes, "z_t", inst.z, grads.z, rng, setup.tensorSamples);
    addTensorProbes(probes, "z_t+1", inst.zNext, grads.zNext, rng, setup.tensorSamples);
  }
  return check_gradients(probes, loss, step, tolerance);
}

} // namespace ubacf
