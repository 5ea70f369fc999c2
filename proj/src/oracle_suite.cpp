#include "ubacf/oracle_suite.hpp"

#include "ubacf/oracles.hpp"
#include "ubacf/updater.hpp"

#include <chrono>
#include <random>

namespace ubacf::oracle {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

StageParams randomStage(std::mt19937_64& rng, Index m, Index n) {
  StageParams p;
  p.lambda = uniform(rng, 0.3, 2.0);
  p.rho = uniform(rng, 0.3, 2.0);
  p.eta = uniform(rng, 0.1, 0.9);
  p.mask = CropOperator::centered(m, n, std::max<Index>(1, (m + 1) / 2),
                                  std::max<Index>(1, (n + 1) / 2));
  for (Index j = 0; j < p.mask.cropCols(); ++j)
    for (Index i = 0; i < p.mask.cropRows(); ++i)
      p.mask.weights(i, j) = uniform(rng, 0.3, 1.7);
  return p;
}

RealTensor3 unitFeatures(std::mt19937_64& rng, Index m, Index n, Index L) {
  RealTensor3 z = RealTensor3::Random(m, n, L, rng);
  z *= 1.0 / z.norm();
  return z;
}

} // namespace

SuiteCheck check_f_subproblem(int instances, std::uint64_t seed, double tolerance) {
  SuiteCheck check{"f-subproblem vs dense least squares", instances, 0, tolerance, 0};
  std::mt19937_64 rng(seed);
  const auto t0 = Clock::now();
  for (int i = 0; i < instances; ++i) {
    const Index m = 2 + Index(rng() % 7), n = 2 + Index(rng() % 7), L = 1 + Index(rng() % 3);
    const StageParams p = randomStage(rng, m, n);
    const auto z = RealTensor3::Random(m, n, L, rng);
    const auto y = gaussian_label(m, n, 0.0, 0.0, 1.0);
    const auto h = RealTensor3::Random(p.mask.cropRows(), p.mask.cropCols(), L, rng);
    const auto g = RealTensor3::Random(m, n, L, rng);
    const auto f = f_update(CorrelationProblem::make(z, y), h, g, p);
    const auto dense = dense_f_solve(z, y, h, g, p);
    check.worst = std::max(check.worst, std::sqrt(squaredDistance(f, dense)) / dense.norm());
  }
  check.seconds = since(t0);
  return check;
}

SuiteCheck check_h_subproblem(int instances, std::uint64_t seed, double tolerance) {
  SuiteCheck check{"h-subproblem vs dense solve", instances, 0, tolerance, 0};
  std::mt19937_64 rng(seed);
  const auto t0 = Clock::now();
  for (int i = 0; i < instances; ++i) {
    const Index m = 2 + Index(rng() % 7), n = 2 + Index(rng() % 7), L = 1 + Index(rng() % 3);
    const StageParams p = randomStage(rng, m, n);
    FilterVars v{RealTensor3::Random(m, n, L, rng),
                 RealTensor3(p.mask.cropRows(), p.mask.cropCols(), L),
                 RealTensor3::Random(m, n, L, rng)};
    check.worst = std::max(check.worst, (h_update(v, p) - dense_h_solve(v, p)).maxAbs());
  }
  check.seconds = since(t0);
  return check;
}

std::vector<SuiteCheck> check_admm_kkt(int instances, std::uint64_t seed, double fTol,
                                       double objTol, double residualTol) {
  SuiteCheck f{"ADMM f vs KKT minimiser", instances, 0, fTol, 0};
  SuiteCheck obj{"ADMM objective vs KKT minimiser", instances, 0, objTol, 0};
  SuiteCheck res{"ADMM primal residual", instances, 0, residualTol, 0};
  std::mt19937_64 rng(seed);
  const auto t0 = Clock::now();
  for (int i = 0; i < instances; ++i) {
    StageParams p;
    p.mask = CropOperator::centered(4, 4, 2, 2);
    const auto z = unitFeatures(rng, 4, 4, 1);
    const auto y = gaussian_label(4, 4, 0.0, 0.0, 1.0);
    const auto result = admm_solve(z, y, p, 200, 1e-300);
    const auto kkt = kkt_solve(z, y, p);
    f.worst = std::max(f.worst, (result.vars.f - kkt.f).maxAbs());
    obj.worst = std::max(obj.worst, std::abs(bacf_objective(z, y, result.vars, p).objective() -
                                             naive_objective(z, y, kkt, p)));
    res.worst = std::max(res.worst, result.primalResidual());
  }
  f.seconds = obj.seconds = res.seconds = since(t0);
  return {f, obj, res};
}

SuiteCheck check_unrolling(int instances, int maxStages, std::uint64_t seed, double tolerance) {
  SuiteCheck check{"unrolled stages vs truncated ADMM", instances, 0, tolerance, 0};
  std::mt19937_64 rng(seed);
  const auto t0 = Clock::now();
  for (int i = 0; i < instances; ++i) {
    const Index m = 4 + Index(rng() % 5), n = 4 + Index(rng() % 5), L = 1 + Index(rng() % 3);
    const StageParams stage = randomStage(rng, m, n);
    const auto z = unitFeatures(rng, m, n, L);
    const auto y = gaussian_label(m, n, 0.0, 0.0, 1.0);
    const auto fPrev = RealTensor3::Random(m, n, L, rng);
    for (int K = 1; K <= maxStages; ++K) {
      UpdaterParams params;
      params.stages.assign(std::size_t(K), stage);
      const auto result = forward(z, y, fPrev, params);
      const auto admm = admm_solve(z, y, stage, K, 1e-300);
      const auto& last = result.tape.stages.back();
      const double scale = std::max(1.0, admm.vars.f.maxAbs());
      check.worst = std::max({check.worst, (last.vars.f - admm.vars.f).maxAbs() / scale,
                              (last.vars.h - admm.vars.h).maxAbs() / scale,
                              (result.outputs.final() - interpolate(fPrev, admm.vars.f, stage.eta))
                                      .maxAbs() /
                                  scale});
    }
  }
  check.seconds = since(t0);
  return check;
}

SuiteCheck check_fft(int instances, std::uint64_t seed, double tolerance) {
  SuiteCheck check{"fft2 vs naive DFT", instances, 0, tolerance, 0};
  std::mt19937_64 rng(seed);
  const auto t0 = Clock::now();
  for (int i = 0; i < instances; ++i) {
    const Index m = 1 + Index(rng() % 8), n = 1 + Index(rng() % 8), L = 1 + Index(rng() % 3);
    const auto x = RealTensor3::Random(m, n, L, rng);
    const auto a = fft2(x);
    const auto b = naive_dft(x);
    for (Index l = 0; l < L; ++l)
      check.worst = std::max(check.worst, (a[l] - b[l]).cwiseAbs().maxCoeff());
    check.worst = std::max(check.worst, (ifft2(a) - x).maxAbs());
  }
  check.seconds = since(t0);
  return check;
}

std::vector<SuiteCheck> run_oracle_suite(std::uint64_t seed) {
  std::vector<SuiteCheck> all{check_fft(20, seed), check_f_subproblem(20, seed + 1),
                              check_h_subproblem(20, seed + 2)};
  for (auto& c : check_admm_kkt(10, seed + 3))
    all.push_back(c);
  all.push_back(check_unrolling(10, 4, seed + 4));
  return all;
}

} // namespace ubacf::oracle
