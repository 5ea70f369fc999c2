#include "ubacf/checkpoint.hpp"
#include "ubacf/config.hpp"
#include "ubacf/csv.hpp"
#include "ubacf/dataset.hpp"
#include "ubacf/gradcheck.hpp"
#include "ubacf/metrics.hpp"
#include "ubacf/oracle_suite.hpp"
#include "ubacf/synth.hpp"
#include "ubacf/tracker.hpp"
#include "ubacf/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

using namespace ubacf;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass)
    ++failures;
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

void oracleCriteria() {
  const auto f = oracle::check_f_subproblem(25, 101);
  report(f.passed() && f.seconds < 10, "oracle f-subproblem",
         format("%d instances, max rel err %.2e (<= 1e-7), %.2f s (< 10 s)", f.instances, f.worst,
                f.seconds));

  const auto h = oracle::check_h_subproblem(25, 202);
  report(h.passed(), "oracle h-subproblem",
         format("%d instances with weighted masks, max abs err %.2e (<= 1e-9)", h.instances,
                h.worst));

  const auto admm = oracle::check_admm_kkt(12, 303);
  bool ok = true;
  for (const auto& c : admm)
    ok = ok && c.passed();
  report(ok, "ADMM vs KKT minimiser",
         format("%d instances 4x4x1, f err %.2e (<= 1e-5), objective err %.2e (<= 1e-8), "
                "primal residual %.2e (<= 1e-6)",
                admm[0].instances, admm[0].worst, admm[1].worst, admm[2].worst));
}

void gradientCriterion() {
  const auto t0 = Clock::now();
  bool ok = true;
  double maxRel = 0, maxAbs = 0;
  std::size_t entries = 0;
  for (Index K = 1; K <= 3; ++K)
    for (bool learnable : {false, true})
      for (std::uint64_t seed : {11, 12}) {
        FdSetup setup;
        setup.rows = setup.cols = 6;
        setup.channels = 2;
        setup.stages = K;
        setup.seed = seed + 100 * std::uint64_t(K);
        setup.learnableFeatures = learnable;
        setup.tensorSamples = 72; // every entry of a 6x6x2 tensor
        const FdReport r = finite_diff_check(setup, 1e-4, 1e-4);
        ok = ok && r.passed;
        maxRel = std::max(maxRel, r.maxRelError);
        maxAbs = std::max(maxAbs, r.maxAbsError);
        entries += r.entries.size();
      }
  const double secs = since(t0);
  report(ok && secs < 60, "gradient fidelity",
         format("K=1,2,3, %zu entries incl. W_F, max rel err %.2e (<= 1e-4 where abs err > "
                "1e-7), max abs err %.2e, %.2f s (< 60 s)",
                entries, maxRel, maxAbs, secs));
}

void unrollingCriterion() {
  const auto u = oracle::check_unrolling(12, 5, 404);
  report(u.passed(), "unrolling consistency",
         format("%d instances, K=1..5, max err %.2e (<= 1e-12)", u.instances, u.worst));
}

double suiteIou(const std::vector<LabeledSequence>& seqs, const TrackerConfig& cfg) {
  double sum = 0;
  for (const auto& s : seqs)
    sum += eval_metrics(track_sequence(s.frames, s.boxes[0], cfg), s.boxes).meanIou;
  return sum / double(seqs.size());
}

std::vector<LabeledSequence> render(const std::vector<SynthSpec>& specs) {
  std::vector<LabeledSequence> out;
  for (std::size_t i = 0; i < specs.size(); ++i)
    out.push_back(synth_sequence_gen(specs[i], "seq" + std::to_string(i + 1)));
  return out;
}

struct Trained {
  TrackerConfig k1, k2;
  std::vector<LossRow> log;
};

Trained trainingCriteria(const Config& config) {
  const auto t0 = Clock::now();
  const auto train = render(synth_suite(config.getInt("synth_count"),
                                        config.getInt("synth_frames"),
                                        config.getDouble("synth_max_speed"),
                                        config.getSeed("synth_seed")));
  Config c2 = config;
  c2.set("stages", "2");
  Trained out;
  out.k2 = c2.trackerConfig();
  TrainDataset data = make_dataset(train, out.k2, config.pairSampling());
  const double initial =
      dataset_loss(data, UpdaterParams::initial(2, out.k2.params.stages[0].mask));

  // the K=1 updater is the stage-1 result, seen at the first stage-2 step
  UpdaterParams stage1;
  const auto result = stagewise_train(
      data, 2, config.sgdConfig(),
      [&](const UpdaterParams& p, const std::string&, int stage, int) {
        if (stage == 2 && stage1.stages.empty())
          stage1.stages = {p.stages[0]};
      });
  const double final = dataset_loss(data, result.params);
  out.k2.params = result.params;
  out.k1 = out.k2;
  out.k1.params = stage1;
  out.log = result.log;
  const double reduction = 1.0 - final / initial;
  report(reduction >= 0.5, "training sanity",
         format("K=2 on %zu sequences x %d frames (%zu pairs), %d epochs/stage: loss %.4f -> "
                "%.4f, reduction %.1f%% (>= 50%%), %.1f s",
                train.size(), config.getInt("synth_frames"), data.sampleCount(),
                config.getInt("epochs"), initial, final, 100 * reduction, since(t0)));
  return out;
}

void tableTrendCriterion(const Trained& t) {
  const auto test = render(synth_suite(10, 40, 3.0, 99));
  const double k1 = suiteIou(test, t.k1);
  const double k2 = suiteIou(test, t.k2);
  report(k2 >= k1, "stage-count trend (K=2 >= K=1)",
         format("%zu held-out sequences x 40 frames, mean IoU K=1 %.4f, K=2 %.4f", test.size(), k1,
                k2));
}

void trackingFloorCriterion(const Trained& t) {
  std::vector<SynthSpec> moving, still;
  const double dirs[5][2] = {{2, 0}, {0, 2}, {-2, 0}, {0, -2}, {1.6, 1.2}};
  for (int i = 0; i < 5; ++i) {
    SynthSpec s;
    s.frames = 40;
    s.noise = 0.02;
    s.seed = std::uint64_t(500 + i);
    s.velocityX = dirs[i][0];
    s.velocityY = dirs[i][1];
    s.startX = 68 - 19 * dirs[i][0];
    s.startY = 68 - 19 * dirs[i][1];
    moving.push_back(s);
    SynthSpec q;
    q.frames = 20;
    q.seed = std::uint64_t(600 + i);
    q.noise = i % 2 ? 0.02 : 0.0;
    still.push_back(q);
  }
  const double cv = suiteIou(render(moving), t.k2);
  const double st = suiteIou(render(still), t.k2);

  FeatureConfig features = t.k2.features;
  const TrackerConfig big = default_tracker_config(64, 2, features);
  SynthSpec longSpec;
  longSpec.frames = 100;
  longSpec.noise = 0.02;
  longSpec.startX = 40;
  longSpec.velocityX = 0.5;
  longSpec.seed = 77;
  const auto longSeq = synth_sequence_gen(longSpec);
  const auto t0 = Clock::now();
  const auto boxes = track_sequence(longSeq.frames, longSeq.boxes[0], big);
  const double secs = since(t0);

  report(cv >= 0.6 && st >= 0.9 && secs < 5, "tracking floor",
         format("constant velocity 2 px/frame mean IoU %.4f (>= 0.6), static %.4f (>= 0.9), "
                "100 frames at 64x64 grid %.2f s (< 5 s, IoU %.3f)",
                cv, st, secs, eval_metrics(boxes, longSeq.boxes).meanIou));
}

void scaleInvarianceCriterion(const Trained& t) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1, 1);
  int identical = 0, states = 0;
  for (int i = 0; i < 100; ++i) {
    SynthSpec s;
    s.frames = 2;
    s.seed = std::uint64_t(3000 + i);
    s.noise = 0.03;
    s.velocityX = 3 * u(rng);
    s.velocityY = 3 * u(rng);
    s.targetWidth = 20 + 8 * u(rng);
    s.targetHeight = 20 + 8 * u(rng);
    s.scaleDrift = 1 + 0.02 * u(rng);
    const auto seq = synth_sequence_gen(s);
    TrackerState state = init_first_frame(seq.frames[0], seq.boxes[0], t.k2);
    // vary the filter beyond the fresh solution
    state = update_model(state, seq.frames[1]);
    state.scale = 1 + 0.03 * u(rng);
    const Location ref = locate(state, seq.frames[1]);
    bool same = true;
    for (double c : {0.1, 1.0, 10.0}) {
      TrackerState scaled = state;
      scaled.filter *= c;
      const Location loc = locate(scaled, seq.frames[1]);
      same = same && loc.scaleIndex == ref.scaleIndex && loc.rowShift == ref.rowShift &&
             loc.colShift == ref.colShift && std::abs(loc.rowOffset - ref.rowOffset) < 1e-9 &&
             std::abs(loc.colOffset - ref.colOffset) < 1e-9;
    }
    identical += same;
    ++states;
  }
  report(identical == states, "argmax scale invariance",
         format("%d/%d random states give the same scale, cell and sub-cell decision for "
                "c in {0.1, 1, 10}",
                identical, states));
}

void ioCriterion(const Trained& t) {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok)
      failed.push_back(what);
  };
  const fs::path dir = fs::temp_directory_path() / ("ubacf_accept_" + std::to_string(::getpid()));
  std::size_t boxesChecked = 0;
  for (int i = 0; i < 5; ++i) {
    SynthSpec s;
    s.frames = 6;
    s.seed = std::uint64_t(40 + i);
    s.velocityX = 1.37 * (i + 1) / 3.0;
    s.velocityY = -0.91 * i / 2.0;
    s.scaleDrift = 1.0 + 0.003 * i;
    const auto seq = synth_sequence_gen(s, "rt" + std::to_string(i));
    write_otb_sequence((dir / seq.name).string(), seq);
    const auto back = load_otb_sequence((dir / seq.name).string());
    expect(back.boxes == seq.boxes, "OTB boxes");
    expect(back.framePaths.size() == seq.frames.size(), "OTB frame count");
    boxesChecked += seq.boxes.size();

    std::stringstream b;
    write_boxes_csv(b, seq.boxes);
    expect(read_boxes_csv(b) == seq.boxes, "boxes CSV");
    auto pred = track_sequence(load_frames(back).frames, back.boxes[0], t.k2);
    const auto m = eval_metrics(pred, seq.boxes);
    std::stringstream ms;
    write_metrics_csv(ms, m);
    expect(read_metrics_csv(ms) == m, "metrics CSV");
  }
  fs::remove_all(dir);

  std::stringstream ls;
  write_loss_csv(ls, t.log);
  expect(read_loss_csv(ls) == t.log, "loss CSV");

  std::stringstream ps, ks;
  write_params_csv(ps, t.k2.params);
  write_masks_csv(ks, t.k2.params);
  UpdaterParams back = UpdaterParams::initial(2, t.k2.params.stages[0].mask);
  read_params_csv(ps, ks, back);
  expect(back == t.k2.params, "params/masks CSV");

  std::stringstream ck;
  write_checkpoint(ck, t.k2);
  const auto restored = read_checkpoint(ck);
  expect(restored.params == t.k2.params, "checkpoint");

  // dump-params of a fresh checkpoint
  std::stringstream fresh, dumped;
  write_checkpoint(fresh, Config().trackerConfig());
  write_params_csv(dumped, read_checkpoint(fresh).params);
  std::string line;
  std::getline(dumped, line);
  std::getline(dumped, line);
  expect(line == "1,1,1,0.013", "fresh dump-params");

  std::string detail = format("%zu OTB boxes over 5 sequences, boxes/metrics/loss/params/mask "
                              "CSVs and checkpoint identical; fresh stage-1 row '%s'",
                              boxesChecked, line.c_str());
  for (const auto& f : failed)
    detail += "; mismatch: " + f;
  report(failed.empty(), "I/O round trips", detail);
}

} // namespace

int main() {
  const auto t0 = Clock::now();
  const Config config;
  oracleCriteria();
  gradientCriterion();
  unrollingCriterion();
  const Trained trained = trainingCriteria(config);
  tableTrendCriterion(trained);
  trackingFloorCriterion(trained);
  scaleInvarianceCriterion(trained);
  ioCriterion(trained);
  std::printf("%d criteria failed, %.1f s total\n", failures, since(t0));
  return failures == 0 ? 0 : 1;
}
