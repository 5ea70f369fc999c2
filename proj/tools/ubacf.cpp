#include "CLI11.hpp"

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
#include <fstream>
#include <iostream>
#include <sstream>

using namespace ubacf;

namespace {

struct Globals {
  std::string configPath;
  std::vector<std::string> overrides;
};

Config loadConfig(const Globals& g) {
  Config cfg;
  if (!g.configPath.empty())
    cfg.load(g.configPath);
  cfg.applyOverrides(g.overrides);
  return cfg;
}

std::ofstream openOut(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream openIn(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read " + path);
  return in;
}

// Tracker settings from the checkpoint, with any config or --set overrides of
// non-parameter keys applied on top.
TrackerConfig trackerFor(const Config& cfg, const std::string& checkpoint,
                         const Globals& g) {
  if (checkpoint.empty())
    return cfg.trackerConfig();
  TrackerConfig tc = read_checkpoint(checkpoint);
  if (!g.configPath.empty() || !g.overrides.empty()) {
    Config merged;
    merged.storeTrackerSettings(tc);
    if (!g.configPath.empty())
      merged.load(g.configPath);
    merged.applyOverrides(g.overrides);
    merged.applyTrackerSettings(tc);
    tc.validate();
  }
  return tc;
}

std::vector<BoundingBox> readBoxes(const std::string& path) {
  std::ifstream in = openIn(path);
  std::string first;
  std::getline(in, first);
  in.clear();
  in.seekg(0);
  if (first.rfind("frame", 0) == 0)
    return read_boxes_csv(in);
  return parse_otb_boxes(in, path);
}

std::vector<LabeledSequence> synthSuite(const Config& cfg) {
  const auto specs = synth_suite(cfg.getInt("synth_count"), cfg.getInt("synth_frames"),
                                 cfg.getDouble("synth_max_speed"), cfg.getSeed("synth_seed"));
  std::vector<LabeledSequence> seqs;
  for (std::size_t i = 0; i < specs.size(); ++i)
    seqs.push_back(synth_sequence_gen(specs[i], "synth" + std::to_string(i + 1)));
  return seqs;
}

void printMetrics(const MetricsReport& r) {
  std::printf("frames %zu  mean IoU %.4f  AUC %.4f  precision@20 %.4f\n", r.ious.size(),
              r.meanIou, r.auc, r.precisionAt20);
}

int runTrack(const Globals& g, const std::string& sequence, const std::string& checkpoint,
             const std::string& outPath, const std::string& metricsPath) {
  const Config cfg = loadConfig(g);
  const TrackerConfig tc = trackerFor(cfg, checkpoint, g);
  LabeledSequence seq;
  if (!sequence.empty())
    seq = load_frames(load_otb_sequence(sequence));
  else
    seq = synth_sequence_gen(cfg.synthSpec());

  const auto t0 = std::chrono::steady_clock::now();
  const auto boxes = track_sequence(seq.frames, seq.boxes.front(), tc);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream out = openOut(outPath);
  write_boxes_csv(out, boxes);
  const MetricsReport report = eval_metrics(boxes, seq.boxes);
  if (!metricsPath.empty()) {
    std::ofstream m = openOut(metricsPath);
    write_metrics_csv(m, report);
  }
  std::printf("%s: tracked %zu frames in %.3f s\n", seq.name.c_str(), boxes.size(), secs);
  printMetrics(report);
  return 0;
}

int runTrain(const Globals& g, const std::vector<std::string>& data, int stages, int epochs,
             bool joint, const std::string& outPath, const std::string& lossPath) {
  Config cfg = loadConfig(g);
  if (stages > 0)
    cfg.set("stages", std::to_string(stages));
  if (epochs >= 0)
    cfg.set("epochs", std::to_string(epochs));
  if (joint)
    cfg.set("joint", "true");

  TrackerConfig tc = cfg.trackerConfig();
  SgdConfig sgd = cfg.sgdConfig();
  std::vector<LossRow> log;
  if (sgd.epochs > 0) {
    std::vector<LabeledSequence> seqs;
    if (data.empty())
      seqs = synthSuite(cfg);
    else
      for (const auto& dir : data)
        seqs.push_back(load_frames(load_otb_sequence(dir)));
    TrainDataset dataset = make_dataset(seqs, tc, cfg.pairSampling());
    std::printf("training on %zu sequences, %zu pairs\n", dataset.sequences.size(),
                dataset.sampleCount());

    TrainResult result = stagewise_train(dataset, cfg.getInt("stages"), sgd);
    log = result.log;
    if (cfg.getBool("joint")) {
      SgdConfig jointCfg = sgd;
      jointCfg.epochs = cfg.getInt("joint_epochs");
      TrainResult fine = joint_finetune(dataset, result.params, result.weights, jointCfg);
      log.insert(log.end(), fine.log.begin(), fine.log.end());
      result.params = fine.params;
      result.weights = fine.weights;
    }
    tc.params = result.params;
    tc.weights = result.weights;
    for (const auto& row : log) {
      const std::string what =
          row.phase == "joint" ? std::string("joint") : "stage " + std::to_string(row.stage);
      std::printf("%-8s epoch %d  loss %.6g  rate %.3g\n", what.c_str(), row.epoch, row.loss,
                  row.rate);
    }
  }
  write_checkpoint(outPath, tc);
  if (!lossPath.empty()) {
    std::ofstream out = openOut(lossPath);
    write_loss_csv(out, log);
  }
  std::printf("wrote %s\n", outPath.c_str());
  return 0;
}

int runEval(const std::string& predPath, const std::string& truthPath,
            const std::string& outPath) {
  const MetricsReport report = eval_metrics(readBoxes(predPath), readBoxes(truthPath));
  if (!outPath.empty()) {
    std::ofstream out = openOut(outPath);
    write_metrics_csv(out, report);
  } else {
    write_metrics_csv(std::cout, report);
  }
  printMetrics(report);
  return 0;
}

int runSelftest(std::uint64_t seed) {
  bool ok = true;
  for (const auto& c : oracle::run_oracle_suite(seed)) {
    std::printf("%-4s %-40s n=%-3d worst %.3e  tol %.0e  %.2f s\n", c.passed() ? "ok" : "FAIL",
                c.name.c_str(), c.instances, c.worst, c.tolerance, c.seconds);
    ok = ok && c.passed();
  }
  for (int K = 1; K <= 3; ++K) {
    FdSetup setup;
    setup.stages = K;
    setup.seed = seed + std::uint64_t(K);
    const FdReport r = finite_diff_check(setup);
    std::printf("%-4s gradient check K=%d  entries %zu  max rel %.3e  max abs %.3e\n",
                r.passed ? "ok" : "FAIL", K, r.entries.size(), r.maxRelError, r.maxAbsError);
    ok = ok && r.passed;
  }
  std::printf("%s\n", ok ? "selftest passed" : "selftest FAILED");
  return ok ? 0 : 1;
}

int runGradcheck(int stages, std::uint64_t seed, bool learnable, const std::string& csvPath) {
  FdSetup setup;
  setup.stages = stages;
  setup.seed = seed;
  setup.learnableFeatures = learnable;
  const FdReport r = finite_diff_check(setup);
  if (!csvPath.empty()) {
    std::ofstream out = openOut(csvPath);
    r.writeCsv(out);
  }
  std::size_t failed = 0;
  for (const auto& e : r.entries)
    if (!e.ok) {
      ++failed;
      std::printf("mismatch %s analytic %.10g numeric %.10g\n", e.name.c_str(), e.analytic,
                  e.numeric);
    }
  std::printf("gradcheck K=%d: %zu entries, %zu failed, max rel error %.3e, max abs error %.3e\n",
              stages, r.entries.size(), failed, r.maxRelError, r.maxAbsError);
  return r.passed ? 0 : 1;
}

int runSynth(const Globals& g, const std::string& outDir, const std::string& name) {
  const Config cfg = loadConfig(g);
  const LabeledSequence seq = synth_sequence_gen(cfg.synthSpec(), name);
  write_otb_sequence(outDir, seq);
  std::printf("wrote %zu frames to %s\n", seq.frames.size(), outDir.c_str());
  return 0;
}

int runDumpParams(const Globals& g, const std::string& checkpoint, const std::string& paramsPath,
                  const std::string& masksPath) {
  const Config cfg = loadConfig(g);
  const TrackerConfig tc = checkpoint.empty() ? cfg.trackerConfig() : read_checkpoint(checkpoint);
  if (paramsPath.empty()) {
    write_params_csv(std::cout, tc.params);
  } else {
    std::ofstream out = openOut(paramsPath);
    write_params_csv(out, tc.params);
  }
  if (!masksPath.empty()) {
    std::ofstream out = openOut(masksPath);
    write_masks_csv(out, tc.params);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unrolled BACF correlation filter tracker"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.configPath, "key=value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "override a configuration key (key=value)");

  int rc = 0;

  auto* track = app.add_subcommand("track", "track one sequence and write boxes CSV");
  std::string seqDir, checkpoint, outPath, metricsPath;
  track->add_option("--sequence", seqDir, "OTB sequence directory (default: synth from config)");
  track->add_option("--checkpoint", checkpoint, "trained checkpoint (default: fresh parameters)");
  track->add_option("--out", outPath, "boxes CSV")->required();
  track->add_option("--metrics", metricsPath, "metrics CSV against the ground truth");
  track->callback([&] { rc = runTrack(g, seqDir, checkpoint, outPath, metricsPath); });

  auto* train = app.add_subcommand("train", "train the unrolled updater");
  std::vector<std::string> dataDirs;
  int stages = 0, epochs = -1;
  bool joint = false;
  std::string ckptOut, lossPath;
  train->add_option("--data", dataDirs, "OTB sequence directories (default: synth suite)");
  train->add_option("--stages", stages, "number of unrolled stages")->check(CLI::PositiveNumber);
  train->add_option("--epochs", epochs, "epochs per phase")->check(CLI::NonNegativeNumber);
  train->add_flag("--joint", joint, "joint finetune after the stage-wise phase");
  train->add_option("--out", ckptOut, "checkpoint to write")->required();
  train->add_option("--loss-csv", lossPath, "per-epoch loss CSV");
  train->callback([&] { rc = runTrain(g, dataDirs, stages, epochs, joint, ckptOut, lossPath); });

  auto* eval = app.add_subcommand("eval", "success and precision metrics");
  std::string predPath, truthPath, evalOut;
  eval->add_option("--pred", predPath, "predicted boxes (CSV or OTB text)")->required();
  eval->add_option("--truth", truthPath, "ground truth boxes (CSV or OTB text)")->required();
  eval->add_option("--out", evalOut, "metrics CSV (default: stdout)");
  eval->callback([&] { rc = runEval(predPath, truthPath, evalOut); });

  auto* selftest = app.add_subcommand("selftest", "oracle and gradient suites");
  std::uint64_t selfSeed = 1;
  selftest->add_option("--seed", selfSeed, "random seed");
  selftest->callback([&] { rc = runSelftest(selfSeed); });

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  int gcStages = 2;
  std::uint64_t gcSeed = 1;
  bool learnable = false;
  std::string gcCsv;
  gradcheck->add_option("--stages", gcStages, "number of stages")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gcSeed, "random seed");
  gradcheck->add_flag("--learnable", learnable, "probe W_F through a learnable conv layer");
  gradcheck->add_option("--csv", gcCsv, "per-entry CSV report");
  gradcheck->callback([&] { rc = runGradcheck(gcStages, gcSeed, learnable, gcCsv); });

  auto* synth = app.add_subcommand("synth", "render a synthetic sequence in OTB layout");
  std::string synthOut, synthName = "synth";
  synth->add_option("--out", synthOut, "output directory")->required();
  synth->add_option("--name", synthName, "sequence name");
  synth->callback([&] { rc = runSynth(g, synthOut, synthName); });

  auto* dump = app.add_subcommand("dump-params", "per-stage lambda, rho, eta and mask CSVs");
  std::string dumpCkpt, dumpParams, dumpMasks;
  dump->add_option("--checkpoint", dumpCkpt, "checkpoint (default: fresh parameters)");
  dump->add_option("--out", dumpParams, "parameters CSV (default: stdout)");
  dump->add_option("--masks", dumpMasks, "mask weights CSV");
  dump->callback([&] { rc = runDumpParams(g, dumpCkpt, dumpParams, dumpMasks); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto extra = app.remaining();
    if (app.get_subcommands().empty() && !extra.empty())
      std::cerr << "error: unknown subcommand '" << extra.front() << "'\n\n" << app.help();
    else
      std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
