#include "ubacf/checkpoint.hpp"

#include "ubacf/config.hpp"
#include "ubacf/csv.hpp"

#include <fstream>
#include <sstream>

namespace ubacf {

void write_checkpoint(std::ostream& out, const TrackerConfig& cfg) {
  cfg.validate();
  Config settings;
  settings.storeTrackerSettings(cfg);
  out << "ubacf-checkpoint " << kCheckpointVersion << '\n';
  out << "config " << Config::trackerKeys().size() << '\n';
  for (const auto& key : Config::trackerKeys())
    out << key << '=' << settings.get(key) << '\n';
  out << "stages " << cfg.params.stageCount() << '\n';
  for (Index k = 0; k < cfg.params.stageCount(); ++k) {
    const StageParams& s = cfg.params.stages[std::size_t(k)];
    out << "stage " << k + 1 << ' ' << format_number(s.lambda) << ' '
        << format_number(s.rho) << ' ' << format_number(s.eta) << '\n';
    const CropOperator& m = s.mask;
    out << "mask " << m.fullRows << ' ' << m.fullCols << ' ' << m.top << ' ' << m.left << ' '
        << m.cropRows() << ' ' << m.cropCols() << '\n';
    for (Index r = 0; r < m.cropRows(); ++r) {
      for (Index c = 0; c < m.cropCols(); ++c)
        out << (c ? " " : "") << format_number(m.weights(r, c));
      out << '\n';
    }
  }
  if (cfg.weights.empty()) {
    out << "weights none\n";
  } else {
    const ConvLayerParams& w = cfg.weights;
    out << "weights " << w.inChannels << ' ' << w.outChannels << ' ' << w.kernelSize << '\n';
    const Eigen::VectorXd v = w.toVector();
    for (Index i = 0; i < v.size(); ++i)
      out << (i ? " " : "") << format_number(v(i));
    out << '\n';
  }
  out << "end\n";
}

void write_checkpoint(const std::string& path, const TrackerConfig& cfg) {
  std::ofstream out(path);
  if (!out)
    throw CheckpointError("cannot write checkpoint " + path);
  write_checkpoint(out, cfg);
  if (!out)
    throw CheckpointError("error while writing checkpoint " + path);
}

namespace {

class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::istringstream line(const std::string& expectTag) {
    std::string text;
    if (!std::getline(in_, text))
      throw CheckpointError("checkpoint truncated, expected '" + expectTag + "'");
    ++lineNo_;
    std::istringstream ls(text);
    if (!expectTag.empty()) {
      std::string tag;
      ls >> tag;
      if (tag != expectTag)
        fail("expected '" + expectTag + "', found '" + tag + "'");
    }
    return ls;
  }

  template <typename T> T read(std::istringstream& ls, const char* what) {
    T v{};
    if (!(ls >> v))
      fail(std::string("cannot read ") + what);
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw CheckpointError("checkpoint line " + std::to_string(lineNo_) + ": " + msg);
  }

  int lineNo() const { return lineNo_; }

private:
  std::istream& in_;
  int lineNo_ = 0;
};

} // namespace

TrackerConfig read_checkpoint(std::istream& in) {
  Reader rd(in);
  auto header = rd.line("ubacf-checkpoint");
  const int version = rd.read<int>(header, "version");
  if (version != kCheckpointVersion)
    rd.fail("unsupported checkpoint version " + std::to_string(version) + " (this build reads " +
            std::to_string(kCheckpointVersion) + ")");

  auto cfgLine = rd.line("config");
  const int count = rd.read<int>(cfgLine, "config entry count");
  std::ostringstream text;
  for (int i = 0; i < count; ++i)
    text << rd.line("").str() << '\n';
  Config settings;
  try {
    std::istringstream is(text.str());
    settings.parse(is, "checkpoint config");
  } catch (const ConfigError& e) {
    rd.fail(e.what());
  }

  TrackerConfig cfg;
  settings.applyTrackerSettings(cfg);
  auto stagesLine = rd.line("stages");
  const Index K = rd.read<Index>(stagesLine, "stage count");
  if (K < 1)
    rd.fail("stage count must be >= 1");
  for (Index k = 0; k < K; ++k) {
    auto sl = rd.line("stage");
    if (rd.read<Index>(sl, "stage index") != k + 1)
      rd.fail("stages out of order");
    StageParams s;
    s.lambda = rd.read<double>(sl, "lambda");
    s.rho = rd.read<double>(sl, "rho");
    s.eta = rd.read<double>(sl, "eta");
    auto ml = rd.line("mask");
    s.mask.fullRows = rd.read<Index>(ml, "mask rows");
    s.mask.fullCols = rd.read<Index>(ml, "mask cols");
    s.mask.top = rd.read<Index>(ml, "mask top");
    s.mask.left = rd.read<Index>(ml, "mask left");
    const Index cr = rd.read<Index>(ml, "crop rows");
    const Index cc = rd.read<Index>(ml, "crop cols");
    if (cr < 1 || cc < 1 || cr > s.mask.fullRows || cc > s.mask.fullCols)
      rd.fail("bad mask shape");
    s.mask.weights.resize(cr, cc);
    for (Index r = 0; r < cr; ++r) {
      auto row = rd.line("");
      for (Index c = 0; c < cc; ++c)
        s.mask.weights(r, c) = rd.read<double>(row, "mask weight");
    }
    cfg.params.stages.push_back(std::move(s));
  }
  auto wl = rd.line("weights");
  std::string first;
  wl >> first;
  if (first != "none") {
    Index inC = 0, outC = 0, k = 0;
    try {
      inC = std::stol(first);
    } catch (const std::exception&) {
      rd.fail("bad weights header");
    }
    outC = rd.read<Index>(wl, "output channels");
    k = rd.read<Index>(wl, "kernel size");
    if (inC < 1 || outC < 1 || k < 1 || k % 2 == 0)
      rd.fail("bad weights shape");
    cfg.weights = ConvLayerParams::zeros(inC, outC, k);
    Eigen::VectorXd v(cfg.weights.parameterCount());
    auto vl = rd.line("");
    for (Index i = 0; i < v.size(); ++i)
      v(i) = rd.read<double>(vl, "weight");
    cfg.weights.fromVector(v);
  }
  rd.line("end");
  if (settings.getInt("grid") != cfg.gridSize() || settings.getInt("stages") != K)
    rd.fail("grid or stage count disagrees with the stored parameters");
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    rd.fail(std::string("inconsistent checkpoint: ") + e.what());
  }
  return cfg;
}

TrackerConfig read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw CheckpointError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

} // namespace ubacf
