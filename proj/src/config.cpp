#include "ubacf/config.hpp"

#include "ubacf/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ubacf {

namespace {

enum class Kind { Int, Seed, Real, Bool, Recipe };

struct KeyDefault {
  const char* key;
  const char* value;
  bool tracker; // stored in checkpoints
  Kind kind;
};

const std::vector<KeyDefault>& defaults() {
  static const std::vector<KeyDefault> table = {
      {"grid", "32", true, Kind::Int},
      {"stages", "2", true, Kind::Int},
      {"cell_size", "4", true, Kind::Int},
      {"recipe", "gray_gradients", true, Kind::Recipe},
      {"learnable", "false", true, Kind::Bool},
      {"kernel_size", "3", true, Kind::Int},
      {"out_channels", "6", true, Kind::Int},
      {"window_features", "true", true, Kind::Bool},
      {"normalize", "true", true, Kind::Bool},
      {"padding", "5", true, Kind::Real},
      {"scale_step", "1.01", true, Kind::Real},
      {"num_scales", "5", true, Kind::Int},
      {"scale_penalty", "0.98", true, Kind::Real},
      {"label_sigma_factor", "0.1", true, Kind::Real},
      {"init_lambda", "1", true, Kind::Real},
      {"init_rho", "1", true, Kind::Real},
      {"init_iterations", "100", true, Kind::Int},
      {"init_tolerance", "1e-6", true, Kind::Real},
      {"response_window", "true", true, Kind::Bool},
      {"subcell", "true", true, Kind::Bool},
      {"batch_size", "16", false, Kind::Int},
      {"epochs", "5", false, Kind::Int},
      {"rate_initial", "0.01", false, Kind::Real},
      {"rate_final", "1e-5", false, Kind::Real},
      {"scale_lambda", "1000", false, Kind::Real},
      {"scale_rho", "1000", false, Kind::Real},
      {"scale_eta", "1000", false, Kind::Real},
      {"scale_mask", "100", false, Kind::Real},
      {"scale_weights", "10", false, Kind::Real},
      {"train_seed", "1", false, Kind::Seed},
      {"jitter", "0.1", false, Kind::Real},
      {"joint", "false", false, Kind::Bool},
      {"joint_epochs", "5", false, Kind::Int},
      {"synth_count", "20", false, Kind::Int},
      {"synth_frames", "20", false, Kind::Int},
      {"synth_max_speed", "3", false, Kind::Real},
      {"synth_seed", "11", false, Kind::Seed},
      {"frame_width", "160", false, Kind::Int},
      {"frame_height", "160", false, Kind::Int},
      {"frames", "20", false, Kind::Int},
      {"target_width", "24", false, Kind::Real},
      {"target_height", "24", false, Kind::Real},
      {"start_x", "68", false, Kind::Real},
      {"start_y", "68", false, Kind::Real},
      {"velocity_x", "0", false, Kind::Real},
      {"velocity_y", "0", false, Kind::Real},
      {"scale_drift", "1", false, Kind::Real},
      {"noise", "0", false, Kind::Real},
      {"morph", "0", false, Kind::Real},
      {"seed", "1", false, Kind::Seed},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  return format_number(v);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

} // namespace

Config::Config() {
  for (const auto& d : defaults())
    values_[d.key] = d.value;
}

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> k;
    for (const auto& d : defaults())
      k.push_back(d.key);
    return k;
  }();
  return all;
}

const std::vector<std::string>& Config::trackerKeys() {
  static const std::vector<std::string> tracker = [] {
    std::vector<std::string> k;
    for (const auto& d : defaults())
      if (d.tracker)
        k.push_back(d.key);
    return k;
  }();
  return tracker;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto& table = defaults();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const KeyDefault& d) { return key == d.key; });
  if (it == table.end())
    throw ConfigError("unknown config key '" + key + "'");
  const std::string previous = values_[key];
  values_[key] = value;
  try {
    switch (it->kind) {
    case Kind::Int:
      getInt(key);
      break;
    case Kind::Seed:
      getSeed(key);
      break;
    case Kind::Real:
      getDouble(key);
      break;
    case Kind::Bool:
      getBool(key);
      break;
    case Kind::Recipe:
      if (value != "gray" && value != "gray_gradients")
        throw ConfigError("config key 'recipe': expected gray or gray_gradients");
      break;
    }
  } catch (const ConfigError&) {
    values_[key] = previous;
    throw;
  }
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::getDouble(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size())
      return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
}

int Config::getInt(const std::string& key) const {
  const std::string& s = get(key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t Config::getSeed(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" + s + "'");
  return v;
}

bool Config::getBool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes")
    return true;
  if (s == "false" || s == "0" || s == "no")
    return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + s + "'");
}

void Config::parse(std::istream& in, const std::string& source) {
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    line = trim(line);
    if (line.empty() || line[0] == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineNo) + ": expected key=value");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineNo) + ": " + e.what());
    }
  }
}

void Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file " + path);
  parse(in, path);
}

void Config::write(std::ostream& out) const {
  for (const auto& d : defaults())
    out << d.key << '=' << values_.at(d.key) << '\n';
}

void Config::applyOverrides(const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + a + "' is not key=value");
    set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
  }
}

void Config::applyTrackerSettings(TrackerConfig& cfg) const {
  FeatureConfig& f = cfg.features;
  f.cellSize = getInt("cell_size");
  const std::string& recipe = get("recipe");
  if (recipe == "gray")
    f.recipe = ChannelRecipe::Grayscale;
  else if (recipe == "gray_gradients")
    f.recipe = ChannelRecipe::GrayscaleGradients;
  else
    throw ConfigError("config key 'recipe': expected gray or gray_gradients");
  f.learnable = getBool("learnable");
  f.kernelSize = getInt("kernel_size");
  f.outChannels = getInt("out_channels");
  f.windowFeatures = getBool("window_features");
  f.normalize = getBool("normalize");
  cfg.padding = getDouble("padding");
  cfg.scaleStep = getDouble("scale_step");
  cfg.numScales = getInt("num_scales");
  cfg.scalePenalty = getDouble("scale_penalty");
  cfg.labelSigmaFactor = getDouble("label_sigma_factor");
  cfg.initLambda = getDouble("init_lambda");
  cfg.initRho = getDouble("init_rho");
  cfg.initIterations = getInt("init_iterations");
  cfg.initTolerance = getDouble("init_tolerance");
  cfg.responseWindow = getBool("response_window");
  cfg.subcell = getBool("subcell");
}

void Config::storeTrackerSettings(const TrackerConfig& cfg) {
  const FeatureConfig& f = cfg.features;
  set("grid", std::to_string(cfg.gridSize()));
  set("stages", std::to_string(cfg.params.stageCount()));
  set("cell_size", std::to_string(f.cellSize));
  set("recipe", f.recipe == ChannelRecipe::Grayscale ? "gray" : "gray_gradients");
  set("learnable", fmt(f.learnable));
  set("kernel_size", std::to_string(f.kernelSize));
  set("out_channels", std::to_string(f.outChannels));
  set("window_features", fmt(f.windowFeatures));
  set("normalize", fmt(f.normalize));
  set("padding", fmt(cfg.padding));
  set("scale_step", fmt(cfg.scaleStep));
  set("num_scales", std::to_string(cfg.numScales));
  set("scale_penalty", fmt(cfg.scalePenalty));
  set("label_sigma_factor", fmt(cfg.labelSigmaFactor));
  set("init_lambda", fmt(cfg.initLambda));
  set("init_rho", fmt(cfg.initRho));
  set("init_iterations", std::to_string(cfg.initIterations));
  set("init_tolerance", fmt(cfg.initTolerance));
  set("response_window", fmt(cfg.responseWindow));
  set("subcell", fmt(cfg.subcell));
}

TrackerConfig Config::trackerConfig() const {
  TrackerConfig probe;
  applyTrackerSettings(probe);
  const int grid = getInt("grid");
  const int stages = getInt("stages");
  if (grid < 2 || stages < 1)
    throw ConfigError("config: grid must be >= 2 and stages >= 1");
  TrackerConfig cfg = default_tracker_config(grid, stages, probe.features);
  applyTrackerSettings(cfg);
  cfg.params = UpdaterParams::initial(stages, default_mask(grid, cfg.padding));
  cfg.validate();
  return cfg;
}

SgdConfig Config::sgdConfig() const {
  SgdConfig s;
  s.batchSize = getInt("batch_size");
  s.epochs = getInt("epochs");
  s.initialRate = getDouble("rate_initial");
  s.finalRate = getDouble("rate_final");
  s.lambdaScale = getDouble("scale_lambda");
  s.rhoScale = getDouble("scale_rho");
  s.etaScale = getDouble("scale_eta");
  s.maskScale = getDouble("scale_mask");
  s.weightScale = getDouble("scale_weights");
  s.seed = getSeed("train_seed");
  s.validate();
  return s;
}

PairSampling Config::pairSampling() const {
  PairSampling p;
  p.jitter = getDouble("jitter");
  p.seed = getSeed("train_seed");
  return p;
}

SynthSpec Config::synthSpec() const {
  SynthSpec s;
  s.frameWidth = getInt("frame_width");
  s.frameHeight = getInt("frame_height");
  s.frames = getInt("frames");
  s.targetWidth = getDouble("target_width");
  s.targetHeight = getDouble("target_height");
  s.startX = getDouble("start_x");
  s.startY = getDouble("start_y");
  s.velocityX = getDouble("velocity_x");
  s.velocityY = getDouble("velocity_y");
  s.scaleDrift = getDouble("scale_drift");
  s.noise = getDouble("noise");
  s.morph = getDouble("morph");
  s.seed = getSeed("seed");
  s.validate();
  return s;
}

} // namespace ubacf
