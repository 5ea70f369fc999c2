#pragma once

#include "ubacf/synth.hpp"
#include "ubacf/trainer.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ubacf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value settings. Lines starting with '#' and blank lines are
/// ignored; later assignments win. Only known keys are accepted.
class Config {
public:
  Config(); // every key at its default

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double getDouble(const std::string& key) const;
  int getInt(const std::string& key) const;
  std::uint64_t getSeed(const std::string& key) const;
  bool getBool(const std::string& key) const;

  void parse(std::istream& in, const std::string& source = "<config>");
  void load(const std::string& path);
  void write(std::ostream& out) const;

  /// Applies "key=value" strings, e.g. from --set flags.
  void applyOverrides(const std::vector<std::string>& assignments);

  static const std::vector<std::string>& keys();
  static const std::vector<std::string>& trackerKeys();

  TrackerConfig trackerConfig() const; // fresh Theta and W_F for the configured grid
  void applyTrackerSettings(TrackerConfig& cfg) const; // everything but Theta / W_F
  void storeTrackerSettings(const TrackerConfig& cfg);
  SgdConfig sgdConfig() const;
  PairSampling pairSampling() const;
  SynthSpec synthSpec() const;

private:
  std::map<std::string, std::string> values_;
};

} // namespace ubacf
