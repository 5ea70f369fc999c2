#pragma once

#include "ubacf/tracker.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace ubacf {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Text checkpoint: version line, tracker settings, Theta with explicit
/// mask shapes, W_F. Doubles use the shortest text that reads back
/// exactly.
void write_checkpoint(std::ostream& out, const TrackerConfig& cfg);
void write_checkpoint(const std::string& path, const TrackerConfig& cfg);

/// Rejects unknown versions and shape mismatches.
TrackerConfig read_checkpoint(std::istream& in);
TrackerConfig read_checkpoint(const std::string& path);

} // namespace ubacf
