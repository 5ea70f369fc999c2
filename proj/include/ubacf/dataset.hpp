#pragma once

#include "ubacf/synth.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ubacf {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An OTB-style sequence on disk: frame files in order plus one box per frame.
struct SequenceDataset {
  std::string name;
  std::vector<std::string> framePaths;
  std::vector<BoundingBox> boxes; // 0-indexed pixels
};

/// Parses x,y,w,h lines (comma, tab or whitespace separated, 1-indexed
/// origin) into 0-indexed boxes. Errors name the offending line.
std::vector<BoundingBox> parse_otb_boxes(std::istream& in, const std::string& source);

/// Writes boxes in the OTB convention (1-indexed, comma separated, 17 digits).
void write_otb_boxes(std::ostream& out, const std::vector<BoundingBox>& boxes);

/// dir/img/* (png/jpg, lexicographic order) and dir/groundtruth_rect.txt.
SequenceDataset load_otb_sequence(const std::string& dir);

/// Writes frames as dir/img/0001.png, ... and the ground-truth file.
void write_otb_sequence(const std::string& dir, const LabeledSequence& seq);

/// Decodes every frame (grayscale) of a dataset.
LabeledSequence load_frames(const SequenceDataset& data);

} // namespace ubacf
