#pragma once

#include "ubacf/representor.hpp"

#include <stdexcept>
#include <string>

namespace ubacf {

struct ImageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads a PNG or JPEG (detected from the file signature) as grayscale in
/// [0, 1]. Color images use 0.299 R + 0.587 G + 0.114 B.
GrayImage read_image(const std::string& path);

/// 8-bit grayscale PNG; values are clamped to [0, 1] and rounded.
void write_png(const std::string& path, const GrayImage& image);

/// 8-bit grayscale baseline JPEG.
void write_jpeg(const std::string& path, const GrayImage& image, int quality = 95);

/// The 8-bit quantisation write_png applies, for exact comparisons.
GrayImage quantize8(const GrayImage& image);

} // namespace ubacf
