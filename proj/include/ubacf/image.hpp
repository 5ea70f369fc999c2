#pragma once

#include "ubacf/representor.hpp"

#include <cmath>
#include <stdexcept>

namespace ubacf {

/// Axis-aligned box, top-left origin, 0-indexed pixels.
struct BoundingBox {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;

  double centerX() const { return x + 0.5 * width; }
  double centerY() const { return y + 0.5 * height; }
  double area() const { return width * height; }
  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && width > 0 && height > 0 &&
           std::isfinite(width) && std::isfinite(height);
  }

  static BoundingBox fromCenter(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

double iou(const BoundingBox& a, const BoundingBox& b);
double center_distance(const BoundingBox& a, const BoundingBox& b);

/// Moves `box` inside a width x height frame, shrinking it only where it is
/// larger than the frame (and to at least one pixel).
BoundingBox clamp_box(const BoundingBox& box, double frameWidth, double frameHeight);

/// Bilinear resampling of the srcWidth x srcHeight region centered at
/// (cx, cy) onto an outRows x outCols grid. Samples outside the image take
/// the nearest edge value.
GrayImage sample_patch(const GrayImage& image, double cx, double cy, double srcWidth,
                       double srcHeight, Index outRows, Index outCols);

/// Bilinear lookup with edge replication; (x, y) in pixel coordinates.
double sample_bilinear(const GrayImage& image, double x, double y);

} // namespace ubacf
