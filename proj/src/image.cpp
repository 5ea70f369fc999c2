#include "ubacf/image.hpp"

#include <algorithm>

namespace ubacf {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x + a.width, b.x + b.width) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.height, b.y + b.height) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0)
    return 0.0;
  // areas from the edge coordinates, as for the intersection
  const double areaA = ((a.x + a.width) - a.x) * ((a.y + a.height) - a.y);
  const double areaB = ((b.x + b.width) - b.x) * ((b.y + b.height) - b.y);
  const double inter = iw * ih;
  return inter / (areaA + areaB - inter);
}

double center_distance(const BoundingBox& a, const BoundingBox& b) {
  return std::hypot(a.centerX() - b.centerX(), a.centerY() - b.centerY());
}

BoundingBox clamp_box(const BoundingBox& box, double frameWidth, double frameHeight) {
  BoundingBox out = box;
  out.width = std::clamp(out.width, 1.0, frameWidth);
  out.height = std::clamp(out.height, 1.0, frameHeight);
  out.x = std::clamp(out.x, 0.0, frameWidth - out.width);
  out.y = std::clamp(out.y, 0.0, frameHeight - out.height);
  return out;
}

double sample_bilinear(const GrayImage& image, double x, double y) {
  const Index rows = image.rows(), cols = image.cols();
  x = std::clamp(x, 0.0, double(cols - 1));
  y = std::clamp(y, 0.0, double(rows - 1));
  const Index x0 = std::min<Index>(static_cast<Index>(x), cols - 1);
  const Index y0 = std::min<Index>(static_cast<Index>(y), rows - 1);
  const Index x1 = std::min<Index>(x0 + 1, cols - 1);
  const Index y1 = std::min<Index>(y0 + 1, rows - 1);
  const double ax = x - double(x0), ay = y - double(y0);
  const double top = (1 - ax) * image(y0, x0) + ax * image(y0, x1);
  const double bottom = (1 - ax) * image(y1, x0) + ax * image(y1, x1);
  return (1 - ay) * top + ay * bottom;
}

GrayImage sample_patch(const GrayImage& image, double cx, double cy, double srcWidth,
                       double srcHeight, Index outRows, Index outCols) {
  if (image.size() == 0)
    throw std::invalid_argument("sample_patch: empty image");
  if (outRows < 1 || outCols < 1 || !(srcWidth > 0) || !(srcHeight > 0))
    throw std::invalid_argument("sample_patch: bad patch geometry");
  // pixel centers of the output grid mapped into the source region
  const double sx = srcWidth / double(outCols);
  const double sy = srcHeight / double(outRows);
  const double x0 = cx - 0.5 * srcWidth + 0.5 * sx - 0.5;
  const double y0 = cy - 0.5 * srcHeight + 0.5 * sy - 0.5;
  GrayImage out(outRows, outCols);
  for (Index c = 0; c < outCols; ++c)
    for (Index r = 0; r < outRows; ++r)
      out(r, c) = sample_bilinear(image, x0 + sx * double(c), y0 + sy * double(r));
  return out;
}

} // namespace ubacf
