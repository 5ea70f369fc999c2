#pragma once

#include "ubacf/image.hpp"

#include <vector>

namespace ubacf {

struct MetricsReport {
  std::vector<double> overlapThresholds; // 0, 0.05, ..., 1
  std::vector<double> success;
  double auc = 0;
  std::vector<double> distanceThresholds; // 0, 1, ..., 50 px
  std::vector<double> precision;
  double precisionAt20 = 0;
  double meanIou = 0;
  std::vector<double> ious;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// One-pass evaluation of predicted against ground-truth boxes.
///
/// success(tau) is the fraction of frames with IoU > tau; at tau = 1 the
/// comparison is IoU >= 1 so that a perfect prediction scores AUC 1.
/// precision(d) is the fraction with center distance <= d.
MetricsReport eval_metrics(const std::vector<BoundingBox>& predicted,
                           const std::vector<BoundingBox>& truth);

} // namespace ubacf
