#include "ubacf/metrics.hpp"

#include <numeric>
#include <stdexcept>

namespace ubacf {

MetricsReport eval_metrics(const std::vector<BoundingBox>& predicted,
                           const std::vector<BoundingBox>& truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("eval_metrics: " + std::to_string(predicted.size()) +
                                " predicted boxes for " + std::to_string(truth.size()) +
                                " ground-truth boxes");
  if (truth.empty())
    throw std::invalid_argument("eval_metrics: no frames");

  MetricsReport report;
  std::vector<double> dist;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    report.ious.push_back(iou(predicted[i], truth[i]));
    dist.push_back(center_distance(predicted[i], truth[i]));
  }
  const double n = double(truth.size());
  report.meanIou = std::accumulate(report.ious.begin(), report.ious.end(), 0.0) / n;

  for (int i = 0; i <= 20; ++i) {
    const double tau = i / 20.0;
    int hits = 0;
    for (double v : report.ious)
      hits += (i == 20 ? v >= 1.0 : v > tau) ? 1 : 0;
    report.overlapThresholds.push_back(tau);
    report.success.push_back(hits / n);
  }
  report.auc = std::accumulate(report.success.begin(), report.success.end(), 0.0) /
               double(report.success.size());

  for (int d = 0; d <= 50; ++d) {
    int hits = 0;
    for (double v : dist)
      hits += v <= d ? 1 : 0;
    report.distanceThresholds.push_back(d);
    report.precision.push_back(hits / n);
  }
  report.precisionAt20 = report.precision[20];
  return report;
}

} // namespace ubacf
