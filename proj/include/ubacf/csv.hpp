#pragma once

#include "ubacf/image.hpp"
#include "ubacf/metrics.hpp"
#include "ubacf/trainer.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ubacf {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every writer emits a header row and 17 significant digits; every reader
// checks the header and returns exactly what was written.

/// frame,x,y,w,h with frame counted from 1 and 0-indexed pixel boxes.
void write_boxes_csv(std::ostream& out, const std::vector<BoundingBox>& boxes);
std::vector<BoundingBox> read_boxes_csv(std::istream& in);

/// kind,threshold,value rows: success/precision curves, per-frame iou
/// (threshold column holds the frame), then auc, precision_20, mean_iou.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);
MetricsReport read_metrics_csv(std::istream& in);

/// epoch,phase,stage,loss,rate
void write_loss_csv(std::ostream& out, const std::vector<LossRow>& rows);
std::vector<LossRow> read_loss_csv(std::istream& in);

/// stage,lambda,rho,eta with stages counted from 1.
void write_params_csv(std::ostream& out, const UpdaterParams& params);
/// stage,row,col,weight over each stage's crop window.
void write_masks_csv(std::ostream& out, const UpdaterParams& params);

/// Reads both files back into `params`, whose stage count and mask shapes
/// must already match.
void read_params_csv(std::istream& paramsIn, std::istream& masksIn, UpdaterParams& params);

/// Splits one CSV line on commas (no quoting; fields never contain commas).
/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

std::vector<std::string> split_csv_line(const std::string& line);

} // namespace ubacf
