#include "ubacf/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace ubacf {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ','))
    fields.push_back(field);
  if (!line.empty() && line.back() == ',')
    fields.emplace_back();
  return fields;
}

namespace {

class CsvReader {
public:
  CsvReader(std::istream& in, const std::string& header) : in_(in) {
    std::string line;
    if (!std::getline(in_, line) || stripCr(line) != header)
      throw CsvError("expected CSV header '" + header + "'");
    columns_ = split_csv_line(header).size();
  }

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineNo_;
      line = stripCr(line);
      if (line.empty())
        continue;
      fields = split_csv_line(line);
      if (fields.size() != columns_)
        fail("expected " + std::to_string(columns_) + " fields");
      return true;
    }
    return false;
  }

  double number(const std::string& s) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size())
        return v;
    } catch (const std::exception&) {
    }
    fail("bad number '" + s + "'");
  }

  int integer(const std::string& s) const {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used == s.size())
        return v;
    } catch (const std::exception&) {
    }
    fail("bad integer '" + s + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw CsvError("CSV data line " + std::to_string(lineNo_) + ": " + msg);
  }

private:
  static std::string stripCr(std::string s) {
    if (!s.empty() && s.back() == '\r')
      s.pop_back();
    return s;
  }

  std::istream& in_;
  std::size_t columns_ = 0;
  int lineNo_ = 0;
};

} // namespace

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_boxes_csv(std::ostream& out, const std::vector<BoundingBox>& boxes) {
  out << "frame,x,y,w,h\n";
  for (std::size_t i = 0; i < boxes.size(); ++i)
    out << i + 1 << ',' << format_number(boxes[i].x) << ',' << format_number(boxes[i].y) << ','
        << format_number(boxes[i].width) << ',' << format_number(boxes[i].height) << '\n';
}

std::vector<BoundingBox> read_boxes_csv(std::istream& in) {
  CsvReader rd(in, "frame,x,y,w,h");
  std::vector<BoundingBox> boxes;
  std::vector<std::string> f;
  while (rd.next(f)) {
    if (rd.integer(f[0]) != int(boxes.size()) + 1)
      rd.fail("frames must be numbered 1, 2, ...");
    boxes.push_back({rd.number(f[1]), rd.number(f[2]), rd.number(f[3]), rd.number(f[4])});
  }
  return boxes;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out << "kind,threshold,value\n";
  for (std::size_t i = 0; i < report.success.size(); ++i)
    out << "success," << format_number(report.overlapThresholds[i]) << ','
        << format_number(report.success[i]) << '\n';
  for (std::size_t i = 0; i < report.precision.size(); ++i)
    out << "precision," << format_number(report.distanceThresholds[i]) << ','
        << format_number(report.precision[i]) << '\n';
  for (std::size_t i = 0; i < report.ious.size(); ++i)
    out << "iou," << i + 1 << ',' << format_number(report.ious[i]) << '\n';
  out << "auc,," << format_number(report.auc) << '\n';
  out << "precision_20,20," << format_number(report.precisionAt20) << '\n';
  out << "mean_iou,," << format_number(report.meanIou) << '\n';
}

MetricsReport read_metrics_csv(std::istream& in) {
  CsvReader rd(in, "kind,threshold,value");
  MetricsReport r;
  std::vector<std::string> f;
  while (rd.next(f)) {
    const std::string& kind = f[0];
    const double value = rd.number(f[2]);
    if (kind == "success") {
      r.overlapThresholds.push_back(rd.number(f[1]));
      r.success.push_back(value);
    } else if (kind == "precision") {
      r.distanceThresholds.push_back(rd.number(f[1]));
      r.precision.push_back(value);
    } else if (kind == "iou") {
      r.ious.push_back(value);
    } else if (kind == "auc") {
      r.auc = value;
    } else if (kind == "precision_20") {
      r.precisionAt20 = value;
    } else if (kind == "mean_iou") {
      r.meanIou = value;
    } else {
      rd.fail("unknown row kind '" + kind + "'");
    }
  }
  return r;
}

void write_loss_csv(std::ostream& out, const std::vector<LossRow>& rows) {
  out << "epoch,phase,stage,loss,rate\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << r.phase << ',' << r.stage << ',' << format_number(r.loss) << ','
        << format_number(r.rate) << '\n';
}

std::vector<LossRow> read_loss_csv(std::istream& in) {
  CsvReader rd(in, "epoch,phase,stage,loss,rate");
  std::vector<LossRow> rows;
  std::vector<std::string> f;
  while (rd.next(f))
    rows.push_back({rd.integer(f[0]), f[1], rd.integer(f[2]), rd.number(f[3]), rd.number(f[4])});
  return rows;
}

void write_params_csv(std::ostream& out, const UpdaterParams& params) {
  out << "stage,lambda,rho,eta\n";
  for (std::size_t k = 0; k < params.stages.size(); ++k) {
    const auto& s = params.stages[k];
    out << k + 1 << ',' << format_number(s.lambda) << ',' << format_number(s.rho) << ','
        << format_number(s.eta) << '\n';
  }
}

void write_masks_csv(std::ostream& out, const UpdaterParams& params) {
  out << "stage,row,col,weight\n";
  for (std::size_t k = 0; k < params.stages.size(); ++k) {
    const auto& w = params.stages[k].mask.weights;
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c)
        out << k + 1 << ',' << r << ',' << c << ',' << format_number(w(r, c)) << '\n';
  }
}

void read_params_csv(std::istream& paramsIn, std::istream& masksIn, UpdaterParams& params) {
  CsvReader rd(paramsIn, "stage,lambda,rho,eta");
  std::vector<std::string> f;
  std::size_t count = 0;
  while (rd.next(f)) {
    const int k = rd.integer(f[0]);
    if (k != int(count) + 1 || count >= params.stages.size())
      rd.fail("unexpected stage " + f[0]);
    auto& s = params.stages[count++];
    s.lambda = rd.number(f[1]);
    s.rho = rd.number(f[2]);
    s.eta = rd.number(f[3]);
  }
  if (count != params.stages.size())
    throw CsvError("params CSV has " + std::to_string(count) + " stages, expected " +
                   std::to_string(params.stages.size()));
  CsvReader mr(masksIn, "stage,row,col,weight");
  std::size_t cells = 0, expected = 0;
  for (const auto& s : params.stages)
    expected += std::size_t(s.mask.weights.size());
  while (mr.next(f)) {
    const int k = mr.integer(f[0]), r = mr.integer(f[1]), c = mr.integer(f[2]);
    if (k < 1 || k > int(params.stages.size()))
      mr.fail("stage out of range");
    auto& w = params.stages[std::size_t(k - 1)].mask.weights;
    if (r < 0 || c < 0 || r >= w.rows() || c >= w.cols())
      mr.fail("mask cell out of range");
    w(r, c) = mr.number(f[3]);
    ++cells;
  }
  if (cells != expected)
    throw CsvError("masks CSV has " + std::to_string(cells) + " cells, expected " +
                   std::to_string(expected));
}

} // namespace ubacf
