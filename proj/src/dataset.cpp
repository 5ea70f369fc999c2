#include "ubacf/dataset.hpp"

#include "ubacf/csv.hpp"
#include "ubacf/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace ubacf {

namespace {

std::string incrementDigits(std::string d) {
  for (auto i = d.size(); i-- > 0;) {
    if (d[i] != '9') {
      ++d[i];
      return d;
    }
    d[i] = '0';
  }
  return "1" + d;
}

std::string decrementDigits(std::string d) { // d > 0
  for (auto i = d.size(); i-- > 0;) {
    if (d[i] != '0') {
      --d[i];
      break;
    }
    d[i] = '9';
  }
  const auto nz = d.find_first_not_of('0');
  return nz == std::string::npos ? "0" : d.substr(nz);
}

bool plainDecimal(const std::string& s) {
  std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
  bool digits = false, dot = false;
  for (; i < s.size(); ++i) {
    if (s[i] == '.' && !dot)
      dot = true;
    else if (std::isdigit(static_cast<unsigned char>(s[i])))
      digits = true;
    else
      return false;
  }
  return digits;
}

// Exact decimal text of (value + delta) for delta = +1 or -1.
std::string shiftDecimal(const std::string& text, int delta) {
  bool neg = !text.empty() && text[0] == '-';
  const std::string body = (!text.empty() && (text[0] == '-' || text[0] == '+')) ? text.substr(1)
                                                                                  : text;
  const auto dot = body.find('.');
  std::string ip = body.substr(0, dot);
  std::string fp = dot == std::string::npos ? "" : body.substr(dot + 1);
  const auto nz = ip.find_first_not_of('0');
  ip = nz == std::string::npos ? "0" : ip.substr(nz);
  while (!fp.empty() && fp.back() == '0')
    fp.pop_back();

  if ((delta > 0) != neg) {
    ip = incrementDigits(ip);
  } else if (ip != "0") {
    ip = decrementDigits(ip);
  } else if (fp.empty()) {
    ip = "1";
    neg = delta < 0;
  } else {
    // |value| < 1 crosses zero: 1 - 0.fp
    std::string g(fp.size(), '0');
    int borrow = 0;
    for (auto i = fp.size(); i-- > 0;) {
      int d = -(fp[i] - '0') - borrow;
      borrow = d < 0 ? 1 : 0;
      g[i] = char('0' + d + 10 * borrow);
    }
    fp = g;
    while (!fp.empty() && fp.back() == '0')
      fp.pop_back();
    neg = !neg;
  }
  if (ip == "0" && fp.empty())
    return "0";
  return (neg ? "-" : "") + ip + (fp.empty() ? "" : "." + fp);
}

std::string fixedText(double v) {
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

bool parseNumber(const std::string& token, double& out) {
  const char* first = token.data() + (!token.empty() && token[0] == '+' ? 1 : 0);
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

// 1-based OTB coordinate text to a 0-based double.
bool parseCoordinate(const std::string& token, double& out) {
  if (plainDecimal(token))
    return parseNumber(shiftDecimal(token, -1), out);
  if (!parseNumber(token, out))
    return false;
  out -= 1.0;
  return true;
}

} // namespace

std::vector<BoundingBox> parse_otb_boxes(std::istream& in, const std::string& source) {
  std::vector<BoundingBox> boxes;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::replace(line.begin(), line.end(), '\t', ' ');
    std::istringstream ls(line);
    std::string rest;
    if (!(ls >> rest))
      continue; // blank line
    ls.clear();
    ls.str(line);
    std::string tok[4];
    double v[4];
    for (int i = 0; i < 4; ++i) {
      const bool ok = (ls >> tok[i]) &&
                      (i < 2 ? parseCoordinate(tok[i], v[i]) : parseNumber(tok[i], v[i]));
      if (!ok)
        throw DatasetError(source + ":" + std::to_string(lineNo) +
                           ": expected four numbers x,y,w,h");
    }
    if (ls >> rest)
      throw DatasetError(source + ":" + std::to_string(lineNo) + ": trailing data '" + rest +
                         "'");
    BoundingBox box{v[0], v[1], v[2], v[3]};
    if (!box.valid())
      throw DatasetError(source + ":" + std::to_string(lineNo) +
                         ": box needs positive width and height");
    boxes.push_back(box);
  }
  return boxes;
}

void write_otb_boxes(std::ostream& out, const std::vector<BoundingBox>& boxes) {
  for (const auto& b : boxes)
    out << shiftDecimal(fixedText(b.x), 1) << ',' << shiftDecimal(fixedText(b.y), 1) << ','
        << format_number(b.width) << ',' << format_number(b.height) << '\n';
}

SequenceDataset load_otb_sequence(const std::string& dir) {
  const fs::path root(dir);
  const fs::path imgDir = root / "img";
  const fs::path gtPath = root / "groundtruth_rect.txt";
  if (!fs::is_directory(imgDir))
    throw DatasetError(dir + ": missing img/ directory");
  std::ifstream gt(gtPath);
  if (!gt)
    throw DatasetError(dir + ": missing groundtruth_rect.txt");

  SequenceDataset data;
  data.name = root.filename().string();
  if (data.name.empty())
    data.name = root.parent_path().filename().string();
  data.boxes = parse_otb_boxes(gt, gtPath.string());
  for (const auto& entry : fs::directory_iterator(imgDir)) {
    if (!entry.is_regular_file())
      continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
      data.framePaths.push_back(entry.path().string());
  }
  std::sort(data.framePaths.begin(), data.framePaths.end());
  if (data.framePaths.empty())
    throw DatasetError(dir + ": img/ contains no png or jpg frames");
  if (data.framePaths.size() != data.boxes.size())
    throw DatasetError(dir + ": " + std::to_string(data.framePaths.size()) + " frames but " +
                       std::to_string(data.boxes.size()) + " ground-truth boxes");
  return data;
}

void write_otb_sequence(const std::string& dir, const LabeledSequence& seq) {
  if (seq.frames.size() != seq.boxes.size())
    throw DatasetError("write_otb_sequence: frame and box counts differ");
  const fs::path root(dir);
  fs::create_directories(root / "img");
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.png", i + 1);
    write_png((root / "img" / name).string(), seq.frames[i]);
  }
  std::ofstream gt(root / "groundtruth_rect.txt");
  if (!gt)
    throw DatasetError(dir + ": cannot write groundtruth_rect.txt");
  write_otb_boxes(gt, seq.boxes);
}

LabeledSequence load_frames(const SequenceDataset& data) {
  LabeledSequence seq;
  seq.name = data.name;
  seq.boxes = data.boxes;
  for (const auto& p : data.framePaths)
    seq.frames.push_back(read_image(p));
  return seq;
}

} // namespace ubacf
