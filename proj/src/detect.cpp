// Copyright 2026 The leafrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "leafrag/detect.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "leafrag/error.hpp"

namespace leafrag::detect {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    if (end > pos) fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + what);
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    fail(line_no, "not a number: '" + std::string(field) + "'");
  }
  return value;
}

int parse_class(std::string_view field, std::size_t line_no, const ClassList& classes) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(line_no, "class id is not an integer: '" + std::string(field) + "'");
  }
  if (!classes.contains(value)) {
    fail(line_no, "class id " + std::to_string(value) + " out of range");
  }
  return value;
}

struct ParsedLine {
  int class_id;
  BBox box;
  double confidence;
};

// Calls `emit` for every non-empty line with `expected_fields` fields.
template <typename Emit>
void for_each_record(std::string_view text, std::size_t expected_fields, double image_w,
                     double image_h, const ClassList& classes, Emit&& emit) {
  if (!(image_w > 0) || !(image_h > 0)) {
    throw Error(ErrorCode::kValidation, "image size must be positive");
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != expected_fields) {
      fail(line_no, "expected " + std::to_string(expected_fields) + " fields, got " +
                        std::to_string(fields.size()));
    }
    ParsedLine out{};
    out.class_id = parse_class(fields[0], line_no, classes);
    double norm[4];
    for (int i = 0; i < 4; ++i) {
      norm[i] = parse_double(fields[static_cast<std::size_t>(i) + 1], line_no);
      if (norm[i] < 0.0 || norm[i] > 1.0) fail(line_no, "coordinate outside [0,1]");
    }
    const double xc = norm[0] * image_w;
    const double yc = norm[1] * image_h;
    const double w = norm[2] * image_w;
    const double h = norm[3] * image_h;
    out.box = BBox{xc - w / 2, yc - h / 2, xc + w / 2, yc + h / 2};
    out.confidence = 1.0;
    if (expected_fields == 6) {
      out.confidence = parse_double(fields[5], line_no);
      if (out.confidence < 0.0 || out.confidence > 1.0) {
        fail(line_no, "confidence outside [0,1]");
      }
    }
    emit(out);
  }
}

void append_box(std::string& out, const BBox& box, double image_w, double image_h) {
  char buf[128];
  std::snprintf(buf, sizeof buf, " %.17g %.17g %.17g %.17g", (box.x1 + box.x2) / 2 / image_w,
                (box.y1 + box.y2) / 2 / image_h, box.width() / image_w, box.height() / image_h);
  out += buf;
}

}  // namespace

bool BBox::valid() const noexcept {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
         x1 <= x2 && y1 <= y2;
}

ClassList::ClassList() : names_{"cercospora", "miner", "phoma", "rust"} {}

ClassList::ClassList(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw Error(ErrorCode::kConfig, "class list is empty");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error(ErrorCode::kConfig, "class list contains an empty name");
    if (!seen.insert(n).second) {
      throw Error(ErrorCode::kConfig, "duplicate class name '" + n + "'");
    }
  }
}

ClassList ClassList::parse(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
      line.remove_suffix(1);
    }
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) {
      line.remove_prefix(1);
    }
    if (line.empty() || line.front() == '#') continue;
    names.emplace_back(line);
  }
  return ClassList(std::move(names));
}

const std::string& ClassList::name(int class_id) const {
  if (!contains(class_id)) {
    throw Error(ErrorCode::kValidation, "class id " + std::to_string(class_id) + " out of range");
  }
  return names_[static_cast<std::size_t>(class_id)];
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<GroundTruthBox> parse_yolo_labels(std::string_view text, double image_w,
                                              double image_h, const ClassList& classes) {
  std::vector<GroundTruthBox> out;
  for_each_record(text, 5, image_w, image_h, classes, [&](const ParsedLine& p) {
    out.push_back(GroundTruthBox{p.class_id, p.box});
  });
  return out;
}

std::vector<Detection> parse_predictions(std::string_view text, double image_w, double image_h,
                                         const ClassList& classes) {
  std::vector<Detection> out;
  for_each_record(text, 6, image_w, image_h, classes, [&](const ParsedLine& p) {
    out.push_back(Detection{p.class_id, classes.name(p.class_id), p.box, p.confidence});
  });
  return out;
}

std::string serialize_yolo_labels(const std::vector<GroundTruthBox>& boxes, double image_w,
                                  double image_h) {
  std::string out;
  for (const auto& gt : boxes) {
    out += std::to_string(gt.class_id);
    append_box(out, gt.bbox, image_w, image_h);
    out += '\n';
  }
  return out;
}

std::string serialize_predictions(const std::vector<Detection>& dets, double image_w,
                                  double image_h) {
  std::string out;
  char buf[32];
  for (const auto& d : dets) {
    out += std::to_string(d.class_id);
    append_box(out, d.bbox, image_w, image_h);
    std::snprintf(buf, sizeof buf, " %.17g\n", d.confidence);
    out += buf;
  }
  return out;
}

std::vector<Detection> filter_and_nms(std::vector<Detection> dets, double conf_threshold,
                                      double iou_threshold) {
  std::erase_if(dets, [&](const Detection& d) { return d.confidence < conf_threshold; });
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    return a.confidence > b.confidence;
  });
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (auto& candidate : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == candidate.class_id && iou(k.bbox, candidate.bbox) > iou_threshold;
    });
    if (!suppressed) kept.push_back(std::move(candidate));
  }
  return kept;
}

}  // namespace leafrag::detect
