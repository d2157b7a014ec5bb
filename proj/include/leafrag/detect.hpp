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

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace leafrag::detect {

/// Axis-aligned box in pixel coordinates, origin top-left. Coordinates are
/// kept as doubles so that denormalized labels are not truncated.
struct BBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  bool valid() const noexcept;

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
  int class_id = 0;
  std::string class_name;
  BBox bbox;
  double confidence = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruthBox {
  int class_id = 0;
  BBox bbox;

  friend bool operator==(const GroundTruthBox&, const GroundTruthBox&) = default;
};

/// Ordered, unique, non-empty class names. Index in the list is the class id.
class ClassList {
 public:
  /// cercospora, miner, phoma, rust
  ClassList();
  explicit ClassList(std::vector<std::string> names);

  /// One name per line; blank lines and `#` comments are skipped.
  static ClassList parse(std::string_view text);

  std::size_t size() const noexcept { return names_.size(); }
  bool contains(int class_id) const noexcept {
    return class_id >= 0 && static_cast<std::size_t>(class_id) < names_.size();
  }
  const std::string& name(int class_id) const;
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

/// Intersection over union. Zero for disjoint boxes and for any zero-area box.
double iou(const BBox& a, const BBox& b) noexcept;

/// Parses `class x_c y_c w h` lines normalized to [0,1] and denormalizes them
/// to pixels. Throws Error{kParse} naming the 1-based line number.
std::vector<GroundTruthBox> parse_yolo_labels(std::string_view text, double image_w,
                                              double image_h, const ClassList& classes);

/// Same as parse_yolo_labels with a sixth confidence field in [0,1].
std::vector<Detection> parse_predictions(std::string_view text, double image_w, double image_h,
                                         const ClassList& classes);

/// Inverse of parse_yolo_labels; emits round-trippable decimal text.
std::string serialize_yolo_labels(const std::vector<GroundTruthBox>& boxes, double image_w,
                                  double image_h);
std::string serialize_predictions(const std::vector<Detection>& dets, double image_w,
                                  double image_h);

inline constexpr double kDefaultConfThreshold = 0.25;
inline constexpr double kDefaultNmsIouThreshold = 0.45;

/// Drops detections below `conf_threshold`, then greedily suppresses, within
/// each class, boxes whose IoU with an already kept box exceeds
/// `iou_threshold`. Output is sorted by descending confidence; equal
/// confidences keep their input order.
std::vector<Detection> filter_and_nms(std::vector<Detection> dets,
                                      double conf_threshold = kDefaultConfThreshold,
                                      double iou_threshold = kDefaultNmsIouThreshold);

}  // namespace leafrag::detect
