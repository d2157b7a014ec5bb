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

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "leafrag/detect.hpp"
#include "leafrag/image.hpp"
#include "leafrag/net.hpp"

namespace leafrag::detect {

struct DetectorResult {
  ImageInfo image;
  std::vector<Detection> detections;  // post-processed, original-image pixels
};

/// Source of detections for an uploaded leaf image. Implementations are
/// immutable after construction and callable from many threads.
class Detector {
 public:
  virtual ~Detector() = default;

  /// `filename` is the client-supplied name of the image; the fixture
  /// detector uses it to locate the sidecar label file.
  /// Throws Error{kValidation} when the payload is not a PNG/JPEG image.
  virtual DetectorResult detect(std::string_view image_bytes, std::string_view filename) const = 0;

  virtual std::string_view mode() const noexcept = 0;
};

struct Thresholds {
  double conf = kDefaultConfThreshold;
  double nms_iou = kDefaultNmsIouThreshold;
};

/// Replays `<labels_dir>/<stem>.txt` (prediction format, confidence column
/// included) for an uploaded `<stem>.<ext>`. A missing sidecar is a
/// not-found error; an empty sidecar means a healthy leaf.
class FixtureDetector final : public Detector {
 public:
  FixtureDetector(std::filesystem::path labels_dir, ClassList classes, Thresholds thresholds = {});

  DetectorResult detect(std::string_view image_bytes, std::string_view filename) const override;
  std::string_view mode() const noexcept override { return "fixture"; }

 private:
  std::filesystem::path labels_dir_;
  ClassList classes_;
  Thresholds thresholds_;
};

/// Posts the image as multipart field `image` to a detection server speaking
/// the JSON response schema
/// `{"detections":[{class_id,class_name,x1,y1,x2,y2,confidence}],"image_width","image_height"}`.
class RemoteDetector final : public Detector {
 public:
  RemoteDetector(std::string url, ClassList classes, Thresholds thresholds = {},
                 net::CallOptions call_options = {});

  DetectorResult detect(std::string_view image_bytes, std::string_view filename) const override;
  std::string_view mode() const noexcept override { return "remote"; }

 private:
  net::Url url_;
  ClassList classes_;
  Thresholds thresholds_;
  net::CallOptions call_options_;
};

/// Validates the payload and returns its dimensions.
ImageInfo require_image(std::string_view image_bytes);

/// Parses the remote detector's JSON body; Error{kProtocol} on schema errors.
std::vector<Detection> parse_detector_response(std::string_view body, const ClassList& classes);

}  // namespace leafrag::detect
