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

#include "leafrag/detector.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "leafrag/error.hpp"

namespace leafrag::detect {
namespace {

using nlohmann::json;

BBox clip(const BBox& b, const ImageInfo& image) {
  const double w = image.width;
  const double h = image.height;
  return BBox{std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h), std::clamp(b.x2, 0.0, w),
              std::clamp(b.y2, 0.0, h)};
}

std::vector<Detection> postprocess(std::vector<Detection> dets, const ImageInfo& image,
                                   const Thresholds& thresholds) {
  for (auto& d : dets) d.bbox = clip(d.bbox, image);
  return filter_and_nms(std::move(dets), thresholds.conf, thresholds.nms_iou);
}

double number_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw Error(ErrorCode::kProtocol, std::string("detector response: missing number '") + key + "'");
  }
  double v = it->get<double>();
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kProtocol, std::string("detector response: non-finite '") + key + "'");
  }
  return v;
}

}  // namespace

ImageInfo require_image(std::string_view image_bytes) {
  auto info = probe_image(image_bytes);
  if (!info) throw Error(ErrorCode::kValidation, "payload is not a PNG or JPEG image");
  return *info;
}

FixtureDetector::FixtureDetector(std::filesystem::path labels_dir, ClassList classes,
                                 Thresholds thresholds)
    : labels_dir_(std::move(labels_dir)), classes_(std::move(classes)), thresholds_(thresholds) {}

DetectorResult FixtureDetector::detect(std::string_view image_bytes,
                                       std::string_view filename) const {
  const ImageInfo image = require_image(image_bytes);
  const auto stem = std::filesystem::path(std::string(filename)).stem().string();
  if (stem.empty()) throw Error(ErrorCode::kNotFound, "fixture detector needs an image filename");
  const auto sidecar = labels_dir_ / (stem + ".txt");
  std::ifstream in(sidecar, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound, "no fixture labels for '" + std::string(filename) + "' (" +
                                          sidecar.string() + ")");
  }
  std::ostringstream text;
  text << in.rdbuf();
  std::vector<Detection> dets;
  try {
    dets = parse_predictions(text.str(), image.width, image.height, classes_);
  } catch (const Error& e) {
    throw Error(e.code(), sidecar.string() + ": " + e.what());
  }
  return DetectorResult{image, postprocess(std::move(dets), image, thresholds_)};
}

RemoteDetector::RemoteDetector(std::string url, ClassList classes, Thresholds thresholds,
                               net::CallOptions call_options)
    : url_(net::parse_url(url)),
      classes_(std::move(classes)),
      thresholds_(thresholds),
      call_options_(std::move(call_options)) {}

DetectorResult RemoteDetector::detect(std::string_view image_bytes,
                                      std::string_view filename) const {
  const ImageInfo image = require_image(image_bytes);
  const std::string content_type =
      image.format == ImageFormat::kPng ? "image/png" : "image/jpeg";
  std::string name = filename.empty() ? std::string("upload") : std::string(filename);
  auto response = net::post_multipart(
      url_, {net::MultipartFile{"image", name, std::string(image_bytes), content_type}}, {},
      call_options_);
  if (response.status != 200) {
    throw Error(ErrorCode::kTransport,
                "detector returned HTTP " + std::to_string(response.status));
  }
  auto dets = parse_detector_response(response.body, classes_);

  // Rescale when the server reports coordinates for a resized copy.
  json body = json::parse(response.body);
  if (body.contains("image_width") && body.contains("image_height")) {
    const double rw = number_field(body, "image_width");
    const double rh = number_field(body, "image_height");
    if (rw > 0 && rh > 0 && (rw != image.width || rh != image.height)) {
      const double sx = image.width / rw;
      const double sy = image.height / rh;
      for (auto& d : dets) {
        d.bbox = BBox{d.bbox.x1 * sx, d.bbox.y1 * sy, d.bbox.x2 * sx, d.bbox.y2 * sy};
      }
    }
  }
  return DetectorResult{image, postprocess(std::move(dets), image, thresholds_)};
}

std::vector<Detection> parse_detector_response(std::string_view body, const ClassList& classes) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kProtocol, "detector response is not a JSON object");
  }
  auto it = doc.find("detections");
  if (it == doc.end() || !it->is_array()) {
    throw Error(ErrorCode::kProtocol, "detector response lacks a 'detections' array");
  }
  std::vector<Detection> out;
  for (const auto& item : *it) {
    if (!item.is_object()) throw Error(ErrorCode::kProtocol, "detection is not an object");
    auto cid = item.find("class_id");
    if (cid == item.end() || !cid->is_number_integer()) {
      throw Error(ErrorCode::kProtocol, "detection lacks integer 'class_id'");
    }
    const int class_id = cid->get<int>();
    if (!classes.contains(class_id)) {
      throw Error(ErrorCode::kProtocol, "class_id " + std::to_string(class_id) + " out of range");
    }
    const std::string& expected = classes.name(class_id);
    if (auto cn = item.find("class_name"); cn != item.end()) {
      if (!cn->is_string() || cn->get<std::string>() != expected) {
        throw Error(ErrorCode::kProtocol, "class_name does not match class_id " +
                                              std::to_string(class_id));
      }
    }
    Detection d{class_id, expected,
                BBox{number_field(item, "x1"), number_field(item, "y1"), number_field(item, "x2"),
                     number_field(item, "y2")},
                number_field(item, "confidence")};
    if (!d.bbox.valid()) throw Error(ErrorCode::kProtocol, "detection box has x1>x2 or y1>y2");
    if (d.confidence < 0 || d.confidence > 1) {
      throw Error(ErrorCode::kProtocol, "detection confidence outside [0,1]");
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace leafrag::detect
