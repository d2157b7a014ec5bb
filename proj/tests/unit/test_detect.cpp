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

#include <doctest.h>

#include "leafrag/detect.hpp"
#include "leafrag/detector.hpp"
#include "leafrag/error.hpp"
#include "leafrag/image.hpp"
#include "stubs.hpp"

using namespace leafrag;
using namespace leafrag::detect;
using leafrag::testing::read_file;
using leafrag::testing::source_dir;

TEST_CASE("iou of known boxes") {
  const BBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BBox{10, 0, 20, 10}) == 0.0);  // touching edges
  CHECK(iou(a, BBox{20, 20, 30, 30}) == 0.0);
  CHECK(iou(a, BBox{0, 0, 10, 7}) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(iou(a, BBox{5, 0, 15, 10}) == doctest::Approx(50.0 / 150.0));
  CHECK(iou(a, BBox{3, 3, 3, 8}) == 0.0);  // zero area
  CHECK(iou(a, BBox{2, 2, 4, 4}) == doctest::Approx(0.04));
}

TEST_CASE("class list defaults and parsing") {
  ClassList defaults;
  REQUIRE(defaults.size() == 4);
  CHECK(defaults.name(0) == "cercospora");
  CHECK(defaults.name(3) == "rust");
  CHECK_FALSE(defaults.contains(4));
  CHECK_FALSE(defaults.contains(-1));

  const auto parsed = ClassList::parse("# header\nalpha\n\n beta \r\n");
  CHECK(parsed.names() == std::vector<std::string>{"alpha", "beta"});
  CHECK_THROWS_AS(ClassList::parse("a\na\n"), Error);
  CHECK_THROWS_AS(ClassList::parse("\n# only comments\n"), Error);
}

TEST_CASE("yolo labels denormalize to pixels") {
  const auto boxes = parse_yolo_labels("3 0.5 0.5 0.25 0.5\n\n0 0.125 0.25 0.25 0.5\n", 64, 32, ClassList());
  REQUIRE(boxes.size() == 2);
  CHECK(boxes[0].class_id == 3);
  CHECK(boxes[0].bbox == BBox{24, 8, 40, 24});
  CHECK(boxes[1].bbox == BBox{0, 0, 16, 16});
}

TEST_CASE("yolo parse errors name the line") {
  const ClassList classes;
  auto message_of = [&](const char* text) {
    try {
      parse_yolo_labels(text, 100, 100, classes);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
      return std::string(e.what());
    }
    FAIL("expected a parse error");
    return std::string();
  };
  CHECK(message_of("0 0.5 0.5 0.1 0.1\n0 0.5 0.5 0.1\n").find("line 2") != std::string::npos);
  CHECK(message_of("9 0.5 0.5 0.1 0.1\n").find("line 1") != std::string::npos);
  CHECK(message_of("0 0.5 0.5 0.1 abc\n").find("line 1") != std::string::npos);
  CHECK(message_of("0 0.5 0.5 1.5 0.1\n").find("line 1") != std::string::npos);
  CHECK(message_of("\n\n0 0.5 0.5 -0.1 0.1\n").find("line 3") != std::string::npos);
  CHECK_THROWS_AS(parse_predictions("0 0.5 0.5 0.1 0.1 1.2\n", 10, 10, classes), Error);
  CHECK_THROWS_AS(parse_predictions("0 0.5 0.5 0.1 0.1\n", 10, 10, classes), Error);
}

TEST_CASE("serialization round-trips") {
  const std::vector<GroundTruthBox> gts{{1, {1.5, 2.25, 30.75, 40}}, {2, {0, 0, 640, 480}}};
  CHECK(parse_yolo_labels(serialize_yolo_labels(gts, 640, 480), 640, 480, ClassList()) == gts);

  const std::vector<Detection> dets{{0, "cercospora", {10, 20, 30, 40}, 0.8125},
                                    {3, "rust", {100.5, 7, 300, 200.25}, 0.3}};
  const auto back = parse_predictions(serialize_predictions(dets, 640, 480), 640, 480, ClassList());
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].class_id == dets[i].class_id);
    CHECK(back[i].class_name == dets[i].class_name);
    CHECK(back[i].confidence == dets[i].confidence);
    CHECK(back[i].bbox.x1 == doctest::Approx(dets[i].bbox.x1).epsilon(1e-12));
    CHECK(back[i].bbox.y2 == doctest::Approx(dets[i].bbox.y2).epsilon(1e-12));
  }
}

TEST_CASE("nms keeps the best box per overlapping group, class-wise") {
  std::vector<Detection> dets{
      {3, "rust", {0, 0, 10, 10}, 0.6},
      {3, "rust", {1, 0, 11, 10}, 0.9},     // overlaps the first heavily
      {0, "cercospora", {0, 0, 10, 10}, 0.5},  // other class, same box: kept
      {3, "rust", {50, 50, 60, 60}, 0.4},
      {3, "rust", {70, 70, 80, 80}, 0.1},   // below confidence threshold
  };
  const auto kept = filter_and_nms(dets);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].confidence == 0.9);
  CHECK(kept[1].class_name == "cercospora");
  CHECK(kept[2].bbox == BBox{50, 50, 60, 60});
}

TEST_CASE("nms threshold is exclusive and ties keep input order") {
  // IoU exactly 0.5 with threshold 0.5 is not suppressed
  std::vector<Detection> dets{{0, "a", {0, 0, 10, 10}, 0.7}, {0, "a", {0, 0, 10, 5}, 0.7}};
  auto kept = filter_and_nms(dets, 0.25, 0.5);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].bbox == BBox{0, 0, 10, 10});
  kept = filter_and_nms(dets, 0.25, 0.45);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].bbox == BBox{0, 0, 10, 10});
  CHECK(filter_and_nms({}, 0.25, 0.45).empty());
}

TEST_CASE("image probing") {
  const auto png = probe_image(read_file(source_dir() / "fixtures/images/rust_leaf.png"));
  REQUIRE(png);
  CHECK(png->format == ImageFormat::kPng);
  CHECK(png->width == 640);
  CHECK(png->height == 640);
  const auto jpg = probe_image(read_file(source_dir() / "fixtures/images/healthy_leaf.jpg"));
  REQUIRE(jpg);
  CHECK(jpg->format == ImageFormat::kJpeg);
  CHECK(jpg->width == 640);
  CHECK(jpg->height == 480);

  CHECK_FALSE(probe_image(""));
  CHECK_FALSE(probe_image("GIF89a......"));
  const std::string png_bytes = read_file(source_dir() / "fixtures/images/rust_leaf.png");
  CHECK_FALSE(probe_image(png_bytes.substr(0, 20)));
  const std::string jpg_bytes = read_file(source_dir() / "fixtures/images/healthy_leaf.jpg");
  CHECK_FALSE(probe_image(jpg_bytes.substr(0, 40)));
}

TEST_CASE("fixture detector replays sidecar labels") {
  FixtureDetector detector(source_dir() / "fixtures/labels", ClassList());
  const std::string bytes = read_file(source_dir() / "fixtures/images/rust_leaf.png");
  const auto result = detector.detect(bytes, "rust_leaf.png");
  CHECK(result.image.width == 640);
  REQUIRE(result.detections.size() == 2);  // the 0.62 duplicate is suppressed
  CHECK(result.detections[0].class_name == "rust");
  CHECK(result.detections[0].confidence == 0.91);

  const auto healthy = detector.detect(read_file(source_dir() / "fixtures/images/healthy_leaf.jpg"),
                                       "uploads/healthy_leaf.jpg");
  CHECK(healthy.detections.empty());

  try {
    detector.detect(bytes, "unknown.png");
    FAIL("expected not found");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFound);
  }
  CHECK_THROWS_AS(detector.detect("not an image", "rust_leaf.png"), Error);
}

TEST_CASE("remote detector response parsing") {
  const ClassList classes;
  const auto dets = parse_detector_response(
      R"({"detections":[{"class_id":3,"class_name":"rust","x1":1,"y1":2,"x2":30,"y2":40,"confidence":0.8}],"image_width":64,"image_height":64})",
      classes);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].class_name == "rust");
  CHECK(dets[0].bbox == BBox{1, 2, 30, 40});

  CHECK_THROWS_AS(parse_detector_response("[]", classes), Error);
  CHECK_THROWS_AS(parse_detector_response(R"({"detections":[{"class_id":7,"x1":0,"y1":0,"x2":1,"y2":1,"confidence":0.5}]})", classes), Error);
  CHECK_THROWS_AS(parse_detector_response(R"({"detections":[{"class_id":1,"x1":0,"y1":0,"x2":1,"y2":1}]})", classes), Error);
}

TEST_CASE("remote detector posts multipart and post-processes") {
  leafrag::testing::DetectorStub stub(
      R"({"detections":[)"
      R"({"class_id":3,"class_name":"rust","x1":10,"y1":10,"x2":50,"y2":50,"confidence":0.9},)"
      R"({"class_id":3,"class_name":"rust","x1":11,"y1":10,"x2":51,"y2":50,"confidence":0.8},)"
      R"({"class_id":1,"class_name":"miner","x1":-5,"y1":100,"x2":700,"y2":900,"confidence":0.7},)"
      R"({"class_id":0,"class_name":"cercospora","x1":1,"y1":1,"x2":2,"y2":2,"confidence":0.1}],)"
      R"("image_width":640,"image_height":640})");
  net::CallOptions call;
  call.sleeper = [](std::chrono::milliseconds) {};
  RemoteDetector detector(stub.endpoint(), ClassList(), Thresholds{}, call);
  const auto result = detector.detect(read_file(source_dir() / "fixtures/images/rust_leaf.png"), "leaf.png");
  REQUIRE(result.detections.size() == 2);
  CHECK(result.detections[0].confidence == 0.9);
  CHECK(result.detections[1].class_name == "miner");
  CHECK(result.detections[1].bbox == BBox{0, 100, 640, 640});  // clipped
  CHECK(stub.image_filenames() == std::vector<std::string>{"leaf.png"});
}

TEST_CASE("remote detector rescales boxes reported for a resized image") {
  leafrag::testing::DetectorStub stub(
      R"({"detections":[{"class_id":3,"class_name":"rust","x1":10,"y1":20,"x2":30,"y2":40,"confidence":0.9}],)"
      R"("image_width":320,"image_height":320})");
  RemoteDetector detector(stub.endpoint(), ClassList());
  const auto result = detector.detect(read_file(source_dir() / "fixtures/images/rust_leaf.png"), "leaf.png");
  REQUIRE(result.detections.size() == 1);
  CHECK(result.detections[0].bbox == BBox{20, 40, 60, 80});
}

TEST_CASE("remote detector failures") {
  leafrag::testing::DetectorStub stub("{not json");
  net::CallOptions call;
  call.sleeper = [](std::chrono::milliseconds) {};
  RemoteDetector detector(stub.endpoint(), ClassList(), Thresholds{}, call);
  const std::string png = read_file(source_dir() / "fixtures/images/rust_leaf.png");
  try {
    detector.detect(png, "leaf.png");
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProtocol);
  }
  stub.script_statuses({503, 503, 503, 503});
  try {
    detector.detect(png, "leaf.png");
    FAIL("expected transport error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTransport);
  }
}
