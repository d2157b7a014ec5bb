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

#include <json.hpp>

#include <random>

#include "leafrag/error.hpp"
#include "leafrag/eval.hpp"
#include "oracles.hpp"
#include "stubs.hpp"

using namespace leafrag;
using namespace leafrag::eval;
using detect::BBox;
using detect::Detection;
using detect::GroundTruthBox;

namespace {

std::vector<MatchedPrediction> ranked(std::initializer_list<bool> flags) {
  std::vector<MatchedPrediction> out;
  double conf = 1.0;
  for (bool f : flags) {
    out.push_back({conf, f, 0});
    conf -= 0.01;
  }
  return out;
}

ClassMetrics row(const char* name, double p, double r, double ap50, double ap5095) {
  ClassMetrics m;
  m.class_name = name;
  m.precision = p;
  m.recall = r;
  m.ap50 = ap50;
  m.ap50_95 = ap5095;
  return m;
}

}  // namespace

TEST_CASE("greedy matching") {
  const std::vector<GroundTruthBox> gts{{0, {0, 0, 10, 10}}, {0, {20, 20, 30, 30}}};
  const std::vector<Detection> preds{
      {0, "", {0, 0, 10, 9}, 0.5},    // IoU 0.9 with gt0, lower confidence
      {0, "", {0, 0, 10, 10}, 0.9},   // exact gt0, visited first
      {1, "", {20, 20, 30, 30}, 0.8},  // wrong class
  };
  const auto m = match_predictions(preds, gts, 0.5);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == MatchedPrediction{0.9, true, 0});
  CHECK(m[1] == MatchedPrediction{0.8, false, 1});
  CHECK(m[2] == MatchedPrediction{0.5, false, 0});  // gt0 already taken, gt1 disjoint
}

TEST_CASE("hand-derived AP values") {
  CHECK(*average_precision(ranked({false, true}), 1) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(*average_precision(ranked({true}), 1) == doctest::Approx(1.0));
  CHECK(*average_precision(ranked({true, false}), 2) == doctest::Approx(51.0 / 101.0));
  CHECK(*average_precision(ranked({}), 3) == 0.0);
  CHECK(*average_precision(ranked({false}), 0) == 0.0);
  CHECK_FALSE(average_precision(ranked({}), 0).has_value());
  // P/R: (1,1/3) (.5,1/3) (2/3,2/3) (.5,2/3) (.6,1): levels 0..33 -> 1, 34..66 -> 2/3, 67..100 -> .6
  const double expect = (34 * 1.0 + 33 * (2.0 / 3.0) + 34 * 0.6) / 101.0;
  CHECK(*average_precision(ranked({true, false, true, false, true}), 3) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("AP over COCO thresholds for a single IoU 0.70 match is 0.5") {
  const std::vector<GroundTruthBox> gts{{0, {0, 0, 10, 10}}};
  const std::vector<Detection> preds{{0, "", {0, 0, 10, 7}, 0.9}};
  const auto ap = ap_range([&](double t) { return match_predictions(preds, gts, t); }, 1);
  CHECK(*ap == doctest::Approx(0.5).epsilon(1e-9));
  const auto t = coco_iou_thresholds();
  CHECK(t.front() == 0.5);
  CHECK(t[4] == 0.7);
  CHECK(t.back() == 0.95);
}

TEST_CASE("AP is invariant to monotone confidence rescaling") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<MatchedPrediction> m;
    const int n = 1 + int(rng() % 12);
    for (int i = 0; i < n; ++i) m.push_back({double(rng() % 1000) / 1000.0, rng() % 2 == 0, 0});
    const std::size_t n_gt = 1 + rng() % 8;
    auto rescaled = m;
    for (auto& x : rescaled) x.confidence = 0.1 + 0.5 * x.confidence * x.confidence;
    CHECK(*average_precision(m, n_gt) == doctest::Approx(*average_precision(rescaled, n_gt)).epsilon(1e-12));
  }
}

TEST_CASE("appending low-confidence false positives never raises AP") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<MatchedPrediction> m;
    const int n = 1 + int(rng() % 10);
    for (int i = 0; i < n; ++i) m.push_back({0.5 + double(rng() % 500) / 1000.0, rng() % 2 == 0, 0});
    const std::size_t n_gt = 1 + rng() % 6;
    double prev = *average_precision(m, n_gt);
    for (int extra = 0; extra < 4; ++extra) {
      m.push_back({0.4 - 0.05 * extra, false, 0});
      const double next = *average_precision(m, n_gt);
      CHECK(next <= prev);
      prev = next;
    }
  }
}

TEST_CASE("table rows aggregate to the published overall row") {
  const std::vector<ClassMetrics> rows{
      row("cercospora", 0.546, 0.630, 0.575, 0.329), row("miner", 0.823, 0.849, 0.894, 0.650),
      row("phoma", 0.727, 0.877, 0.839, 0.612), row("rust", 0.561, 0.316, 0.415, 0.223)};
  const auto overall = aggregate_overall(rows);
  CHECK(format_metric(overall.precision) == "0.664");
  CHECK(format_metric(overall.recall) == "0.668");
  CHECK(format_metric(*overall.ap50) == "0.681");
  CHECK(format_metric(*overall.ap50_95) == "0.454");
  CHECK(round_half_up(*overall.ap50_95) == 0.454);
  CHECK_THROWS_AS(aggregate_overall({}), Error);
}

TEST_CASE("rounding") {
  CHECK(format_metric(0.4535) == "0.454");
  CHECK(format_metric(0.0005) == "0.001");
  CHECK(format_metric(0.00049) == "0.000");
  CHECK(format_metric(0.9995) == "1.000");
  CHECK(format_metric(1.0) == "1.000");
  CHECK(format_metric(0.125, 2) == "0.13");
  CHECK(format_metric(-0.0004) == "0.000");
  CHECK(round_half_up(0.66425) == 0.664);
  CHECK(round_half_up(0.68075) == 0.681);
}

TEST_CASE("evaluate_instances agrees with the oracle on a handmade set") {
  const detect::ClassList classes({"a", "b", "c"});
  std::vector<ImageInstance> images(2);
  images[0].gts = {{0, {0, 0, 10, 10}}, {1, {5, 5, 15, 15}}};
  images[0].preds = {{0, "a", {0, 0, 10, 8}, 0.9}, {0, "a", {1, 1, 10, 10}, 0.4}, {1, "b", {30, 30, 40, 40}, 0.8}};
  images[1].gts = {{0, {0, 0, 20, 20}}};
  images[1].preds = {{0, "a", {0, 0, 20, 19}, 0.9}};
  const auto report = evaluate_instances(images, classes);
  std::vector<oracle::Image> o(2);
  for (int i = 0; i < 2; ++i) o[i] = {images[i].preds, images[i].gts};
  const auto expected = oracle::evaluate(o, 3);
  REQUIRE(report.classes.size() == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(report.classes[c].precision == expected.classes[c].precision);
    CHECK(report.classes[c].recall == expected.classes[c].recall);
    CHECK(report.classes[c].ap50 == expected.classes[c].ap50);
    CHECK(report.classes[c].ap50_95 == expected.classes[c].ap50_95);
  }
  CHECK_FALSE(report.classes[2].ap50.has_value());  // class c absent everywhere
  CHECK(report.overall.ap50 == expected.overall.ap50);
  CHECK(report.overall.precision == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0));
  CHECK(report.instances == 3);
  CHECK(report.images == 2);
}

TEST_CASE("confidence threshold filters predictions") {
  std::vector<ImageInstance> images(1);
  images[0].gts = {{0, {0, 0, 10, 10}}};
  images[0].preds = {{0, "a", {20, 20, 30, 30}, 0.2}, {0, "a", {0, 0, 10, 10}, 0.6}};
  const detect::ClassList classes({"a"});
  EvalOptions opts;
  CHECK(evaluate_instances(images, classes, opts).classes[0].precision == 0.5);
  opts.conf_threshold = 0.25;
  const auto filtered = evaluate_instances(images, classes, opts);
  CHECK(filtered.classes[0].precision == 1.0);
  CHECK(filtered.classes[0].n_pred == 1);
}

TEST_CASE("evaluate_dataset reads directories") {
  leafrag::testing::TempDir dir;
  using leafrag::testing::write_file;
  write_file(dir / "gt/img1.txt", "0 0.5 0.5 0.5 0.5\n");
  write_file(dir / "gt/img2.txt", "");
  write_file(dir / "pred/img1.txt", "0 0.5 0.5 0.5 0.5 0.9\n1 0.2 0.2 0.1 0.1 0.3\n");
  write_file(dir / "sizes.csv", "filename,width,height\nimg1.jpg,64,64\nimg2.jpg,32,32\n");
  const auto sizes = load_size_manifest(dir / "sizes.csv");
  const detect::ClassList classes({"x", "y"});
  const auto report = evaluate_dataset(dir / "pred", dir / "gt", classes, sizes);
  CHECK(report.images == 2);
  CHECK(report.classes[0].ap50 == 1.0);
  CHECK(report.classes[1].ap50 == 0.0);
  CHECK(report.overall.ap50 == 0.5);

  const auto json = nlohmann::json::parse(report_to_json(report));
  CHECK(json["overall"]["ap50"] == 0.5);
  CHECK(json["classes"][1]["class_name"] == "y");
  CHECK(format_table(report).find("overall") != std::string::npos);

  write_file(dir / "pred/stray.txt", "0 0.5 0.5 0.5 0.5 0.9\n");
  try {
    evaluate_dataset(dir / "pred", dir / "gt", classes, sizes);
    FAIL("expected orphan error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stray.txt") != std::string::npos);
  }
}

TEST_CASE("size manifest and lookup errors") {
  leafrag::testing::TempDir dir;
  leafrag::testing::write_file(dir / "bad.csv", "a.jpg,64\n");
  CHECK_THROWS_AS(load_size_manifest(dir / "bad.csv"), Error);
  leafrag::testing::write_file(dir / "bad2.csv", "a.jpg,64,zero\n");
  CHECK_THROWS_AS(load_size_manifest(dir / "bad2.csv"), Error);
  ImageSizes sizes;
  CHECK_THROWS_AS(sizes.lookup("x"), Error);
  sizes.fallback = std::make_pair(10.0, 20.0);
  CHECK(sizes.lookup("x").second == 20.0);
}
