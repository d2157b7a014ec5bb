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

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leafrag/detect.hpp"

namespace leafrag::eval {

struct MatchedPrediction {
  double confidence = 0;
  bool is_tp = false;
  int class_id = 0;

  friend bool operator==(const MatchedPrediction&, const MatchedPrediction&) = default;
};

/// Greedy class-wise matching for one image. Predictions are visited by
/// descending confidence (earlier index first on ties); each claims its
/// best-IoU unmatched ground truth of the same class (earlier index first on
/// ties) and is a TP iff that IoU >= `iou_threshold`. Output is in visiting
/// order.
std::vector<MatchedPrediction> match_predictions(const std::vector<detect::Detection>& preds,
                                                 const std::vector<detect::GroundTruthBox>& gts,
                                                 double iou_threshold);

/// 101-point interpolated AP for one class: the mean over r in {0, .01, ..., 1}
/// of the best precision reached at any recall >= r. Returns 0 when there is
/// no ground truth but there are predictions, and nullopt when there is
/// neither (the class is then excluded from means).
std::optional<double> average_precision(std::vector<MatchedPrediction> matches, std::size_t n_gt);

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> coco_iou_thresholds();

/// Mean AP over the ten COCO thresholds; `matches_at(t)` yields the class's
/// matches at threshold `t`.
std::optional<double> ap_range(
    const std::function<std::vector<MatchedPrediction>(double)>& matches_at, std::size_t n_gt);

struct PrecisionRecall {
  double precision = 0;
  double recall = 0;
};

/// Single operating point over every prediction passed in.
PrecisionRecall precision_recall_at(const std::vector<MatchedPrediction>& matches,
                                    std::size_t n_gt);

struct ClassMetrics {
  std::string class_name;
  double precision = 0;
  double recall = 0;
  std::optional<double> ap50;
  std::optional<double> ap50_95;
  std::size_t n_gt = 0;
  std::size_t n_pred = 0;
};

struct EvalReport {
  std::vector<ClassMetrics> classes;
  ClassMetrics overall;
  std::size_t images = 0;
  std::size_t instances = 0;
};

/// Unweighted mean of each column. AP columns average only the rows where AP
/// is defined. Throws Error{kValidation} on empty input.
ClassMetrics aggregate_overall(const std::vector<ClassMetrics>& rows);

/// Round-half-up at `decimals` (< 12) places. The value is first settled to 12
/// decimals so that a mean such as 0.4535 stored as 0.45349999... becomes 0.454.
double round_half_up(double value, int decimals = 3);
std::string format_metric(double value, int decimals = 3);

struct ImageInstance {
  std::string name;
  std::vector<detect::Detection> preds;
  std::vector<detect::GroundTruthBox> gts;
};

struct EvalOptions {
  /// Predictions below this confidence are ignored. Prediction files are
  /// normally already thresholded by the detector, hence 0.
  double conf_threshold = 0.0;
};

/// Per-class rows for every class in `classes`; the overall row averages the
/// classes that have ground truth or predictions.
EvalReport evaluate_instances(const std::vector<ImageInstance>& images,
                              const detect::ClassList& classes, const EvalOptions& options = {});

/// Pixel sizes keyed by image stem, with an optional fallback.
struct ImageSizes {
  std::map<std::string, std::pair<double, double>> by_stem;
  std::optional<std::pair<double, double>> fallback;

  std::pair<double, double> lookup(const std::string& stem) const;
};

/// Reads a `filename,width,height` manifest (header row optional).
ImageSizes load_size_manifest(const std::filesystem::path& csv);

/// Pairs `<gt_dir>/<stem>.txt` with `<pred_dir>/<stem>.txt`. A missing
/// prediction file counts as zero predictions; a prediction file without
/// ground truth is an error listing every offender.
EvalReport evaluate_dataset(const std::filesystem::path& pred_dir,
                            const std::filesystem::path& gt_dir, const detect::ClassList& classes,
                            const ImageSizes& sizes, const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);
std::string format_table(const EvalReport& report);

}  // namespace leafrag::eval
