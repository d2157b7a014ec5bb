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

#include "leafrag/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "leafrag/error.hpp"

namespace leafrag::eval {
namespace {

namespace fs = std::filesystem;
using detect::Detection;
using detect::GroundTruthBox;

std::vector<std::size_t> order_by_confidence(const std::vector<Detection>& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });
  return order;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, fs::path> list_label_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIo, "not a readable directory: " + dir.string());
  }
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      out.emplace(entry.path().stem().string(), entry.path());
    }
  }
  if (ec) throw Error(ErrorCode::kIo, "cannot list " + dir.string() + ": " + ec.message());
  return out;
}

nlohmann::ordered_json metrics_json(const ClassMetrics& m) {
  nlohmann::ordered_json j;
  j["class_name"] = m.class_name;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["ap50"] = m.ap50 ? nlohmann::ordered_json(*m.ap50) : nlohmann::ordered_json(nullptr);
  j["ap50_95"] = m.ap50_95 ? nlohmann::ordered_json(*m.ap50_95) : nlohmann::ordered_json(nullptr);
  j["n_gt"] = m.n_gt;
  j["n_pred"] = m.n_pred;
  return j;
}

}  // namespace

std::vector<MatchedPrediction> match_predictions(const std::vector<Detection>& preds,
                                                 const std::vector<GroundTruthBox>& gts,
                                                 double iou_threshold) {
  std::vector<bool> consumed(gts.size(), false);
  std::vector<MatchedPrediction> out;
  out.reserve(preds.size());
  for (std::size_t idx : order_by_confidence(preds)) {
    const Detection& p = preds[idx];
    double best_iou = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (consumed[g] || gts[g].class_id != p.class_id) continue;
      const double v = detect::iou(p.bbox, gts[g].bbox);
      if (v > best_iou) {
        best_iou = v;
        best_gt = g;
      }
    }
    const bool tp = best_gt < gts.size() && best_iou >= iou_threshold;
    if (tp) consumed[best_gt] = true;
    out.push_back(MatchedPrediction{p.confidence, tp, p.class_id});
  }
  return out;
}

std::optional<double> average_precision(std::vector<MatchedPrediction> matches,
                                        std::size_t n_gt) {
  if (n_gt == 0) {
    if (matches.empty()) return std::nullopt;
    return 0.0;
  }
  if (matches.empty()) return 0.0;
  std::stable_sort(matches.begin(), matches.end(),
                   [](const MatchedPrediction& a, const MatchedPrediction& b) {
                     return a.confidence > b.confidence;
                   });

  const std::size_t n = matches.size();
  std::vector<std::size_t> tp_count(n);
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (matches[i].is_tp) ++tp;
    tp_count[i] = tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // precision envelope: best precision at this or any later (higher-recall) point
  for (std::size_t i = n - 1; i > 0; --i) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }

  double sum = 0.0;
  std::size_t first = 0;
  for (std::size_t level = 0; level <= 100; ++level) {
    // recall_i >= level/100  <=>  tp_i * 100 >= level * n_gt
    while (first < n && tp_count[first] * 100 < level * n_gt) ++first;
    if (first < n) sum += precision[first];
  }
  return sum / 101.0;
}

std::array<double, 10> coco_iou_thresholds() {
  std::array<double, 10> out{};
  for (int i = 0; i < 10; ++i) out[static_cast<std::size_t>(i)] = (50 + 5 * i) / 100.0;
  return out;
}

std::optional<double> ap_range(
    const std::function<std::vector<MatchedPrediction>(double)>& matches_at, std::size_t n_gt) {
  double sum = 0.0;
  for (double t : coco_iou_thresholds()) {
    auto ap = average_precision(matches_at(t), n_gt);
    if (!ap) return std::nullopt;
    sum += *ap;
  }
  return sum / 10.0;
}

PrecisionRecall precision_recall_at(const std::vector<MatchedPrediction>& matches,
                                    std::size_t n_gt) {
  const auto tp = static_cast<std::size_t>(
      std::count_if(matches.begin(), matches.end(), [](const auto& m) { return m.is_tp; }));
  PrecisionRecall pr;
  if (!matches.empty()) pr.precision = static_cast<double>(tp) / static_cast<double>(matches.size());
  if (n_gt > 0) pr.recall = static_cast<double>(tp) / static_cast<double>(n_gt);
  return pr;
}

ClassMetrics aggregate_overall(const std::vector<ClassMetrics>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kValidation, "cannot aggregate zero class rows");
  ClassMetrics overall;
  overall.class_name = "overall";
  double p = 0, r = 0, ap50 = 0, ap5095 = 0;
  std::size_t n_ap50 = 0, n_ap5095 = 0;
  for (const auto& row : rows) {
    p += row.precision;
    r += row.recall;
    if (row.ap50) {
      ap50 += *row.ap50;
      ++n_ap50;
    }
    if (row.ap50_95) {
      ap5095 += *row.ap50_95;
      ++n_ap5095;
    }
    overall.n_gt += row.n_gt;
    overall.n_pred += row.n_pred;
  }
  const auto count = static_cast<double>(rows.size());
  overall.precision = p / count;
  overall.recall = r / count;
  if (n_ap50 > 0) overall.ap50 = ap50 / static_cast<double>(n_ap50);
  if (n_ap5095 > 0) overall.ap50_95 = ap5095 / static_cast<double>(n_ap5095);
  return overall;
}

std::string format_metric(double value, int decimals) {
  // Settle binary noise first (0.45349999999999996 -> 0.453500000000), then
  // round half up on the decimal digits.
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", std::fabs(value));
  std::string digits(buf);
  const auto dot = digits.find('.');
  std::string int_part = digits.substr(0, dot);
  std::string frac = digits.substr(dot + 1);
  const bool round_up = frac[static_cast<std::size_t>(decimals)] >= '5';
  std::string kept = int_part + frac.substr(0, static_cast<std::size_t>(decimals));
  if (round_up) {
    int i = static_cast<int>(kept.size()) - 1;
    while (i >= 0) {
      if (kept[static_cast<std::size_t>(i)] == '9') {
        kept[static_cast<std::size_t>(i)] = '0';
        --i;
      } else {
        ++kept[static_cast<std::size_t>(i)];
        break;
      }
    }
    if (i < 0) kept.insert(kept.begin(), '1');
  }
  const std::size_t int_len = kept.size() - static_cast<std::size_t>(decimals);
  std::string out = kept.substr(0, int_len);
  if (decimals > 0) out += "." + kept.substr(int_len);
  const bool is_zero = out.find_first_not_of("0.") == std::string::npos;
  if (value < 0 && !is_zero) out.insert(out.begin(), '-');
  return out;
}

double round_half_up(double value, int decimals) {
  return std::stod(format_metric(value, decimals));
}

EvalReport evaluate_instances(const std::vector<ImageInstance>& images,
                              const detect::ClassList& classes, const EvalOptions& options) {
  const std::size_t n_classes = classes.size();
  const auto thresholds = coco_iou_thresholds();

  // matches[t][c]: all matches for class c at threshold t; index 0 is IoU 0.5.
  std::vector<std::vector<std::vector<MatchedPrediction>>> matches(
      thresholds.size(), std::vector<std::vector<MatchedPrediction>>(n_classes));
  std::vector<std::size_t> n_gt(n_classes, 0);
  std::vector<std::size_t> n_pred(n_classes, 0);

  EvalReport report;
  report.images = images.size();
  for (const auto& image : images) {
    std::vector<Detection> preds;
    for (const auto& p : image.preds) {
      if (!classes.contains(p.class_id)) {
        throw Error(ErrorCode::kValidation, image.name + ": prediction class out of range");
      }
      if (p.confidence >= options.conf_threshold) preds.push_back(p);
    }
    for (const auto& g : image.gts) {
      if (!classes.contains(g.class_id)) {
        throw Error(ErrorCode::kValidation, image.name + ": ground-truth class out of range");
      }
      ++n_gt[static_cast<std::size_t>(g.class_id)];
    }
    for (const auto& p : preds) ++n_pred[static_cast<std::size_t>(p.class_id)];
    report.instances += image.gts.size();
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      for (const auto& m : match_predictions(preds, image.gts, thresholds[t])) {
        matches[t][static_cast<std::size_t>(m.class_id)].push_back(m);
      }
    }
  }

  std::vector<ClassMetrics> present;
  for (std::size_t c = 0; c < n_classes; ++c) {
    ClassMetrics row;
    row.class_name = classes.names()[c];
    row.n_gt = n_gt[c];
    row.n_pred = n_pred[c];
    const auto pr = precision_recall_at(matches[0][c], n_gt[c]);
    row.precision = pr.precision;
    row.recall = pr.recall;
    row.ap50 = average_precision(matches[0][c], n_gt[c]);
    row.ap50_95 = ap_range(
        [&](double t) {
          const auto it = std::find(thresholds.begin(), thresholds.end(), t);
          return matches[static_cast<std::size_t>(it - thresholds.begin())][c];
        },
        n_gt[c]);
    if (row.n_gt + row.n_pred > 0) present.push_back(row);
    report.classes.push_back(std::move(row));
  }
  if (present.empty()) {
    report.overall.class_name = "overall";
  } else {
    report.overall = aggregate_overall(present);
  }
  return report;
}

std::pair<double, double> ImageSizes::lookup(const std::string& stem) const {
  if (auto it = by_stem.find(stem); it != by_stem.end()) return it->second;
  if (fallback) return *fallback;
  throw Error(ErrorCode::kValidation, "no image size known for '" + stem + "'");
}

ImageSizes load_size_manifest(const fs::path& csv) {
  ImageSizes sizes;
  std::istringstream in(read_file(csv));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (line_no == 1 && !cols.empty() && cols[0] == "filename") continue;
    if (cols.size() != 3) {
      throw Error(ErrorCode::kParse, csv.string() + ": line " + std::to_string(line_no) +
                                         ": expected filename,width,height");
    }
    try {
      std::size_t used_w = 0, used_h = 0;
      const double w = std::stod(cols[1], &used_w);
      const double h = std::stod(cols[2], &used_h);
      if (used_w != cols[1].size() || used_h != cols[2].size() || !(w > 0) || !(h > 0)) {
        throw std::invalid_argument("size");
      }
      sizes.by_stem[fs::path(cols[0]).stem().string()] = {w, h};
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParse, csv.string() + ": line " + std::to_string(line_no) +
                                         ": invalid width/height");
    }
  }
  return sizes;
}

EvalReport evaluate_dataset(const fs::path& pred_dir, const fs::path& gt_dir,
                            const detect::ClassList& classes, const ImageSizes& sizes,
                            const EvalOptions& options) {
  const auto gt_files = list_label_files(gt_dir);
  const auto pred_files = list_label_files(pred_dir);

  std::vector<std::string> orphans;
  for (const auto& [stem, path] : pred_files) {
    if (!gt_files.contains(stem)) orphans.push_back(path.filename().string());
  }
  if (!orphans.empty()) {
    std::string msg = "prediction files without ground truth:";
    for (const auto& o : orphans) msg += " " + o;
    throw Error(ErrorCode::kValidation, msg);
  }

  std::vector<ImageInstance> images;
  images.reserve(gt_files.size());
  for (const auto& [stem, gt_path] : gt_files) {
    const auto [w, h] = sizes.lookup(stem);
    ImageInstance inst;
    inst.name = stem;
    try {
      inst.gts = detect::parse_yolo_labels(read_file(gt_path), w, h, classes);
      if (auto it = pred_files.find(stem); it != pred_files.end()) {
        inst.preds = detect::parse_predictions(read_file(it->second), w, h, classes);
      }
    } catch (const Error& e) {
      throw Error(e.code(), stem + ": " + e.what());
    }
    images.push_back(std::move(inst));
  }
  return evaluate_instances(images, classes, options);
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["images"] = report.images;
  j["instances"] = report.instances;
  j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : report.classes) {
    j["classes"].push_back(metrics_json(c));
  }
  j["overall"] = metrics_json(report.overall);
  return j.dump(2);
}

std::string format_table(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %9s %9s %9s %12s %7s %7s\n", "Class", "Precision",
                "Recall", "mAP@0.5", "mAP@0.5:0.95", "GT", "Pred");
  out << line;
  auto row = [&](const ClassMetrics& m) {
    const std::string ap50 = m.ap50 ? format_metric(*m.ap50) : "-";
    const std::string ap5095 = m.ap50_95 ? format_metric(*m.ap50_95) : "-";
    std::snprintf(line, sizeof line, "%-12s %9s %9s %9s %12s %7zu %7zu\n", m.class_name.c_str(),
                  format_metric(m.precision).c_str(), format_metric(m.recall).c_str(),
                  ap50.c_str(), ap5095.c_str(), m.n_gt, m.n_pred);
    out << line;
  };
  for (const auto& c : report.classes) row(c);
  row(report.overall);
  out << report.images << " images, " << report.instances << " instances\n";
  return out.str();
}

}  // namespace leafrag::eval
