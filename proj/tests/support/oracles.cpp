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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace leafrag::oracle {

double box_iou(const detect::BBox& a, const detect::BBox& b) {
  const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
  if (!(area_a > 0) || !(area_b > 0)) return 0.0;
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return inter / (area_a + area_b - inter);
}

std::vector<bool> greedy_tp(const std::vector<detect::Detection>& preds,
                            const std::vector<detect::GroundTruthBox>& gts, double threshold) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < preds.size(); ++i) order.push_back(i);
  // selection sort keeps the rule visible: highest confidence, then lowest index
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& cj = preds[order[j]];
      const auto& cb = preds[order[best]];
      if (cj.confidence > cb.confidence ||
          (cj.confidence == cb.confidence && order[j] < order[best])) {
        best = j;
      }
    }
    std::swap(order[i], order[best]);
  }

  std::vector<bool> taken(gts.size(), false);
  std::vector<bool> tp(preds.size(), false);
  for (std::size_t idx : order) {
    std::optional<std::size_t> pick;
    double pick_iou = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].class_id != preds[idx].class_id) continue;
      const double v = box_iou(preds[idx].bbox, gts[g].bbox);
      if (!pick || v > pick_iou) {
        pick = g;
        pick_iou = v;
      }
    }
    if (pick && pick_iou >= threshold) {
      taken[*pick] = true;
      tp[idx] = true;
    }
  }
  return tp;
}

std::optional<double> ap101(const std::vector<bool>& ranked_tp, std::size_t n_gt) {
  if (n_gt == 0) return ranked_tp.empty() ? std::nullopt : std::optional<double>(0.0);
  double sum = 0;
  for (std::size_t level = 0; level <= 100; ++level) {
    double best = 0;
    std::size_t tp = 0;
    for (std::size_t k = 1; k <= ranked_tp.size(); ++k) {
      if (ranked_tp[k - 1]) ++tp;
      if (tp * 100 >= level * n_gt) {
        best = std::max(best, double(tp) / double(k));
      }
    }
    sum += best;
  }
  return sum / 101.0;
}

Report evaluate(const std::vector<Image>& images, std::size_t n_classes) {
  const double thresholds[10] = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
  Report report;
  std::vector<Row> present;
  for (std::size_t c = 0; c < n_classes; ++c) {
    Row row;
    for (const auto& im : images) {
      for (const auto& g : im.gts) row.n_gt += g.class_id == int(c);
      for (const auto& p : im.preds) row.n_pred += p.class_id == int(c);
    }
    // (confidence, image, index, tp per threshold)
    std::vector<std::tuple<double, std::size_t, std::size_t, std::vector<bool>>> ranked;
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::vector<std::vector<bool>> per_t;
      for (double t : thresholds) per_t.push_back(greedy_tp(images[i].preds, images[i].gts, t));
      for (std::size_t p = 0; p < images[i].preds.size(); ++p) {
        if (images[i].preds[p].class_id != int(c)) continue;
        std::vector<bool> flags;
        for (const auto& f : per_t) flags.push_back(f[p]);
        ranked.emplace_back(images[i].preds[p].confidence, i, p, flags);
      }
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
      return std::get<2>(a) < std::get<2>(b);
    });

    std::size_t tp50 = 0;
    for (const auto& r : ranked) tp50 += std::get<3>(r)[0];
    row.precision = ranked.empty() ? 0.0 : double(tp50) / double(ranked.size());
    row.recall = row.n_gt == 0 ? 0.0 : double(tp50) / double(row.n_gt);

    double sum = 0;
    bool defined = true;
    for (std::size_t t = 0; t < 10; ++t) {
      std::vector<bool> flags;
      for (const auto& r : ranked) flags.push_back(std::get<3>(r)[t]);
      const auto ap = ap101(flags, row.n_gt);
      if (t == 0) row.ap50 = ap;
      if (!ap) {
        defined = false;
        break;
      }
      sum += *ap;
    }
    if (defined) row.ap50_95 = sum / 10.0;
    if (row.n_gt + row.n_pred > 0) present.push_back(row);
    report.classes.push_back(row);
  }

  if (!present.empty()) {
    double p = 0, r = 0, a = 0, b = 0;
    std::size_t na = 0, nb = 0;
    for (const auto& row : present) {
      p += row.precision;
      r += row.recall;
      if (row.ap50) a += *row.ap50, ++na;
      if (row.ap50_95) b += *row.ap50_95, ++nb;
      report.overall.n_gt += row.n_gt;
      report.overall.n_pred += row.n_pred;
    }
    report.overall.precision = p / double(present.size());
    report.overall.recall = r / double(present.size());
    if (na) report.overall.ap50 = a / double(na);
    if (nb) report.overall.ap50_95 = b / double(nb);
  }
  return report;
}

std::vector<Hit> full_sort_top_k(const std::vector<store::StoreEntry>& entries,
                                 const std::vector<double>& query, std::size_t k) {
  struct Scored {
    double score;
    std::uint64_t insertion;
    std::string id;
  };
  double qq = 0;
  for (double q : query) qq += q * q;
  std::vector<Scored> all;
  for (const auto& e : entries) {
    double dot = 0, ee = 0;
    for (std::size_t i = 0; i < query.size(); ++i) {
      dot += query[i] * e.vector.values[i];
      ee += e.vector.values[i] * e.vector.values[i];
    }
    double score = 0;
    if (qq > 0 && ee > 0) score = std::clamp(dot / (std::sqrt(qq) * std::sqrt(ee)), -1.0, 1.0);
    all.push_back({score, e.insertion_index, e.chunk.chunk_id});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.insertion < b.insertion;
  });
  std::vector<Hit> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back({all[i].id, all[i].score});
  return out;
}

}  // namespace leafrag::oracle
