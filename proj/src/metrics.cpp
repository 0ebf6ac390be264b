// Copyright 2026 The nl2vi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nl2vi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nl2vi/errors.hpp"

namespace nl2vi {

std::vector<LabeledScore> rank_items(std::span<const LabeledScore> items) {
  std::vector<LabeledScore> ranked(items.begin(), items.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const LabeledScore& a, const LabeledScore& b) {
    if (a.predicted != b.predicted) return a.predicted > b.predicted;
    return a.item_id < b.item_id;
  });
  return ranked;
}

double average_precision(std::span<const LabeledScore> items) {
  const auto ranked = rank_items(items);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!ranked[i].label) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  if (hits == 0) throw NoPositives("average_precision: no positive labels");
  return sum / static_cast<double>(hits);
}

std::optional<double> precision_at_full_score(std::span<const LabeledScore> items) {
  std::size_t full = 0;
  std::size_t positive = 0;
  for (const auto& it : items) {
    if (it.predicted != 1.0) continue;
    ++full;
    positive += it.label ? 1 : 0;
  }
  if (full == 0) return std::nullopt;
  return static_cast<double>(positive) / static_cast<double>(full);
}

double consistency_accuracy(std::span<const LabeledScore> items, double threshold) {
  if (items.empty()) throw EmptyInput("consistency_accuracy: no items");
  std::size_t agree = 0;
  for (const auto& it : items) agree += ((it.predicted >= threshold) == it.label) ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(items.size());
}

FilterPrecisionRecall filter_precision_recall(const std::set<std::string>& gold_valid,
                                              const std::set<std::string>& kept,
                                              const std::set<std::string>& universe) {
  for (const auto& q : kept) {
    if (!universe.count(q)) throw SetViolation("kept qid '" + q + "' is outside the universe");
  }
  for (const auto& q : gold_valid) {
    if (!universe.count(q)) throw SetViolation("valid qid '" + q + "' is outside the universe");
  }
  std::size_t dropped = 0;
  std::size_t invalid = 0;
  std::size_t caught = 0;
  for (const auto& q : universe) {
    const bool is_dropped = !kept.count(q);
    const bool is_invalid = !gold_valid.count(q);
    dropped += is_dropped ? 1 : 0;
    invalid += is_invalid ? 1 : 0;
    caught += (is_dropped && is_invalid) ? 1 : 0;
  }
  FilterPrecisionRecall r;
  if (dropped) r.precision = static_cast<double>(caught) / static_cast<double>(dropped);
  if (invalid) r.recall = static_cast<double>(caught) / static_cast<double>(invalid);
  return r;
}

std::vector<HistogramBin> score_histogram(std::span<const double> scores, int bins) {
  if (bins < 1) throw std::invalid_argument("score_histogram: bins must be >= 1");
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / bins;
    out[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / bins;
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("score_histogram: score outside [0,1]");
    auto b = static_cast<int>(std::floor(s * bins));
    b = std::clamp(b, 0, bins - 1);
    // Floating-point products can land one bin off near an edge.
    while (b > 0 && s < out[static_cast<std::size_t>(b)].lo) --b;
    while (b < bins - 1 && s >= out[static_cast<std::size_t>(b)].hi) ++b;
    ++out[static_cast<std::size_t>(b)].count;
  }
  return out;
}

std::vector<PrecisionPoint> precision_curve(std::span<const LabeledScore> items) {
  const auto ranked = rank_items(items);
  std::size_t positives = 0;
  for (const auto& it : ranked) positives += it.label ? 1 : 0;
  std::vector<PrecisionPoint> curve;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    hits += ranked[i].label ? 1 : 0;
    curve.push_back({i + 1, ranked[i].predicted, static_cast<double>(hits) / static_cast<double>(i + 1),
                     positives ? static_cast<double>(hits) / static_cast<double>(positives) : 0.0});
  }
  return curve;
}

MetricReport compute_metric_report(std::span<const LabeledScore> items, double threshold) {
  MetricReport r;
  r.auc_ap = average_precision(items);
  r.p_at_1 = precision_at_full_score(items);
  r.accuracy = consistency_accuracy(items, threshold);
  r.n_items = items.size();
  r.threshold_used = threshold;
  return r;
}

}  // namespace nl2vi
