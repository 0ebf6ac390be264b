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

#pragma once

// Evaluation against human labels: average precision of the precision
// curve, precision among fully-consistent items, thresholded accuracy,
// question-filter precision/recall and score histograms.

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace nl2vi {

struct LabeledScore {
  std::string item_id;
  double predicted = 0.0;
  bool label = false;
};

struct MetricReport {
  double auc_ap = 0.0;
  std::optional<double> p_at_1;
  double accuracy = 0.0;
  std::size_t n_items = 0;
  double threshold_used = 0.5;
};

/// Ranking order used by every curve: predicted descending, item id ascending.
std::vector<LabeledScore> rank_items(std::span<const LabeledScore> items);

/// Mean over positive items of the precision at that item's rank.
/// Throws NoPositives when no item is labeled positive.
double average_precision(std::span<const LabeledScore> items);

/// Fraction of positives among items scored exactly 1.0; nullopt when no
/// item reaches 1.0.
std::optional<double> precision_at_full_score(std::span<const LabeledScore> items);

/// Predictions >= threshold count as consistent. Throws EmptyInput.
double consistency_accuracy(std::span<const LabeledScore> items, double threshold);

struct FilterPrecisionRecall {
  std::optional<double> precision;
  std::optional<double> recall;
};

/// Positives are invalid questions caught by the filter:
/// dropped = universe \ kept, invalid = universe \ gold_valid.
/// Throws SetViolation unless kept and gold_valid are subsets of universe.
FilterPrecisionRecall filter_precision_recall(const std::set<std::string>& gold_valid,
                                              const std::set<std::string>& kept,
                                              const std::set<std::string>& universe);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [0,1]; the last bin is closed on the right.
/// Throws std::invalid_argument for bins < 1 or a score outside [0,1].
std::vector<HistogramBin> score_histogram(std::span<const double> scores, int bins);

struct PrecisionPoint {
  std::size_t rank = 0;
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// One point per rank position of the ranked items.
std::vector<PrecisionPoint> precision_curve(std::span<const LabeledScore> items);

MetricReport compute_metric_report(std::span<const LabeledScore> items, double threshold);

/// Published human-evaluation figures, kept for side-by-side printing.
namespace reference {

struct AccuracyRow {
  const char* method;
  const char* llm;
  const char* vqa;
  double recipes;
  double wikihow;
};

inline constexpr AccuracyRow kConsistencyAccuracy[] = {
    {"CLIPScore", "n/a", "n/a", 57.4, 53.8},
    {"TIFA", "GPT-3.5", "mPLUG", 72.5, 64.9},
    {"NL2VI", "PaLM", "OFA", 78.4, 73.6},
    {"NL2VI", "GPT-3.5", "PaLI", 80.3, 76.0},
};

struct PromptAlignmentRow {
  const char* llm;
  double recipes_auc;
  double recipes_p_at_1;
  double wikihow_auc;
  double wikihow_p_at_1;
};

inline constexpr PromptAlignmentRow kPromptAlignment[] = {
    {"PaLM", 82.5, 42.0, 90.2, 56.0},
    {"GPT-3.5", 92.8, 74.0, 94.9, 80.0},
};

}  // namespace reference

}  // namespace nl2vi
