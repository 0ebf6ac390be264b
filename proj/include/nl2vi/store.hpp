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

// Persistence: datasets, consistency reports, the annotation task queue and
// log, and the labeled-score export consumed by the metrics.

#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vi/canonical.hpp"
#include "nl2vi/metrics.hpp"
#include "nl2vi/model.hpp"

namespace nl2vi {

// ------------------------------------------------------------------ dataset

struct DatasetQuestion {
  std::string text;
  std::string expected;

  bool operator==(const DatasetQuestion&) const = default;
};

struct DatasetRecord {
  std::string id;
  Domain domain = Domain::other;
  std::string natural_prompt;
  std::optional<std::string> visual_prompt;
  std::optional<std::vector<DatasetQuestion>> questions;

  NaturalPromptRecord natural() const { return {id, domain, natural_prompt}; }
  bool operator==(const DatasetRecord&) const = default;
};

Json to_json(const DatasetRecord& r);
/// Throws SchemaError naming `line_no`.
DatasetRecord dataset_record_from_json(const Json& j, std::size_t line_no = 0);

/// One JSON object per line. Blank lines are skipped. Throws SchemaError,
/// DuplicateId (listing every line that carries the id) or IoError.
std::vector<DatasetRecord> parse_dataset(std::istream& in);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);
std::string dataset_to_jsonl(std::span<const DatasetRecord> records);
void save_dataset(std::span<const DatasetRecord> records, const std::filesystem::path& path);

// ------------------------------------------------------------------ reports

inline constexpr int kReportSchemaVersion = 1;

Json to_json(const VisualPrompt& vp);
Json to_json(const VerificationQuestion& q);
Json to_json(const GeneratedImage& image);
Json to_json(const ConsistencyReport& report);
VisualPrompt visual_prompt_from_json(const Json& j);
VerificationQuestion question_from_json(const Json& j);
GeneratedImage image_from_json(const Json& j);
/// Throws VersionMismatch when schema_version is not kReportSchemaVersion.
ConsistencyReport report_from_json(const Json& j);

/// Canonical text: sorted keys, six fractional digits, two-space indent.
std::string serialize_report(const ConsistencyReport& report);
ConsistencyReport parse_report(std::string_view text);

std::filesystem::path report_path(const std::filesystem::path& root, std::string_view prompt_id);
void save_report(const ConsistencyReport& report, const std::filesystem::path& root);
ConsistencyReport load_report(std::string_view prompt_id, const std::filesystem::path& root);
bool has_report(const std::filesystem::path& root, std::string_view prompt_id);
/// Prompt ids with a report under root, sorted.
std::vector<std::string> list_reports(const std::filesystem::path& root);

/// Whole-file atomic replace (write to a sibling temp file, then rename).
void write_text_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_text(const std::filesystem::path& path);

// -------------------------------------------------------------- annotations

enum class TaskState { open, assigned, done };
std::string_view to_string(TaskState s) noexcept;
TaskState parse_task_state(std::string_view s);

struct AnnotationTask {
  std::string task_id;
  std::string prompt_id;
  std::vector<std::string> image_ids;
  std::optional<std::string> assigned_to;
  TaskState state = TaskState::open;

  bool operator==(const AnnotationTask&) const = default;
};

Json to_json(const AnnotationRecord& a);
AnnotationRecord annotation_from_json(const Json& j);
Json to_json(const AnnotationTask& t);
AnnotationTask task_from_json(const Json& j);

std::string utc_now_iso8601();

/// Task queue ({root}/tasks.json) and append-only rating log
/// ({root}/annotations.log). All mutations go through one mutex.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path root);

  /// One task per report that has none yet (`replicas` tasks per prompt for
  /// multi-rater collection). Returns the number of tasks added.
  std::size_t seed_tasks_from_reports(int replicas = 1);
  void add_task(AnnotationTask task);

  /// Sticky: a rater with an unfinished task gets it back. Otherwise the
  /// oldest open task for a prompt the rater has not had yet is assigned.
  std::optional<AnnotationTask> next_task(const std::string& rater_id);

  /// Throws InvalidRating, DuplicateAnnotation or NotAssigned. Fills an
  /// empty timestamp with the current UTC time.
  AnnotationRecord record_annotation(AnnotationRecord record);

  std::vector<AnnotationTask> tasks() const;
  std::optional<AnnotationTask> task(std::string_view task_id) const;
  std::vector<AnnotationRecord> annotations() const;
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  void persist_tasks_locked() const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::vector<AnnotationTask> tasks_;
  std::vector<AnnotationRecord> annotations_;
};

std::filesystem::path annotation_log_path(const std::filesystem::path& root);
std::vector<AnnotationRecord> load_annotation_log(const std::filesystem::path& path);
std::string annotations_to_jsonl(std::span<const AnnotationRecord> records);

// ------------------------------------------------------------------- export

struct ExportRow {
  std::string prompt_id;
  std::string image_id;
  std::string rater_id;
  int rating = 0;
  double score = 0.0;
  bool label = false;

  bool operator==(const ExportRow&) const = default;
};

struct ExportOptions {
  int label_cut = 4;
  /// Keep only the latest-timestamped rating per (prompt, image, rater).
  bool latest_wins = false;
};

inline constexpr std::string_view kExportHeader = "prompt_id,image_id,rater_id,rating,score,label";

/// Joins the rating log with report scores, ordered by
/// (prompt_id, image_id, rater_id). Throws IoError for a rating whose report
/// or image is missing.
std::vector<ExportRow> export_annotations(const std::filesystem::path& root, const ExportOptions& options = {});
std::string export_to_csv(std::span<const ExportRow> rows);
std::vector<ExportRow> parse_export_csv(std::string_view csv);
std::vector<LabeledScore> to_labeled_scores(std::span<const ExportRow> rows);

}  // namespace nl2vi
