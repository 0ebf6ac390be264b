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

#include "nl2vi/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "nl2vi/errors.hpp"
#include "text_util.hpp"

namespace nl2vi {

namespace fs = std::filesystem;

// ------------------------------------------------------------------- files

void write_text_atomic(const fs::path& path, std::string_view bytes) {
  static std::atomic<unsigned long> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1)) + "-" +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot replace " + path.string());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ----------------------------------------------------------------- dataset

namespace {

std::string required_string(const Json& j, const char* field, std::size_t line_no, bool non_empty = true) {
  if (!j.contains(field)) throw SchemaError(line_no, field, "missing");
  const Json& v = j.at(field);
  if (!v.is_string()) throw SchemaError(line_no, field, "not a string");
  std::string s = v.get<std::string>();
  if (non_empty && text::trim(s).empty()) throw SchemaError(line_no, field, "empty");
  return s;
}

}  // namespace

DatasetRecord dataset_record_from_json(const Json& j, std::size_t line_no) {
  if (!j.is_object()) throw SchemaError(line_no, "<record>", "not a JSON object");
  DatasetRecord r;
  r.id = required_string(j, "id", line_no);
  try {
    r.domain = parse_domain(required_string(j, "domain", line_no));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(line_no, "domain", e.what());
  }
  r.natural_prompt = required_string(j, "natural_prompt", line_no);
  if (j.contains("visual_prompt") && !j.at("visual_prompt").is_null()) {
    r.visual_prompt = required_string(j, "visual_prompt", line_no);
  }
  if (j.contains("questions") && !j.at("questions").is_null()) {
    const Json& qs = j.at("questions");
    if (!qs.is_array()) throw SchemaError(line_no, "questions", "not an array");
    std::vector<DatasetQuestion> questions;
    for (const Json& q : qs) {
      if (!q.is_object()) throw SchemaError(line_no, "questions", "entry is not an object");
      questions.push_back({required_string(q, "text", line_no), required_string(q, "expected", line_no)});
    }
    r.questions = std::move(questions);
  }
  return r;
}

Json to_json(const DatasetRecord& r) {
  Json j{{"id", r.id}, {"domain", std::string(to_string(r.domain))}, {"natural_prompt", r.natural_prompt}};
  if (r.visual_prompt) j["visual_prompt"] = *r.visual_prompt;
  if (r.questions) {
    Json qs = Json::array();
    for (const auto& q : *r.questions) qs.push_back(Json{{"text", q.text}, {"expected", q.expected}});
    j["questions"] = std::move(qs);
  }
  return j;
}

std::vector<DatasetRecord> parse_dataset(std::istream& in) {
  std::vector<DatasetRecord> records;
  std::map<std::string, std::vector<std::size_t>> lines_by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw SchemaError(line_no, "<record>", std::string("invalid JSON: ") + e.what());
    }
    records.push_back(dataset_record_from_json(j, line_no));
    lines_by_id[records.back().id].push_back(line_no);
  }
  for (const auto& r : records) {
    const auto& lines = lines_by_id[r.id];
    if (lines.size() > 1) throw DuplicateId(r.id, lines);
  }
  return records;
}

std::vector<DatasetRecord> load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return parse_dataset(in);
}

std::string dataset_to_jsonl(std::span<const DatasetRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += canonical_dump(to_json(r));
    out.push_back('\n');
  }
  return out;
}

void save_dataset(std::span<const DatasetRecord> records, const fs::path& path) {
  write_text_atomic(path, dataset_to_jsonl(records));
}

// ----------------------------------------------------------------- reports

Json to_json(const VisualPrompt& vp) {
  return Json{{"text", vp.text},
              {"source_id", vp.source_id},
              {"generator", vp.generator},
              {"mode", std::string(to_string(vp.mode))}};
}

VisualPrompt visual_prompt_from_json(const Json& j) {
  return VisualPrompt{j.at("text").get<std::string>(), j.at("source_id").get<std::string>(),
                      j.at("generator").get<std::string>(), parse_prompt_mode(j.at("mode").get<std::string>())};
}

Json to_json(const VerificationQuestion& q) {
  Json j{{"qid", q.qid},
         {"text", q.text},
         {"expected", q.expected},
         {"kind", std::string(to_string(q.kind))},
         {"status", std::string(to_string(q.status))}};
  if (q.filter_evidence) {
    j["filter_evidence"] = Json{{"qa_answer", q.filter_evidence->qa_answer},
                                {"entail_prob", q.filter_evidence->entail_prob},
                                {"rule_fired", q.filter_evidence->rule_fired}};
  }
  return j;
}

VerificationQuestion question_from_json(const Json& j) {
  VerificationQuestion q;
  q.qid = j.at("qid").get<std::string>();
  q.text = j.at("text").get<std::string>();
  q.expected = j.at("expected").get<std::string>();
  q.kind = parse_question_kind(j.at("kind").get<std::string>());
  q.status = parse_question_status(j.at("status").get<std::string>());
  if (j.contains("filter_evidence") && !j.at("filter_evidence").is_null()) {
    const Json& e = j.at("filter_evidence");
    q.filter_evidence = FilterEvidence{e.at("qa_answer").get<std::string>(), e.at("entail_prob").get<double>(),
                                       e.at("rule_fired").get<std::string>()};
  }
  return q;
}

Json to_json(const GeneratedImage& image) {
  return Json{{"image_id", image.image_id},
              {"prompt_id", image.prompt_id},
              {"seed", image.seed},
              {"backend", image.backend},
              {"content_ref", image.content_ref}};
}

GeneratedImage image_from_json(const Json& j) {
  return GeneratedImage{j.at("image_id").get<std::string>(), j.at("prompt_id").get<std::string>(),
                        j.at("seed").get<std::uint64_t>(), j.at("backend").get<std::string>(),
                        j.at("content_ref").get<std::string>()};
}

Json to_json(const ConsistencyReport& report) {
  Json questions = Json::array();
  for (const auto& q : report.questions) questions.push_back(to_json(q));
  Json per_image = Json::array();
  for (const auto& img : report.per_image) {
    Json verdicts = Json::array();
    for (const auto& v : img.verdicts) {
      verdicts.push_back(Json{{"qid", v.qid},
                              {"vqa_answer", v.vqa_answer},
                              {"matcher", std::string(to_string(v.matcher))},
                              {"match_score", v.match_score},
                              {"passed", v.passed}});
    }
    per_image.push_back(
        Json{{"image_id", img.image_id}, {"seed", img.seed}, {"score", img.score}, {"verdicts", std::move(verdicts)}});
  }
  return Json{{"schema_version", kReportSchemaVersion},
              {"prompt_id", report.prompt_id},
              {"visual_prompt", to_json(report.visual_prompt)},
              {"questions", std::move(questions)},
              {"per_image", std::move(per_image)},
              {"ranking", report.ranking},
              {"selected", report.selected},
              {"config_digest", report.config_digest},
              {"warnings", report.warnings}};
}

ConsistencyReport report_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("schema_version")) throw VersionMismatch("report has no schema_version");
  const Json& version = j.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kReportSchemaVersion) {
    throw VersionMismatch("unsupported report schema_version " + version.dump());
  }
  ConsistencyReport r;
  r.prompt_id = j.at("prompt_id").get<std::string>();
  r.visual_prompt = visual_prompt_from_json(j.at("visual_prompt"));
  for (const Json& q : j.at("questions")) r.questions.push_back(question_from_json(q));
  for (const Json& img : j.at("per_image")) {
    ImageVerification iv;
    iv.image_id = img.at("image_id").get<std::string>();
    iv.seed = img.at("seed").get<std::uint64_t>();
    iv.score = img.at("score").get<double>();
    for (const Json& v : img.at("verdicts")) {
      iv.verdicts.push_back(QuestionVerdict{v.at("qid").get<std::string>(), v.at("vqa_answer").get<std::string>(),
                                            parse_matcher_kind(v.at("matcher").get<std::string>()),
                                            v.at("match_score").get<double>(), v.at("passed").get<bool>()});
    }
    r.per_image.push_back(std::move(iv));
  }
  r.ranking = j.at("ranking").get<std::vector<std::string>>();
  r.selected = j.at("selected").get<std::string>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

std::string serialize_report(const ConsistencyReport& report) { return canonical_dump(to_json(report), 2) + "\n"; }

ConsistencyReport parse_report(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    return report_from_json(j);
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
}

fs::path report_path(const fs::path& root, std::string_view prompt_id) {
  return root / "reports" / (std::string(prompt_id) + ".json");
}

void save_report(const ConsistencyReport& report, const fs::path& root) {
  write_text_atomic(report_path(root, report.prompt_id), serialize_report(report));
}

ConsistencyReport load_report(std::string_view prompt_id, const fs::path& root) {
  return parse_report(read_text(report_path(root, prompt_id)));
}

bool has_report(const fs::path& root, std::string_view prompt_id) {
  std::error_code ec;
  return fs::exists(report_path(root, prompt_id), ec);
}

std::vector<std::string> list_reports(const fs::path& root) {
  std::vector<std::string> ids;
  std::error_code ec;
  const fs::path dir = root / "reports";
  if (!fs::is_directory(dir, ec)) return ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ------------------------------------------------------------- annotations

std::string_view to_string(TaskState s) noexcept {
  switch (s) {
    case TaskState::open: return "open";
    case TaskState::assigned: return "assigned";
    case TaskState::done: return "done";
  }
  return "?";
}

TaskState parse_task_state(std::string_view s) {
  if (s == "open") return TaskState::open;
  if (s == "assigned") return TaskState::assigned;
  if (s == "done") return TaskState::done;
  throw std::invalid_argument("unknown task state '" + std::string(s) + "'");
}

Json to_json(const AnnotationRecord& a) {
  return Json{{"prompt_id", a.prompt_id},
              {"image_id", a.image_id},
              {"rater_id", a.rater_id},
              {"rating", a.rating},
              {"timestamp", a.timestamp}};
}

AnnotationRecord annotation_from_json(const Json& j) {
  return AnnotationRecord{j.at("prompt_id").get<std::string>(), j.at("image_id").get<std::string>(),
                          j.at("rater_id").get<std::string>(), j.at("rating").get<int>(),
                          j.at("timestamp").get<std::string>()};
}

Json to_json(const AnnotationTask& t) {
  Json j{{"task_id", t.task_id},
         {"prompt_id", t.prompt_id},
         {"image_ids", t.image_ids},
         {"state", std::string(to_string(t.state))}};
  j["assigned_to"] = t.assigned_to ? Json(*t.assigned_to) : Json(nullptr);
  return j;
}

AnnotationTask task_from_json(const Json& j) {
  AnnotationTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.prompt_id = j.at("prompt_id").get<std::string>();
  t.image_ids = j.at("image_ids").get<std::vector<std::string>>();
  t.state = parse_task_state(j.at("state").get<std::string>());
  if (j.contains("assigned_to") && !j.at("assigned_to").is_null()) t.assigned_to = j.at("assigned_to").get<std::string>();
  return t;
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(millis));
  return buf;
}

fs::path annotation_log_path(const fs::path& root) { return root / "annotations.log"; }

std::vector<AnnotationRecord> load_annotation_log(const fs::path& path) {
  std::vector<AnnotationRecord> out;
  std::error_code ec;
  if (!fs::exists(path, ec)) return out;
  std::ifstream in(path);
  if (!in) throw StorageError("cannot read " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(annotation_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw StorageError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string annotations_to_jsonl(std::span<const AnnotationRecord> records) {
  std::string out;
  for (const auto& a : records) {
    out += canonical_dump(to_json(a));
    out.push_back('\n');
  }
  return out;
}

AnnotationStore::AnnotationStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  const fs::path tasks_file = root_ / "tasks.json";
  if (fs::exists(tasks_file, ec)) {
    try {
      for (const Json& t : Json::parse(read_text(tasks_file))) tasks_.push_back(task_from_json(t));
    } catch (const Json::exception& e) {
      throw StorageError("corrupt " + tasks_file.string() + ": " + e.what());
    }
  }
  annotations_ = load_annotation_log(annotation_log_path(root_));
}

void AnnotationStore::persist_tasks_locked() const {
  Json arr = Json::array();
  for (const auto& t : tasks_) arr.push_back(to_json(t));
  try {
    write_text_atomic(root_ / "tasks.json", canonical_dump(arr, 2) + "\n");
  } catch (const IoError& e) {
    throw StorageError(e.what());
  }
}

std::size_t AnnotationStore::seed_tasks_from_reports(int replicas) {
  if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  std::lock_guard lock(mutex_);
  std::size_t added = 0;
  for (const auto& prompt_id : list_reports(root_)) {
    const bool exists = std::any_of(tasks_.begin(), tasks_.end(),
                                    [&](const AnnotationTask& t) { return t.prompt_id == prompt_id; });
    if (exists) continue;
    const ConsistencyReport report = load_report(prompt_id, root_);
    std::vector<std::string> images;
    for (const auto& img : report.per_image) images.push_back(img.image_id);
    for (int r = 0; r < replicas; ++r) {
      AnnotationTask t;
      t.task_id = replicas == 1 ? prompt_id : prompt_id + "#" + std::to_string(r + 1);
      t.prompt_id = prompt_id;
      t.image_ids = images;
      tasks_.push_back(std::move(t));
      ++added;
    }
  }
  if (added) persist_tasks_locked();
  return added;
}

void AnnotationStore::add_task(AnnotationTask task) {
  std::lock_guard lock(mutex_);
  for (const auto& t : tasks_) {
    if (t.task_id == task.task_id) throw StorageError("duplicate task id " + task.task_id);
  }
  task.state = TaskState::open;
  task.assigned_to.reset();
  tasks_.push_back(std::move(task));
  persist_tasks_locked();
}

std::optional<AnnotationTask> AnnotationStore::next_task(const std::string& rater_id) {
  std::lock_guard lock(mutex_);
  for (const auto& t : tasks_) {
    if (t.state == TaskState::assigned && t.assigned_to == rater_id) return t;
  }
  for (auto& t : tasks_) {
    if (t.state != TaskState::open) continue;
    // One replica per prompt per rater.
    const bool rated_before = std::any_of(tasks_.begin(), tasks_.end(), [&](const AnnotationTask& o) {
      return o.prompt_id == t.prompt_id && o.assigned_to == rater_id;
    });
    if (rated_before) continue;
    t.state = TaskState::assigned;
    t.assigned_to = rater_id;
    persist_tasks_locked();
    return t;
  }
  return std::nullopt;
}

AnnotationRecord AnnotationStore::record_annotation(AnnotationRecord record) {
  if (record.rating < kMinRating || record.rating > kMaxRating) {
    throw InvalidRating("rating " + std::to_string(record.rating) + " is outside 1..5");
  }
  std::lock_guard lock(mutex_);
  for (const auto& a : annotations_) {
    if (a.prompt_id == record.prompt_id && a.image_id == record.image_id && a.rater_id == record.rater_id) {
      throw DuplicateAnnotation("rater " + record.rater_id + " already rated " + record.image_id);
    }
  }
  auto task = std::find_if(tasks_.begin(), tasks_.end(), [&](const AnnotationTask& t) {
    return t.state == TaskState::assigned && t.assigned_to == record.rater_id && t.prompt_id == record.prompt_id &&
           std::find(t.image_ids.begin(), t.image_ids.end(), record.image_id) != t.image_ids.end();
  });
  if (task == tasks_.end()) {
    throw NotAssigned("no task for prompt " + record.prompt_id + " image " + record.image_id +
                      " is assigned to " + record.rater_id);
  }
  if (record.timestamp.empty()) record.timestamp = utc_now_iso8601();

  {
    std::ofstream out(annotation_log_path(root_), std::ios::app | std::ios::binary);
    if (!out) throw StorageError("cannot append to " + annotation_log_path(root_).string());
    out << canonical_dump(to_json(record)) << '\n';
    out.flush();
    if (!out) throw StorageError("append failed for " + annotation_log_path(root_).string());
  }
  annotations_.push_back(record);

  const bool complete = std::all_of(task->image_ids.begin(), task->image_ids.end(), [&](const std::string& img) {
    return std::any_of(annotations_.begin(), annotations_.end(), [&](const AnnotationRecord& a) {
      return a.prompt_id == task->prompt_id && a.image_id == img && a.rater_id == record.rater_id;
    });
  });
  if (complete) {
    task->state = TaskState::done;
    persist_tasks_locked();
  }
  return record;
}

std::vector<AnnotationTask> AnnotationStore::tasks() const {
  std::lock_guard lock(mutex_);
  return tasks_;
}

std::optional<AnnotationTask> AnnotationStore::task(std::string_view task_id) const {
  std::lock_guard lock(mutex_);
  for (const auto& t : tasks_) {
    if (t.task_id == task_id) return t;
  }
  return std::nullopt;
}

std::vector<AnnotationRecord> AnnotationStore::annotations() const {
  std::lock_guard lock(mutex_);
  return annotations_;
}

// ------------------------------------------------------------------ export

std::vector<ExportRow> export_annotations(const fs::path& root, const ExportOptions& options) {
  std::vector<AnnotationRecord> log = load_annotation_log(annotation_log_path(root));
  if (options.latest_wins) {
    std::map<std::tuple<std::string, std::string, std::string>, AnnotationRecord> latest;
    for (const auto& a : log) {
      auto key = std::make_tuple(a.prompt_id, a.image_id, a.rater_id);
      auto it = latest.find(key);
      if (it == latest.end() || a.timestamp >= it->second.timestamp) latest[key] = a;
    }
    log.clear();
    for (auto& [_, a] : latest) log.push_back(std::move(a));
  }

  std::map<std::string, ConsistencyReport> reports;
  std::vector<ExportRow> rows;
  for (const auto& a : log) {
    auto it = reports.find(a.prompt_id);
    if (it == reports.end()) {
      if (!has_report(root, a.prompt_id)) throw IoError("no report for annotated prompt " + a.prompt_id);
      it = reports.emplace(a.prompt_id, load_report(a.prompt_id, root)).first;
    }
    const auto& per_image = it->second.per_image;
    auto img = std::find_if(per_image.begin(), per_image.end(),
                            [&](const ImageVerification& iv) { return iv.image_id == a.image_id; });
    if (img == per_image.end()) throw IoError("report " + a.prompt_id + " has no image " + a.image_id);
    rows.push_back({a.prompt_id, a.image_id, a.rater_id, a.rating, img->score,
                    rating_is_consistent(a.rating, options.label_cut)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ExportRow& x, const ExportRow& y) {
    return std::tie(x.prompt_id, x.image_id, x.rater_id) < std::tie(y.prompt_id, y.image_id, y.rater_id);
  });
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char c = csv[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < csv.size() && csv[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw IoError("unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string export_to_csv(std::span<const ExportRow> rows) {
  std::string out(kExportHeader);
  out.push_back('\n');
  for (const auto& r : rows) {
    out += csv_field(r.prompt_id) + "," + csv_field(r.image_id) + "," + csv_field(r.rater_id) + "," +
           std::to_string(r.rating) + "," + format_fixed6(r.score) + "," + (r.label ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<ExportRow> parse_export_csv(std::string_view csv) {
  const auto rows = parse_csv(csv);
  if (rows.empty()) throw IoError("export CSV is empty");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kExportHeader) throw IoError("unexpected export header: " + header);
  std::vector<ExportRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 6) throw IoError("export row " + std::to_string(i + 1) + " has " + std::to_string(f.size()) + " fields");
    try {
      ExportRow r{f[0], f[1], f[2], std::stoi(f[3]), std::stod(f[4]), f[5] == "1"};
      if (f[5] != "0" && f[5] != "1") throw std::invalid_argument("label");
      out.push_back(std::move(r));
    } catch (const std::exception&) {
      throw IoError("malformed export row " + std::to_string(i + 1));
    }
  }
  return out;
}

std::vector<LabeledScore> to_labeled_scores(std::span<const ExportRow> rows) {
  std::vector<LabeledScore> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    out.push_back({r.prompt_id + "/" + r.image_id + "/" + r.rater_id, r.score, r.label});
  }
  return out;
}

}  // namespace nl2vi
