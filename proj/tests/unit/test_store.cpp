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

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "nl2vi/errors.hpp"
#include "nl2vi/store.hpp"
#include "test_support.hpp"

namespace nl2vi {
namespace {

using testing::TempDir;

std::string random_text(std::mt19937& rng) {
  static const std::vector<std::string> words = {"garlic", "bread", "\"quoted\"", "tab\there", "naïve", "a,b",
                                                 "line\nbreak", "", "slash\\", "emoji 🍝"};
  std::string s;
  for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i) s += words[rng() % words.size()] + " ";
  return s;
}

double random_score(std::mt19937& rng) { return quantize_score((rng() % 2000001) / 2000000.0); }

ConsistencyReport random_report(std::mt19937& rng, const std::string& id) {
  ConsistencyReport r;
  r.prompt_id = id;
  r.visual_prompt = {random_text(rng), id, "llm-" + std::to_string(rng() % 3),
                     rng() % 2 ? PromptMode::rewritten : PromptMode::passthrough};
  const int nq = static_cast<int>(rng() % 5);
  for (int i = 0; i < nq; ++i) {
    VerificationQuestion q;
    q.qid = id + ".q" + std::to_string(i + 1);
    q.text = random_text(rng);
    q.expected = rng() % 2 ? "yes" : random_text(rng);
    q.kind = classify_question_kind(q.expected);
    q.status = static_cast<QuestionStatus>(rng() % 3);
    if (q.status != QuestionStatus::generated) q.filter_evidence = FilterEvidence{random_text(rng), random_score(rng), "open_mismatch"};
    r.questions.push_back(q);
  }
  const int ni = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < ni; ++k) {
    ImageVerification iv;
    iv.seed = rng() % 1000000007ULL;
    iv.image_id = make_image_id(id, iv.seed, "t2i");
    iv.score = random_score(rng);
    for (const auto& q : r.questions) {
      iv.verdicts.push_back({q.qid, random_text(rng), static_cast<MatcherKind>(rng() % 3), random_score(rng), rng() % 2 == 0});
    }
    r.per_image.push_back(iv);
    r.ranking.push_back(iv.image_id);
  }
  r.selected = r.ranking.front();
  r.config_digest = sha256_hex(id);
  if (rng() % 2) r.warnings.push_back(random_text(rng));
  return r;
}

ConsistencyReport simple_report(const std::string& id, std::vector<double> scores) {
  ConsistencyReport r;
  r.prompt_id = id;
  r.visual_prompt = {"p " + id, id, "llm", PromptMode::rewritten};
  for (std::size_t k = 0; k < scores.size(); ++k) {
    r.per_image.push_back({id + "-img" + std::to_string(k), k, {}, scores[k]});
    r.ranking.push_back(id + "-img" + std::to_string(k));
  }
  r.selected = r.ranking.front();
  return r;
}

// ------------------------------------------------------------------ dataset

TEST(Dataset, ParsesAndSkipsBlankLines) {
  std::istringstream in(
      R"({"id":"r1","domain":"recipes","natural_prompt":"Soup."})"
      "\n\n"
      R"({"id":"w1","domain":"wikihow","natural_prompt":"Tie a knot.","visual_prompt":"A knot.","questions":[{"text":"is there rope?","expected":"yes"}]})"
      "\n");
  const auto records = parse_dataset(in);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].domain, Domain::recipes);
  EXPECT_FALSE(records[0].visual_prompt);
  EXPECT_EQ(*records[1].visual_prompt, "A knot.");
  EXPECT_EQ(records[1].questions->at(0).expected, "yes");
  std::istringstream again(dataset_to_jsonl(records));
  EXPECT_EQ(parse_dataset(again), records);
}

TEST(Dataset, SchemaErrorNamesLineAndField) {
  std::istringstream in(
      R"({"id":"r1","domain":"recipes","natural_prompt":"Soup."})"
      "\n"
      R"({"id":"r2","domain":"cooking","natural_prompt":"Stew."})"
      "\n");
  try {
    parse_dataset(in);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line_no(), 2u);
    EXPECT_EQ(e.field(), "domain");
  }
  std::istringstream missing(R"({"id":"r1","domain":"recipes"})");
  try {
    parse_dataset(missing);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line_no(), 1u);
    EXPECT_EQ(e.field(), "natural_prompt");
  }
  std::istringstream garbage("{not json\n");
  EXPECT_THROW(parse_dataset(garbage), SchemaError);
}

TEST(Dataset, DuplicateIdListsEveryLine) {
  std::istringstream in(
      R"({"id":"a","domain":"recipes","natural_prompt":"x"})"
      "\n"
      R"({"id":"b","domain":"recipes","natural_prompt":"x"})"
      "\n"
      R"({"id":"a","domain":"wikihow","natural_prompt":"y"})"
      "\n");
  try {
    parse_dataset(in);
    FAIL();
  } catch (const DuplicateId& e) {
    EXPECT_EQ(e.id(), "a");
    EXPECT_EQ(e.lines(), (std::vector<std::size_t>{1, 3}));
  }
}

TEST(Dataset, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset("/nonexistent/dataset.jsonl"), IoError);
}

// ------------------------------------------------------------------ reports

TEST(Reports, RoundTripProperty) {
  std::mt19937 rng(99);
  for (int t = 0; t < 200; ++t) {
    const auto r = random_report(rng, "p" + std::to_string(t));
    const std::string text = serialize_report(r);
    const auto back = parse_report(text);
    EXPECT_EQ(back, r);
    EXPECT_EQ(serialize_report(back), text);
  }
}

TEST(Reports, QuantizedScoresSurviveTextExactly) {
  std::mt19937 rng(5);
  for (int t = 0; t < 1000; ++t) {
    const double s = random_score(rng);
    const double back = std::stod(format_fixed6(s));
    EXPECT_EQ(back, s);
  }
}

TEST(Reports, CanonicalLayout) {
  const auto text = serialize_report(simple_report("r01", {0.8}));
  EXPECT_NE(text.find("\"score\": 0.800000"), std::string::npos);
  EXPECT_NE(text.find("\"schema_version\": 1"), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_LT(text.find("\"config_digest\""), text.find("\"per_image\""));
}

TEST(Reports, VersionMismatch) {
  Json j = to_json(simple_report("r01", {1.0}));
  j["schema_version"] = 2;
  EXPECT_THROW(report_from_json(j), VersionMismatch);
  j.erase("schema_version");
  EXPECT_THROW(report_from_json(j), VersionMismatch);
  EXPECT_THROW(parse_report("{oops"), IoError);
}

TEST(Reports, SaveLoadList) {
  TempDir dir;
  for (const char* id : {"w02", "r01", "r10"}) save_report(simple_report(id, {0.5, 1.0}), dir.path());
  EXPECT_EQ(list_reports(dir.path()), (std::vector<std::string>{"r01", "r10", "w02"}));
  EXPECT_TRUE(has_report(dir.path(), "r01"));
  EXPECT_FALSE(has_report(dir.path(), "r02"));
  EXPECT_EQ(load_report("r10", dir.path()), simple_report("r10", {0.5, 1.0}));
  EXPECT_THROW(load_report("r02", dir.path()), IoError);
  for (const auto& e : std::filesystem::directory_iterator(dir.path() / "reports")) {
    EXPECT_EQ(e.path().extension(), ".json") << "stray temp file " << e.path();
  }
}

// -------------------------------------------------------------- annotations

class AnnotationFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    save_report(simple_report("r01", {1.0, 0.5}), dir.path());
    save_report(simple_report("r02", {0.25}), dir.path());
  }
  TempDir dir;
};

TEST_F(AnnotationFixture, SeedIsIdempotent) {
  AnnotationStore store(dir.path());
  EXPECT_EQ(store.seed_tasks_from_reports(), 2u);
  EXPECT_EQ(store.seed_tasks_from_reports(), 0u);
  EXPECT_EQ(store.tasks()[0].image_ids, (std::vector<std::string>{"r01-img0", "r01-img1"}));
}

TEST_F(AnnotationFixture, StickyAssignmentAndCompletion) {
  AnnotationStore store(dir.path());
  store.seed_tasks_from_reports();
  const auto t1 = store.next_task("alice");
  ASSERT_TRUE(t1);
  EXPECT_EQ(t1->prompt_id, "r01");
  EXPECT_EQ(store.next_task("alice")->task_id, t1->task_id);
  EXPECT_EQ(store.next_task("bob")->prompt_id, "r02");
  EXPECT_FALSE(store.next_task("carol"));

  store.record_annotation({"r01", "r01-img0", "alice", 5, ""});
  EXPECT_EQ(store.task(t1->task_id)->state, TaskState::assigned);
  const auto rec = store.record_annotation({"r01", "r01-img1", "alice", 2, ""});
  EXPECT_EQ(rec.timestamp.back(), 'Z');
  EXPECT_EQ(store.task(t1->task_id)->state, TaskState::done);
  EXPECT_FALSE(store.next_task("alice"));

  AnnotationStore reloaded(dir.path());
  EXPECT_EQ(reloaded.annotations().size(), 2u);
  EXPECT_EQ(reloaded.task(t1->task_id)->state, TaskState::done);
  EXPECT_EQ(reloaded.next_task("bob")->prompt_id, "r02");
}

TEST_F(AnnotationFixture, RatingChecks) {
  AnnotationStore store(dir.path());
  store.seed_tasks_from_reports();
  store.next_task("alice");
  EXPECT_THROW(store.record_annotation({"r01", "r01-img0", "alice", 6, ""}), InvalidRating);
  EXPECT_THROW(store.record_annotation({"r01", "r01-img0", "alice", 0, ""}), InvalidRating);
  EXPECT_THROW(store.record_annotation({"r02", "r02-img0", "alice", 3, ""}), NotAssigned);
  EXPECT_THROW(store.record_annotation({"r01", "r01-img0", "bob", 3, ""}), NotAssigned);
  store.record_annotation({"r01", "r01-img0", "alice", 3, ""});
  EXPECT_THROW(store.record_annotation({"r01", "r01-img0", "alice", 4, ""}), DuplicateAnnotation);
  EXPECT_EQ(store.annotations().size(), 1u);
}

TEST_F(AnnotationFixture, ReplicasGoToDistinctRaters) {
  AnnotationStore store(dir.path());
  EXPECT_EQ(store.seed_tasks_from_reports(2), 4u);
  const auto a = store.next_task("alice");
  store.record_annotation({"r01", "r01-img0", "alice", 3, ""});
  store.record_annotation({"r01", "r01-img1", "alice", 3, ""});
  // The second r01 replica is skipped for alice.
  EXPECT_EQ(store.next_task("alice")->prompt_id, "r02");
  EXPECT_EQ(store.next_task("bob")->task_id, "r01#2");
  EXPECT_EQ(a->task_id, "r01#1");
}

TEST(AnnotationStore, ConcurrentNextTaskHandsOutDistinctTasks) {
  TempDir dir;
  for (int i = 0; i < 40; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "p%02d", i);
    save_report(simple_report(id, {1.0}), dir.path());
  }
  AnnotationStore store(dir.path());
  store.seed_tasks_from_reports();
  std::vector<std::string> got(16);
  std::vector<std::thread> threads;
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&, i] { got[i] = store.next_task("rater" + std::to_string(i))->task_id; });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), 16u);
}

// ------------------------------------------------------------------- export

TEST_F(AnnotationFixture, ExportJoinsScoresAndLabels) {
  const std::vector<AnnotationRecord> log = {
      {"r02", "r02-img0", "bob", 2, "2026-01-01T00:00:01.000Z"},
      {"r01", "r01-img1", "alice", 4, "2026-01-01T00:00:02.000Z"},
      {"r01", "r01-img0", "alice", 5, "2026-01-01T00:00:03.000Z"},
  };
  std::ofstream(annotation_log_path(dir.path())) << annotations_to_jsonl(log);
  const auto rows = export_annotations(dir.path());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (ExportRow{"r01", "r01-img0", "alice", 5, 1.0, true}));
  EXPECT_EQ(rows[1], (ExportRow{"r01", "r01-img1", "alice", 4, 0.5, true}));
  EXPECT_EQ(rows[2], (ExportRow{"r02", "r02-img0", "bob", 2, 0.25, false}));
  EXPECT_EQ(export_annotations(dir.path(), {5, false})[1].label, false);

  const auto scores = to_labeled_scores(rows);
  EXPECT_EQ(scores[0].item_id, "r01/r01-img0/alice");
  EXPECT_EQ(scores[2].predicted, 0.25);
}

TEST_F(AnnotationFixture, LatestWinsKeepsNewestRating) {
  const std::vector<AnnotationRecord> log = {
      {"r01", "r01-img0", "alice", 1, "2026-01-01T00:00:05.000Z"},
      {"r01", "r01-img0", "alice", 5, "2026-01-01T00:00:01.000Z"},
  };
  std::ofstream(annotation_log_path(dir.path())) << annotations_to_jsonl(log);
  EXPECT_EQ(export_annotations(dir.path()).size(), 2u);
  const auto rows = export_annotations(dir.path(), {4, true});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].rating, 1);
}

TEST_F(AnnotationFixture, ExportMissingReportOrImage) {
  std::ofstream(annotation_log_path(dir.path())) << annotations_to_jsonl(
      std::vector<AnnotationRecord>{{"r09", "x", "alice", 3, "2026-01-01T00:00:00.000Z"}});
  EXPECT_THROW(export_annotations(dir.path()), IoError);
  std::ofstream(annotation_log_path(dir.path())) << annotations_to_jsonl(
      std::vector<AnnotationRecord>{{"r01", "nope", "alice", 3, "2026-01-01T00:00:00.000Z"}});
  EXPECT_THROW(export_annotations(dir.path()), IoError);
}

TEST(ExportCsv, RoundTripWithQuoting) {
  const std::vector<ExportRow> rows = {{"r01", "img-1", "o'neil, \"the\" rater", 5, 0.8, true},
                                       {"r02", "img-2", "bob", 1, 0.0, false}};
  const std::string csv = export_to_csv(rows);
  EXPECT_EQ(csv.substr(0, kExportHeader.size()), kExportHeader);
  EXPECT_NE(csv.find("\"o'neil, \"\"the\"\" rater\""), std::string::npos);
  EXPECT_NE(csv.find(",0.800000,1"), std::string::npos);
  EXPECT_EQ(parse_export_csv(csv), rows);
  EXPECT_THROW(parse_export_csv("a,b\n"), IoError);
  EXPECT_THROW(parse_export_csv(std::string(kExportHeader) + "\nr01,img,x,5\n"), IoError);
}

TEST(AtomicWrite, ReplacesWholeFile) {
  TempDir dir;
  const auto path = dir / "sub/file.txt";
  write_text_atomic(path, "first version, longer");
  write_text_atomic(path, "second");
  EXPECT_EQ(read_text(path), "second");
}

}  // namespace
}  // namespace nl2vi
