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

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and time
// budgets are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "filter_counts.hpp"
#include "nl2vi/errors.hpp"
#include "nl2vi/filter.hpp"
#include "nl2vi/metrics.hpp"
#include "nl2vi/pipeline.hpp"
#include "nl2vi/store.hpp"
#include "nl2vi/synthesis.hpp"
#include "nl2vi/verifier.hpp"
#include "test_support.hpp"

namespace {

using namespace nl2vi;
using namespace nl2vi::testing;
namespace fs = std::filesystem;

constexpr double kApTolerance = 1e-9;
constexpr double kTemplateBudgetSec = 1.0;
constexpr double kApBudgetSec = 5.0;
constexpr double kDeterminismBudgetSec = 30.0;
constexpr double kFilterCountBudgetSec = 5.0;
constexpr int kApTrials = 200;
constexpr std::size_t kApMaxItems = 64;
constexpr int kFilterConfigs = 100;

/// Collects the first failed expectation of a criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  int number;
  std::string name;
  double budget_sec;
  std::function<void(Check&)> body;
};

// ------------------------------------------------------------------ helpers

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const char* sub : {"reports", "images"}) {
    if (!fs::exists(root / sub)) continue;
    for (const auto& e : fs::recursive_directory_iterator(root / sub)) {
      if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text(e.path());
    }
  }
  return out;
}

VerificationQuestion make_question(std::string qid, std::string text, std::string expected,
                                   QuestionStatus status = QuestionStatus::generated) {
  VerificationQuestion q;
  q.qid = std::move(qid);
  q.text = std::move(text);
  q.expected = std::move(expected);
  q.kind = classify_question_kind(q.expected);
  q.status = status;
  return q;
}

GeneratedImage make_image(const std::string& prompt_id, std::uint64_t seed) {
  GeneratedImage g;
  g.prompt_id = prompt_id;
  g.seed = seed;
  g.backend = "t2i";
  g.image_id = make_image_id(prompt_id, seed, g.backend);
  g.content_ref = ArtifactStore::content_ref(g.image_id);
  return g;
}

// Rank by pairwise comparison, then precision over the prefix ending at each
// positive.
double brute_force_ap(const std::vector<LabeledScore>& items) {
  auto before = [](const LabeledScore& a, const LabeledScore& b) {
    return a.predicted > b.predicted || (a.predicted == b.predicted && a.item_id < b.item_id);
  };
  double sum = 0.0;
  std::size_t positives = 0;
  for (const auto& it : items) {
    if (!it.label) continue;
    ++positives;
    std::size_t prefix = 1;
    std::size_t prefix_pos = 1;
    for (const auto& other : items) {
      if (&other == &it || !before(other, it)) continue;
      ++prefix;
      prefix_pos += other.label ? 1 : 0;
    }
    sum += static_cast<double>(prefix_pos) / static_cast<double>(prefix);
  }
  return sum / static_cast<double>(positives);
}

// ---------------------------------------------------------------- criteria

void template_round_trip(Check& c) {
  const auto tmpl = InstructionTemplate::load(data_dir() / "templates" / "instruction.txt");
  const std::string completion = read_text(data_dir() / "templates" / "garlic_parmesan_completion.txt");
  const NaturalPromptRecord natural{"r01", Domain::recipes,
                                    "Garlic Parmesan Pasta. A quick weeknight dinner ready in twenty minutes."};
  std::string seen_instruction;
  auto llm = script_backend(Role::text_gen, [&](const Json& req) {
    seen_instruction = req.at("instruction");
    return Json(completion);
  });
  const SynthesisResult r = synthesize(natural, *llm, tmpl);
  c.expect(seen_instruction == render_instruction(tmpl, natural), "backend received the rendered instruction");
  c.expect(seen_instruction.find("Description: \"" + natural.text + "\"") != std::string::npos,
           "rendered instruction ends with the description");
  c.expect(r.visual_prompt.text == "A bowl of garlic parmesan pasta with parmesan cheese and parsley.",
           "visual prompt text: got '" + r.visual_prompt.text + "'");
  c.expect(r.questions.size() == 5, "5 QA pairs: got " + std::to_string(r.questions.size()));
  if (!r.questions.empty()) {
    c.expect(r.questions[0].text == "what is in the bowl?" && r.questions[0].expected == "pasta",
             "first pair (what is in the bowl?, pasta)");
  }
}

void ap_oracle(Check& c) {
  std::mt19937 rng(20240501);
  int done = 0;
  double worst = 0.0;
  while (done < kApTrials) {
    const std::size_t n = 1 + rng() % kApMaxItems;
    std::vector<LabeledScore> items;
    for (std::size_t i = 0; i < n; ++i) {
      items.push_back({"i" + std::to_string(rng() % 100000), (rng() % 11) / 10.0, rng() % 2 == 0});
    }
    if (std::none_of(items.begin(), items.end(), [](const auto& x) { return x.label; })) continue;
    worst = std::max(worst, std::abs(average_precision(items) - brute_force_ap(items)));
    ++done;
  }
  c.expect(worst <= kApTolerance, "max |AP - oracle| = " + std::to_string(worst));
  const std::vector<LabeledScore> hand = {{"a", 0.9, true}, {"b", 0.6, false}, {"c", 0.3, true}};
  const double ap = average_precision(hand);
  c.expect(std::abs(ap - 5.0 / 6.0) <= kApTolerance, "[+,-,+] AP = " + std::to_string(ap));
}

void end_to_end_determinism(Check& c) {
  const auto records = load_dataset(corpus_dataset());
  TempDir a, b, d, failure;
  const RunSummary sa = Pipeline(corpus_config(a.path(), false, 4)).run(records);
  const RunSummary sb = Pipeline(corpus_config(b.path(), false, 4)).run(records);
  Pipeline(corpus_config(d.path(), false, 1)).run(records);
  TempDir e;
  Pipeline(corpus_config(e.path(), false, 8)).run(records);
  const auto ta = read_tree(a.path());
  c.expect(sa.n_succeeded == 20 && sb.n_succeeded == 20, "20 successes per clean run");
  c.expect(ta.size() == 100, "20 reports + 80 images, got " + std::to_string(ta.size()));
  c.expect(ta == read_tree(b.path()), "two runs produce identical trees");
  c.expect(read_tree(d.path()) == read_tree(e.path()), "concurrency 1 and 8 produce identical trees");
  c.expect(ta == read_tree(d.path()), "concurrency 4 matches concurrency 1");

  const RunSummary sf = Pipeline(corpus_config(failure.path(), true, 4)).run(records);
  c.expect(sf.n_succeeded == 19 && sf.n_failed == 1, "failure fixture: 19 successes and 1 failure, got " +
                                                           std::to_string(sf.n_succeeded) + "/" +
                                                           std::to_string(sf.n_failed));
  c.expect(sf.failures.size() == 1 && sf.failures[0].phase == phase::kSynthesis,
           "the recorded failure is in synthesis");
  c.expect(fs::exists(run_summary_path(failure.path(), sf.run_id)), "failure recorded in the run summary");
}

void scoring_oracle(Check& c) {
  BackendSet set;
  auto nli_calls = std::make_shared<std::atomic<int>>(0);
  set.set(script_backend(Role::vqa, [](const Json& req) {
    return Json{{"answer", req.at("question") == "is there butter?" ? "no" : "yes"}};
  }));
  set.set(script_backend(
      Role::entailment, [](const Json&) { return Json{{"entail", 0.0}, {"neutral", 0.0}, {"contradict", 1.0}}; },
      nli_calls));
  std::vector<VerificationQuestion> kept;
  for (const char* text : {"is there bread?", "is there garlic?", "is there butter?", "is there a plate?",
                           "is it sliced?"}) {
    kept.push_back(make_question("q" + std::to_string(kept.size() + 1), text, "yes", QuestionStatus::kept));
  }
  const ImageCheck check =
      verify_image(make_image("r01", 0), {"p", "r01", "m", PromptMode::rewritten}, kept, set, MatcherConfig{});
  c.expect(check.score == 0.8 && format_fixed6(check.score) == "0.800000",
           "4 of 5 scores 0.800000, got " + format_fixed6(check.score));

  TempDir dir;
  ConsistencyReport r;
  r.prompt_id = "r01";
  r.per_image.push_back({"img", 0, check.verdicts, check.score});
  r.ranking = {"img"};
  r.selected = "img";
  c.expect(serialize_report(r).find("\"score\": 0.800000") != std::string::npos, "report text carries 0.800000");

  const std::vector<RankCandidate> cands = {{"seed0", 0, 0.8}, {"seed1", 1, 1.0}, {"seed2", 2, 0.8}};
  const Ranking rank = rank_and_select(cands);
  c.expect(rank.selected == "seed1", "selects the 1.0 image");
  c.expect(rank.order == std::vector<std::string>{"seed1", "seed0", "seed2"}, "ties broken by ascending seed");
}

void filter_invariants(Check& c) {
  // kept is a subset of generated on every fixture: corpus reports and the
  // filter-count fixture.
  TempDir dir;
  Pipeline(corpus_config(dir.path())).run(load_dataset(corpus_dataset()));
  for (const auto& id : list_reports(dir.path())) {
    const auto report = load_report(id, dir.path());
    const auto kept = kept_questions(report.questions);
    std::set<std::string> generated;
    for (const auto& q : report.questions) generated.insert(q.qid);
    for (const auto& q : kept) c.expect(generated.count(q.qid) == 1, id + ": kept " + q.qid + " not generated");
    for (const auto& iv : report.per_image) {
      for (const auto& v : iv.verdicts) {
        c.expect(std::any_of(kept.begin(), kept.end(), [&](const auto& q) { return q.qid == v.qid; }),
                 id + ": verdict for non-kept " + v.qid);
      }
    }
  }
  for (const auto& [domain, rows] : load_filter_count_fixture()) {
    try {
      replay_filter(rows, FilterConfig{});
    } catch (const MismatchedSets& e) {
      c.expect(false, domain + ": " + e.what());
    }
  }

  std::vector<FilterConfig> grid;
  for (double t : {0.01, 0.25, 0.5, 0.75, 0.99}) {
    for (auto rule : {BinaryRule::qa_equality_only, BinaryRule::qa_or_entailment}) {
      for (bool drop : {true, false}) grid.push_back({t, rule, drop, false});
    }
  }
  const auto binary = make_question("b", "is there a bowl?", "yes");
  const auto open = make_question("o", "what is in the bowl?", "pasta");
  for (const auto& cfg : grid) {
    for (double p : {0.0, 0.5, 1.0}) {
      c.expect(filter_decision(binary, "Yes", true, {p, 0.0, 1.0 - p}, cfg).keep, "binary equal answer kept");
    }
    c.expect(!filter_decision(open, "rice", true, {0.0, 0.0, 1.0}, cfg).keep, "contradicted open answer dropped");
  }

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::string> answers = {"yes", "no", "pasta", "rice", ""};
  for (int trial = 0; trial < kFilterConfigs; ++trial) {
    FilterConfig hi{0.02 + 0.97 * u(rng), rng() % 2 ? BinaryRule::qa_or_entailment : BinaryRule::qa_equality_only,
                    rng() % 2 == 0, false};
    FilterConfig lo = hi;
    lo.entail_threshold = 0.01 + (hi.entail_threshold - 0.01) * u(rng);
    for (int i = 0; i < 40; ++i) {
      const auto& q = rng() % 2 ? binary : open;
      const std::string& a = answers[rng() % answers.size()];
      const bool answerable = rng() % 4 != 0;
      const double p = u(rng);
      const bool kept_hi = filter_decision(q, a, answerable, {p, 0.0, 1.0 - p}, hi).keep;
      const bool kept_lo = filter_decision(q, a, answerable, {p, 0.0, 1.0 - p}, lo).keep;
      c.expect(!kept_hi || kept_lo, "lowering the threshold dropped a kept question (trial " +
                                        std::to_string(trial) + ")");
    }
  }
}

void filter_counts(Check& c) {
  const auto fixture = load_filter_count_fixture();
  const FilterStats r = replay_filter(fixture.at("recipes"), FilterConfig{});
  const FilterStats w = replay_filter(fixture.at("wikihow"), FilterConfig{});
  auto line = [](const FilterStats& s) {
    return std::to_string(s.kept_binary + s.dropped_binary) + "->" + std::to_string(s.kept_binary) + ", " +
           std::to_string(s.kept_open + s.dropped_open) + "->" + std::to_string(s.kept_open);
  };
  c.expect(line(r) == "392->386, 233->174", "recipes: " + line(r));
  c.expect(line(w) == "403->388, 222->158", "wikihow: " + line(w));
}

void matcher_routing(Check& c) {
  auto nli_calls = std::make_shared<std::atomic<int>>(0);
  auto sim_calls = std::make_shared<std::atomic<int>>(0);
  std::map<std::string, std::string> answers;
  BackendSet set;
  set.set(script_backend(Role::vqa, [&](const Json& req) {
    return Json{{"answer", answers.at(req.at("question").get<std::string>())}};
  }));
  set.set(script_backend(
      Role::entailment, [](const Json&) { return Json{{"entail", 0.5}, {"neutral", 0.5}, {"contradict", 0.0}}; },
      nli_calls));
  set.set(script_backend(Role::similarity, [](const Json&) { return Json{{"score", 0.5}}; }, sim_calls));
  const VisualPrompt vp{"p", "r", "m", PromptMode::rewritten};

  // Binary questions, matching and mismatching: equality only.
  answers = {{"is there a bowl?", "no"}, {"is there a spoon?", "yes"}};
  const std::vector<VerificationQuestion> binary = {
      make_question("q1", "is there a bowl?", "yes", QuestionStatus::kept),
      make_question("q2", "is there a spoon?", "yes", QuestionStatus::kept)};
  MatcherConfig nli_cfg;
  MatcherConfig sem_cfg;
  sem_cfg.open_matcher = MatcherKind::semantic;
  verify_image(make_image("r", 0), vp, binary, set, nli_cfg);
  verify_image(make_image("r", 0), vp, binary, set, sem_cfg);
  c.expect(nli_calls->load() == 0 && sim_calls->load() == 0, "binary questions made entailment/similarity calls");

  // Open questions answered with a normalized-equal string short-circuit.
  answers = {{"what is in the bowl?", "The Pasta."}};
  const std::vector<VerificationQuestion> open = {
      make_question("q3", "what is in the bowl?", "pasta", QuestionStatus::kept)};
  const auto a = verify_image(make_image("r", 0), vp, open, set, nli_cfg);
  const auto b = verify_image(make_image("r", 0), vp, open, set, sem_cfg);
  c.expect(nli_calls->load() == 0 && sim_calls->load() == 0, "equal open answers made backend calls");
  c.expect(a.score == 1.0 && b.score == 1.0, "equal open answers pass");

  // The filter's equality path makes no entailment call either.
  auto qa = script_backend(Role::text_qa, [](const Json&) { return Json{{"answer", "pasta"}, {"answerable", true}}; });
  filter_questions(vp, {make_question("q4", "what is in the bowl?", "pasta")}, *qa, set.at(Role::entailment),
                   FilterConfig{});
  c.expect(nli_calls->load() == 0, "filter equality made an entailment call");

  // Control: a mismatched open answer does reach the configured matcher.
  answers = {{"what is in the bowl?", "rice"}};
  verify_image(make_image("r", 0), vp, open, set, nli_cfg);
  verify_image(make_image("r", 0), vp, open, set, sem_cfg);
  c.expect(nli_calls->load() == 1 && sim_calls->load() == 1, "mismatched open answers route to their matcher");
}

void persistence_laws(Check& c) {
  TempDir dir;
  const auto records = load_dataset(corpus_dataset());
  save_dataset(records, dir / "dataset.jsonl");
  c.expect(load_dataset(dir / "dataset.jsonl") == records, "dataset round trip");
  c.expect(read_text(dir / "dataset.jsonl") == dataset_to_jsonl(load_dataset(dir / "dataset.jsonl")),
           "dataset double serialization");

  Pipeline(corpus_config(dir.path())).run(records);
  for (const auto& id : list_reports(dir.path())) {
    const std::string text = read_text(report_path(dir.path(), id));
    const auto report = parse_report(text);
    c.expect(serialize_report(report) == text, id + ": report double serialization");
    TempDir again;
    save_report(report, again.path());
    c.expect(load_report(id, again.path()) == report, id + ": report round trip");
  }

  fs::copy_file(data_dir() / "corpus20" / "annotations.log", annotation_log_path(dir.path()));
  const auto log = load_annotation_log(annotation_log_path(dir.path()));
  c.expect(!log.empty(), "annotation log loads");
  c.expect(annotations_to_jsonl(log) == read_text(annotation_log_path(dir.path())), "annotation log is canonical");
  std::ofstream(dir / "log2.jsonl") << annotations_to_jsonl(log);
  c.expect(load_annotation_log(dir / "log2.jsonl") == log, "annotation round trip");
  for (const auto& a : log) c.expect(annotation_from_json(to_json(a)) == a, "annotation JSON round trip");

  AnnotationStore store(dir.path());
  store.seed_tasks_from_reports();
  const auto task = store.next_task("acceptance-rater");
  c.expect(task && AnnotationStore(dir.path()).task(task->task_id) == task, "task queue survives reload");

  const auto rows = export_annotations(dir.path());
  const std::string csv = export_to_csv(rows);
  c.expect(parse_export_csv(csv) == rows, "export round trip");
  c.expect(export_to_csv(parse_export_csv(csv)) == csv, "export double serialization");
}

void metric_degenerates(Check& c) {
  std::mt19937 rng(9);
  std::vector<LabeledScore> all_pos, exact;
  for (int i = 0; i < 25; ++i) {
    all_pos.push_back({"p" + std::to_string(i), (rng() % 101) / 100.0, true});
    const bool label = rng() % 2 == 0;
    exact.push_back({"e" + std::to_string(i), label ? 1.0 : 0.0, label});
  }
  c.expect(average_precision(all_pos) == 1.0, "all-positive AP is 1.0");
  c.expect(consistency_accuracy(exact, 0.5) == 1.0, "predictions equal to labels give accuracy 1.0");
  std::vector<LabeledScore> below = {{"a", 0.999999, true}, {"b", 0.5, false}};
  c.expect(!precision_at_full_score(below).has_value(), "P@1 is undefined without a 1.0 score");
  c.expect(!compute_metric_report(below, 0.5).p_at_1.has_value(), "metric report keeps P@1 undefined");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "instruction template round trip", kTemplateBudgetSec, template_round_trip},
      {2, "average precision oracle", kApBudgetSec, ap_oracle},
      {3, "end-to-end determinism and failure isolation", kDeterminismBudgetSec, end_to_end_determinism},
      {4, "scoring and selection oracle", 0, scoring_oracle},
      {5, "question filter invariants", 0, filter_invariants},
      {6, "filter count regression", kFilterCountBudgetSec, filter_counts},
      {7, "matcher routing", 0, matcher_routing},
      {8, "persistence laws", 0, persistence_laws},
      {9, "metric degenerate cases", 0, metric_degenerates},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.budget_sec > 0 && secs > cr.budget_sec) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "took %.2fs, budget %.2fs", secs, cr.budget_sec);
      check.failures.push_back(buf);
    }
    const bool ok = check.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s %d %s (%.3fs)%s%s\n", ok ? "PASS" : "FAIL", cr.number, cr.name.c_str(), secs,
                ok ? "" : ": ", ok ? "" : check.failures.front().c_str());
    for (std::size_t i = 1; i < check.failures.size() && i < 5; ++i) {
      std::printf("     also: %s\n", check.failures[i].c_str());
    }
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
