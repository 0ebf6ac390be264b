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

#include <algorithm>
#include <random>

#include "nl2vi/errors.hpp"
#include "nl2vi/verifier.hpp"
#include "test_support.hpp"

namespace nl2vi {
namespace {

using testing::script_backend;

VerificationQuestion kept(std::string qid, std::string text, std::string expected) {
  VerificationQuestion q;
  q.qid = std::move(qid);
  q.text = std::move(text);
  q.expected = std::move(expected);
  q.kind = classify_question_kind(q.expected);
  q.status = QuestionStatus::kept;
  return q;
}

GeneratedImage image(std::string prompt_id, std::uint64_t seed) {
  GeneratedImage g;
  g.prompt_id = std::move(prompt_id);
  g.seed = seed;
  g.backend = "t2i";
  g.image_id = make_image_id(g.prompt_id, seed, g.backend);
  g.content_ref = ArtifactStore::content_ref(g.image_id);
  return g;
}

struct Harness {
  std::map<std::string, std::string> vqa_answers;  // question text -> answer
  double entail = 0.9;
  double similarity = 0.9;
  std::shared_ptr<std::atomic<int>> vqa_calls = std::make_shared<std::atomic<int>>(0);
  std::shared_ptr<std::atomic<int>> nli_calls = std::make_shared<std::atomic<int>>(0);
  std::shared_ptr<std::atomic<int>> sim_calls = std::make_shared<std::atomic<int>>(0);
  std::vector<Json> vqa_requests;
  BackendSet set;

  Harness() {
    set.set(script_backend(
        Role::vqa,
        [this](const Json& req) {
          vqa_requests.push_back(req);
          return Json{{"answer", vqa_answers.at(req.at("question").get<std::string>())}};
        },
        vqa_calls));
    set.set(script_backend(
        Role::entailment, [this](const Json&) { return Json{{"entail", entail}, {"neutral", 0.0}, {"contradict", 1.0 - entail}}; },
        nli_calls));
    set.set(script_backend(Role::similarity, [this](const Json&) { return Json{{"score", similarity}}; }, sim_calls));
  }
};

TEST(Matchers, Equality) {
  EXPECT_TRUE(match_equality("yes", "Yes.").passed);
  EXPECT_EQ(match_equality("the pasta", "pasta").score, 1.0);
  EXPECT_FALSE(match_equality("yes", "no").passed);
}

TEST(Matchers, NliThresholdInclusive) {
  Harness h;
  h.entail = 0.5;
  auto r = match_nli("pasta", "noodles", "what is it?", h.set.at(Role::entailment), 0.5);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.score, 0.5);
  h.entail = 0.499999;
  EXPECT_FALSE(match_nli("pasta", "rice", "what is it?", h.set.at(Role::entailment), 0.5).passed);
  EXPECT_EQ(h.nli_calls->load(), 2);
  EXPECT_TRUE(match_nli("pasta", "Pasta!", "what is it?", h.set.at(Role::entailment), 0.5).passed);
  EXPECT_EQ(h.nli_calls->load(), 2);
}

TEST(Matchers, Semantic) {
  Harness h;
  h.similarity = 0.85;
  EXPECT_TRUE(match_semantic("white", "ivory", h.set.at(Role::similarity), 0.8).passed);
  EXPECT_FALSE(match_semantic("white", "ivory", h.set.at(Role::similarity), 0.9).passed);
  EXPECT_EQ(match_semantic("white", "", h.set.at(Role::similarity), 0.8).score, 0.0);
}

TEST(VerifyImage, FourOfFiveScoresPointEight) {
  Harness h;
  std::vector<VerificationQuestion> qs = {kept("q1", "is there bread?", "yes"), kept("q2", "is it sliced?", "yes"),
                                          kept("q3", "is there garlic?", "yes"), kept("q4", "is it on a plate?", "yes"),
                                          kept("q5", "is there butter?", "yes")};
  h.vqa_answers = {{"is there bread?", "yes"}, {"is it sliced?", "yes"}, {"is there garlic?", "no"},
                   {"is it on a plate?", "yes"}, {"is there butter?", "yes"}};
  const auto check = verify_image(image("r01", 0), {"p", "r01", "m", PromptMode::rewritten}, qs, h.set, MatcherConfig{});
  EXPECT_EQ(check.score, 0.8);
  EXPECT_EQ(format_fixed6(check.score), "0.800000");
  EXPECT_EQ(check.verdicts.size(), 5u);
  EXPECT_FALSE(check.verdicts[2].passed);
  EXPECT_EQ(h.nli_calls->load(), 0);
  EXPECT_EQ(h.sim_calls->load(), 0);
}

TEST(VerifyImage, OpenQuestionsRouteToConfiguredMatcher) {
  Harness h;
  std::vector<VerificationQuestion> qs = {kept("q1", "what is on the plate?", "garlic bread"),
                                          kept("q2", "what color is the plate?", "white")};
  h.vqa_answers = {{"what is on the plate?", "garlic bread"}, {"what color is the plate?", "ivory"}};
  const VisualPrompt vp{"p", "r01", "m", PromptMode::rewritten};

  auto nli = verify_image(image("r01", 0), vp, qs, h.set, MatcherConfig{});
  EXPECT_EQ(nli.verdicts[0].matcher, MatcherKind::nli);
  EXPECT_EQ(h.nli_calls->load(), 1);  // the equal answer needs no call
  EXPECT_EQ(h.sim_calls->load(), 0);

  MatcherConfig sem;
  sem.open_matcher = MatcherKind::semantic;
  auto s = verify_image(image("r01", 0), vp, qs, h.set, sem);
  EXPECT_EQ(s.verdicts[1].matcher, MatcherKind::semantic);
  EXPECT_EQ(h.sim_calls->load(), 1);
  EXPECT_EQ(h.nli_calls->load(), 1);
}

TEST(VerifyImage, ContextFlagControlsVqaPayload) {
  Harness h;
  h.vqa_answers = {{"is it hot?", "yes"}};
  const VisualPrompt vp{"steaming soup", "w01", "m", PromptMode::rewritten};
  std::vector<VerificationQuestion> qs = {kept("q1", "is it hot?", "yes")};
  verify_image(image("w01", 0), vp, qs, h.set, MatcherConfig{});
  MatcherConfig no_ctx;
  no_ctx.vqa_context = false;
  verify_image(image("w01", 1), vp, qs, h.set, no_ctx);
  ASSERT_EQ(h.vqa_requests.size(), 2u);
  EXPECT_EQ(h.vqa_requests[0].at("context"), "steaming soup");
  EXPECT_EQ(h.vqa_requests[1].at("context"), "");
}

TEST(VerifyImage, NoKeptQuestionsScoresZeroWithWarning) {
  Harness h;
  const auto check = verify_image(image("w09", 0), {"p", "w09", "m", PromptMode::rewritten}, {}, h.set, MatcherConfig{});
  EXPECT_EQ(check.score, 0.0);
  ASSERT_EQ(check.warnings.size(), 1u);
  EXPECT_NE(check.warnings[0].find("NoQuestions"), std::string::npos);
  EXPECT_EQ(h.vqa_calls->load(), 0);
}

TEST(VerifyImage, RejectsQuestionsThatAreNotKept) {
  Harness h;
  auto q = kept("q1", "x?", "yes");
  q.status = QuestionStatus::dropped;
  std::vector<VerificationQuestion> qs = {q};
  EXPECT_THROW(verify_image(image("r", 0), {"p", "r", "m", PromptMode::rewritten}, qs, h.set, MatcherConfig{}),
               std::invalid_argument);
}

TEST(VerifyImage, ScoreIsPassFractionProperty) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    Harness h;
    h.entail = (rng() % 1000) / 1000.0;
    std::vector<VerificationQuestion> qs;
    const int n = 1 + static_cast<int>(rng() % 9);
    for (int i = 0; i < n; ++i) {
      const std::string text = "question " + std::to_string(i) + "?";
      const bool binary = rng() % 2 == 0;
      qs.push_back(kept("q" + std::to_string(i), text, binary ? "yes" : "pasta"));
      h.vqa_answers[text] = rng() % 2 ? (binary ? "yes" : "pasta") : (binary ? "no" : "rice");
    }
    const auto check = verify_image(image("r", 0), {"p", "r", "m", PromptMode::rewritten}, qs, h.set, MatcherConfig{});
    const auto passed = std::count_if(check.verdicts.begin(), check.verdicts.end(), [](const auto& v) { return v.passed; });
    EXPECT_EQ(check.score, quantize_score(static_cast<double>(passed) / n));
    EXPECT_GE(check.score, 0.0);
    EXPECT_LE(check.score, 1.0);
  }
}

TEST(RankAndSelect, TieBreakBySeed) {
  const std::vector<RankCandidate> c = {{"a", 0, 0.8}, {"b", 1, 1.0}, {"c", 2, 0.8}};
  const Ranking r = rank_and_select(c);
  EXPECT_EQ(r.order, (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(r.selected, "b");
}

TEST(RankAndSelect, PermutationInvariant) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RankCandidate> c;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      c.push_back({"img" + std::to_string(i), static_cast<std::uint64_t>(rng() % 4), (rng() % 5) / 4.0});
    }
    const Ranking base = rank_and_select(c);
    std::shuffle(c.begin(), c.end(), rng);
    const Ranking shuffled = rank_and_select(c);
    EXPECT_EQ(base.order, shuffled.order);
    EXPECT_EQ(base.selected, shuffled.selected);
    double best = 0.0;
    for (const auto& x : c) best = std::max(best, x.score);
    const auto sel = std::find_if(c.begin(), c.end(), [&](const auto& x) { return x.image_id == base.selected; });
    EXPECT_EQ(sel->score, best);
  }
}

TEST(RankAndSelect, EmptyBatch) {
  EXPECT_THROW(rank_and_select(std::vector<RankCandidate>{}), EmptyBatch);
}

TEST(RunVerification, BuildsReport) {
  Harness h;
  h.vqa_answers = {{"is there bread?", "yes"}, {"what is on top?", "cheese"}};
  SynthesisResult syn;
  syn.visual_prompt = {"bread with cheese", "r03", "llm", PromptMode::rewritten};
  auto dropped = kept("r03.q3", "is it burnt?", "no");
  dropped.status = QuestionStatus::dropped;
  syn.questions = {kept("r03.q1", "is there bread?", "yes"), kept("r03.q2", "what is on top?", "cheese"), dropped};
  const std::vector<GeneratedImage> imgs = {image("r03", 0), image("r03", 1)};
  const auto report = run_verification({"r03", Domain::recipes, "bread"}, syn, imgs, h.set, MatcherConfig{}, "abc");
  EXPECT_EQ(report.prompt_id, "r03");
  EXPECT_EQ(report.config_digest, "abc");
  ASSERT_EQ(report.per_image.size(), 2u);
  EXPECT_EQ(report.per_image[0].verdicts.size(), 2u);
  EXPECT_EQ(report.per_image[0].score, 1.0);
  EXPECT_EQ(report.selected, imgs[0].image_id);
  EXPECT_EQ(report.ranking, (std::vector<std::string>{imgs[0].image_id, imgs[1].image_id}));
  EXPECT_EQ(report.questions.size(), 3u);
}

TEST(RunVerification, RejectsForeignImages) {
  Harness h;
  SynthesisResult syn;
  syn.visual_prompt = {"p", "r03", "llm", PromptMode::rewritten};
  const std::vector<GeneratedImage> imgs = {image("r04", 0)};
  EXPECT_THROW(run_verification({"r03", Domain::recipes, "x"}, syn, imgs, h.set, MatcherConfig{}, ""),
               std::invalid_argument);
}

}  // namespace
}  // namespace nl2vi
