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

#include "nl2vi/verifier.hpp"

#include <algorithm>
#include <stdexcept>

#include "nl2vi/errors.hpp"
#include "nl2vi/filter.hpp"

namespace nl2vi {

void MatcherConfig::validate() const {
  if (open_matcher == MatcherKind::equality) throw ConfigError("matchers.open_matcher must be nli or semantic");
  if (!(nli_threshold > 0.0 && nli_threshold < 1.0)) throw ConfigError("matchers.nli_threshold must lie in (0,1)");
  if (!(semantic_threshold > 0.0 && semantic_threshold < 1.0)) {
    throw ConfigError("matchers.semantic_threshold must lie in (0,1)");
  }
  if (weighted && (binary_weight <= 0.0 || open_weight <= 0.0)) {
    throw ConfigError("matcher weights must be positive");
  }
}

MatchResult match_equality(std::string_view expected, std::string_view answer) {
  const bool ok = answers_match(expected, answer);
  return {ok ? 1.0 : 0.0, ok};
}

MatchResult match_nli(std::string_view expected, std::string_view answer, std::string_view question,
                      Backend& nli_backend, double threshold) {
  if (answers_match(expected, answer)) return {1.0, true};
  const EntailmentScores s =
      entailment(nli_backend, nli_statement(question, answer), nli_statement(question, expected));
  const double score = quantize_score(s.entail);
  return {score, score >= threshold};
}

MatchResult match_semantic(std::string_view expected, std::string_view answer, Backend& similarity_backend,
                           double threshold) {
  if (answers_match(expected, answer)) return {1.0, true};
  const double score = quantize_score(semantic_similarity(similarity_backend, expected, answer));
  return {score, score >= threshold};
}

ImageCheck verify_image(const GeneratedImage& image, const VisualPrompt& visual_prompt,
                        std::span<const VerificationQuestion> kept, const BackendSet& backends,
                        const MatcherConfig& config) {
  Backend& vqa = backends.at(Role::vqa);
  const std::string_view context = config.vqa_context ? std::string_view(visual_prompt.text) : std::string_view();

  ImageCheck check;
  double weight_total = 0.0;
  double weight_passed = 0.0;
  std::size_t passed = 0;
  for (const auto& q : kept) {
    if (q.status != QuestionStatus::kept) {
      throw std::invalid_argument("verify_image: question " + q.qid + " is not kept");
    }
    QuestionVerdict v;
    v.qid = q.qid;
    v.vqa_answer = answer_visual_question(vqa, image, q.text, context);
    MatchResult m;
    if (q.kind == QuestionKind::binary) {
      v.matcher = MatcherKind::equality;
      m = match_equality(q.expected, v.vqa_answer);
    } else if (config.open_matcher == MatcherKind::semantic) {
      v.matcher = MatcherKind::semantic;
      m = match_semantic(q.expected, v.vqa_answer, backends.at(Role::similarity), config.semantic_threshold);
    } else {
      v.matcher = MatcherKind::nli;
      m = match_nli(q.expected, v.vqa_answer, q.text, backends.at(Role::entailment), config.nli_threshold);
    }
    v.match_score = m.score;
    v.passed = m.passed;
    passed += v.passed ? 1 : 0;
    const double w = q.kind == QuestionKind::binary ? config.binary_weight : config.open_weight;
    weight_total += w;
    weight_passed += v.passed ? w : 0.0;
    check.verdicts.push_back(std::move(v));
  }
  if (kept.empty()) {
    check.warnings.push_back("NoQuestions: image " + image.image_id + " has no kept questions; score is 0");
  }
  check.score = config.weighted && weight_total > 0.0 ? quantize_score(weight_passed / weight_total)
                                                      : pass_fraction(passed, kept.size());
  return check;
}

Ranking rank_and_select(std::span<const RankCandidate> candidates) {
  if (candidates.empty()) throw EmptyBatch("rank_and_select: no candidates");
  std::vector<RankCandidate> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end(), [](const RankCandidate& a, const RankCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.image_id < b.image_id;
  });
  Ranking r;
  for (const auto& c : sorted) r.order.push_back(c.image_id);
  r.selected = r.order.front();
  return r;
}

ConsistencyReport run_verification(const NaturalPromptRecord& record, const SynthesisResult& synthesis,
                                   std::span<const GeneratedImage> candidates, const BackendSet& backends,
                                   const MatcherConfig& config, std::string config_digest) {
  config.validate();
  if (synthesis.visual_prompt.source_id != record.id) {
    throw std::invalid_argument("run_verification: synthesis belongs to " + synthesis.visual_prompt.source_id);
  }
  ConsistencyReport report;
  report.prompt_id = record.id;
  report.visual_prompt = synthesis.visual_prompt;
  report.questions = synthesis.questions;
  report.config_digest = std::move(config_digest);
  report.warnings = synthesis.warnings;

  const auto kept = kept_questions(report.questions);
  std::vector<RankCandidate> ranked;
  for (const auto& image : candidates) {
    if (image.prompt_id != record.id) {
      throw std::invalid_argument("run_verification: image " + image.image_id + " belongs to " + image.prompt_id);
    }
    ImageCheck check = verify_image(image, synthesis.visual_prompt, kept, backends, config);
    report.per_image.push_back({image.image_id, image.seed, std::move(check.verdicts), check.score});
    if (!check.warnings.empty() && kept.empty() && &image == &candidates.front()) {
      report.warnings.push_back("NoQuestions: no kept questions; every image scores 0");
    }
    ranked.push_back({image.image_id, image.seed, check.score});
  }
  Ranking r = rank_and_select(ranked);
  report.ranking = std::move(r.order);
  report.selected = std::move(r.selected);
  return report;
}

}  // namespace nl2vi
