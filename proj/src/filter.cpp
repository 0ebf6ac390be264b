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

#include "nl2vi/filter.hpp"

#include <stdexcept>
#include <unordered_map>

#include "nl2vi/errors.hpp"

namespace nl2vi {

std::string_view to_string(BinaryRule r) noexcept {
  return r == BinaryRule::qa_equality_only ? "qa_equality_only" : "qa_or_entailment";
}

BinaryRule parse_binary_rule(std::string_view s) {
  if (s == "qa_equality_only") return BinaryRule::qa_equality_only;
  if (s == "qa_or_entailment") return BinaryRule::qa_or_entailment;
  throw std::invalid_argument("unknown binary rule '" + std::string(s) + "'");
}

void FilterConfig::validate() const {
  if (!(entail_threshold > 0.0 && entail_threshold < 1.0)) {
    throw ConfigError("filter.entail_threshold must lie in (0,1)");
  }
}

FilterDecision filter_decision(const VerificationQuestion& question, std::string_view qa_answer, bool answerable,
                               const EntailmentScores& scores, const FilterConfig& config) {
  if (!answerable && config.drop_unanswerable) return {false, "unanswerable"};
  const bool equal = answers_match(question.expected, qa_answer);
  const bool entailed = scores.entail >= config.entail_threshold;

  if (question.kind == QuestionKind::binary) {
    if (equal) return {true, "binary_equality"};
    if (config.binary_rule == BinaryRule::qa_or_entailment && entailed) return {true, "binary_entailment"};
    return {false, "binary_mismatch"};
  }
  if (!answerable) return {false, "open_unanswerable"};
  if (equal) return {true, "open_equality"};
  if (entailed) return {true, "open_entailment"};
  return {false, "open_mismatch"};
}

std::string nli_statement(std::string_view question, std::string_view answer) {
  std::string s = "question: ";
  s.append(question);
  s += " answer: ";
  s.append(answer);
  return s;
}

std::vector<VerificationQuestion> filter_questions(const VisualPrompt& visual_prompt,
                                                   std::vector<VerificationQuestion> questions,
                                                   Backend& qa_backend, Backend* nli_backend,
                                                   const FilterConfig& config,
                                                   std::vector<std::string>* warnings) {
  config.validate();
  for (auto& q : questions) {
    if (q.status != QuestionStatus::generated) {
      throw std::invalid_argument("filter_questions: question " + q.qid + " was already filtered");
    }
  }
  for (auto& q : questions) {
    try {
      const TextAnswer qa = answer_text_question(qa_backend, q.text, visual_prompt.text);
      const bool equal = answers_match(q.expected, qa.answer);
      EntailmentScores scores{equal ? 1.0 : 0.0, 0.0, equal ? 0.0 : 1.0};
      const bool unanswerable_binary_may_entail = !config.drop_unanswerable &&
                                                  q.kind == QuestionKind::binary &&
                                                  config.binary_rule == BinaryRule::qa_or_entailment;
      if (nli_backend && !equal && (qa.answerable || unanswerable_binary_may_entail)) {
        scores = entailment(*nli_backend, nli_statement(q.text, qa.answer), nli_statement(q.text, q.expected));
      }
      scores.entail = quantize_score(scores.entail);
      const FilterDecision d = filter_decision(q, qa.answer, qa.answerable, scores, config);
      q.status = d.keep ? QuestionStatus::kept : QuestionStatus::dropped;
      q.filter_evidence = FilterEvidence{qa.answer, scores.entail, d.rule_fired};
    } catch (const BackendUnavailable& e) {
      if (!config.best_effort) throw;
      q.status = QuestionStatus::dropped;
      q.filter_evidence = FilterEvidence{"", 0.0, "backend_error"};
      if (warnings) warnings->push_back("question " + q.qid + " dropped: " + e.what());
    }
  }
  return questions;
}

FilterStats filter_stats(std::span<const VerificationQuestion> before,
                         std::span<const VerificationQuestion> after) {
  std::unordered_map<std::string, QuestionKind> kinds;
  for (const auto& q : before) kinds.emplace(q.qid, q.kind);

  FilterStats s;
  std::unordered_map<std::string, bool> seen;
  for (const auto& q : after) {
    auto it = kinds.find(q.qid);
    if (it == kinds.end()) throw MismatchedSets("qid '" + q.qid + "' is not among the generated questions");
    if (!seen.emplace(q.qid, true).second) continue;
    (it->second == QuestionKind::binary ? s.kept_binary : s.kept_open) += 1;
  }
  std::size_t total_binary = 0;
  std::size_t total_open = 0;
  for (const auto& [qid, kind] : kinds) (kind == QuestionKind::binary ? total_binary : total_open) += 1;
  s.dropped_binary = total_binary - s.kept_binary;
  s.dropped_open = total_open - s.kept_open;
  return s;
}

std::vector<VerificationQuestion> kept_questions(std::span<const VerificationQuestion> questions) {
  std::vector<VerificationQuestion> out;
  for (const auto& q : questions) {
    if (q.status == QuestionStatus::kept) out.push_back(q);
  }
  return out;
}

std::vector<VerificationQuestion> filter_questions(const VisualPrompt& visual_prompt,
                                                   std::vector<VerificationQuestion> questions,
                                                   Backend& qa_backend, Backend& nli_backend,
                                                   const FilterConfig& config,
                                                   std::vector<std::string>* warnings) {
  return filter_questions(visual_prompt, std::move(questions), qa_backend, &nli_backend, config, warnings);
}

}  // namespace nl2vi
