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

// Drops generated questions that the visual prompt itself cannot support:
// a text-QA backend answers each question from the visual prompt, and an
// entailment backend compares that answer with the expected one.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vi/gateway.hpp"
#include "nl2vi/model.hpp"

namespace nl2vi {

enum class BinaryRule { qa_equality_only, qa_or_entailment };

std::string_view to_string(BinaryRule r) noexcept;
BinaryRule parse_binary_rule(std::string_view s);

struct FilterConfig {
  double entail_threshold = 0.5;
  BinaryRule binary_rule = BinaryRule::qa_equality_only;
  bool drop_unanswerable = true;
  /// Backend failures drop the affected question with a warning instead of
  /// aborting the batch.
  bool best_effort = false;

  /// Throws ConfigError unless entail_threshold lies in (0,1).
  void validate() const;
};

struct FilterDecision {
  bool keep = false;
  std::string rule_fired;
};

/// Pure keep/drop rule. rule_fired is one of: unanswerable, binary_equality,
/// binary_entailment, binary_mismatch, open_unanswerable, open_equality,
/// open_entailment, open_mismatch.
FilterDecision filter_decision(const VerificationQuestion& question, std::string_view qa_answer, bool answerable,
                               const EntailmentScores& scores, const FilterConfig& config);

/// "question: {q} answer: {a}", the premise/hypothesis form used for NLI.
std::string nli_statement(std::string_view question, std::string_view answer);

/// Marks every question kept or dropped, with evidence, preserving order.
/// The QA passage is exactly the visual prompt text. Backend errors abort
/// the whole batch unless config.best_effort is set.
std::vector<VerificationQuestion> filter_questions(const VisualPrompt& visual_prompt,
                                                   std::vector<VerificationQuestion> questions,
                                                   Backend& qa_backend, Backend& nli_backend,
                                                   const FilterConfig& config,
                                                   std::vector<std::string>* warnings = nullptr);

/// Without an entailment backend, a mismatched answer scores entail 0.
std::vector<VerificationQuestion> filter_questions(const VisualPrompt& visual_prompt,
                                                   std::vector<VerificationQuestion> questions,
                                                   Backend& qa_backend, Backend* nli_backend,
                                                   const FilterConfig& config,
                                                   std::vector<std::string>* warnings = nullptr);

struct FilterStats {
  std::size_t kept_binary = 0;
  std::size_t kept_open = 0;
  std::size_t dropped_binary = 0;
  std::size_t dropped_open = 0;

  bool operator==(const FilterStats&) const = default;
};

/// `after` holds the surviving questions; everything else in `before` counts
/// as dropped. Throws MismatchedSets when `after` has an unknown qid.
FilterStats filter_stats(std::span<const VerificationQuestion> before,
                         std::span<const VerificationQuestion> after);

/// The questions whose status is kept.
std::vector<VerificationQuestion> kept_questions(std::span<const VerificationQuestion> questions);

}  // namespace nl2vi
