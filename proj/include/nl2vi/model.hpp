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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nl2vi {

enum class Domain { recipes, wikihow, other };
enum class PromptMode { rewritten, passthrough };
enum class QuestionKind { binary, open };
enum class QuestionStatus { generated, kept, dropped };
enum class MatcherKind { equality, nli, semantic };

std::string_view to_string(Domain d) noexcept;
std::string_view to_string(PromptMode m) noexcept;
std::string_view to_string(QuestionKind k) noexcept;
std::string_view to_string(QuestionStatus s) noexcept;
std::string_view to_string(MatcherKind m) noexcept;

// Inverse mappings throw std::invalid_argument on unknown names.
Domain parse_domain(std::string_view s);
PromptMode parse_prompt_mode(std::string_view s);
QuestionKind parse_question_kind(std::string_view s);
QuestionStatus parse_question_status(std::string_view s);
MatcherKind parse_matcher_kind(std::string_view s);

struct NaturalPromptRecord {
  std::string id;
  Domain domain = Domain::other;
  std::string text;

  bool operator==(const NaturalPromptRecord&) const = default;
};

struct VisualPrompt {
  std::string text;
  std::string source_id;
  std::string generator;
  PromptMode mode = PromptMode::rewritten;

  bool operator==(const VisualPrompt&) const = default;
};

struct FilterEvidence {
  std::string qa_answer;
  double entail_prob = 0.0;
  std::string rule_fired;

  bool operator==(const FilterEvidence&) const = default;
};

struct VerificationQuestion {
  std::string qid;
  std::string text;
  std::string expected;
  QuestionKind kind = QuestionKind::open;
  QuestionStatus status = QuestionStatus::generated;
  std::optional<FilterEvidence> filter_evidence;

  bool operator==(const VerificationQuestion&) const = default;
};

struct GeneratedImage {
  std::string image_id;
  std::string prompt_id;
  std::uint64_t seed = 0;
  std::string backend;
  std::string content_ref;

  bool operator==(const GeneratedImage&) const = default;
};

struct QuestionVerdict {
  std::string qid;
  std::string vqa_answer;
  MatcherKind matcher = MatcherKind::equality;
  double match_score = 0.0;
  bool passed = false;

  bool operator==(const QuestionVerdict&) const = default;
};

struct ImageVerification {
  std::string image_id;
  std::uint64_t seed = 0;
  std::vector<QuestionVerdict> verdicts;
  double score = 0.0;

  bool operator==(const ImageVerification&) const = default;
};

struct ConsistencyReport {
  std::string prompt_id;
  VisualPrompt visual_prompt;
  std::vector<VerificationQuestion> questions;
  std::vector<ImageVerification> per_image;
  std::vector<std::string> ranking;
  std::string selected;
  std::string config_digest;
  std::vector<std::string> warnings;

  bool operator==(const ConsistencyReport&) const = default;
};

struct AnnotationRecord {
  std::string prompt_id;
  std::string image_id;
  std::string rater_id;
  int rating = 0;
  /// UTC instant, ISO-8601 with trailing 'Z'.
  std::string timestamp;

  bool operator==(const AnnotationRecord&) const = default;
};

/// Lowercases ASCII, collapses whitespace, then repeatedly strips trailing
/// '.', '!', '?' and a leading "a"/"an"/"the" token until nothing changes.
/// Idempotent.
std::string normalize_answer(std::string_view text);

QuestionKind classify_question_kind(std::string_view expected);

inline bool answers_match(std::string_view expected, std::string_view answer) {
  return normalize_answer(expected) == normalize_answer(answer);
}

/// Rounds to the nearest multiple of 1e-6. Reports store six fractional
/// digits; quantized values survive a text round trip bit-exactly.
double quantize_score(double value);

/// Pass fraction over the kept questions, quantized; 0 when `kept` is 0.
double pass_fraction(std::size_t passed, std::size_t kept);

/// Recomputes an image score from its verdicts.
double score_from_verdicts(std::span<const QuestionVerdict> verdicts);

/// Binary human label from a 1..5 rating; ratings >= `cut` are consistent.
bool rating_is_consistent(int rating, int cut = 4);

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 5;

}  // namespace nl2vi
