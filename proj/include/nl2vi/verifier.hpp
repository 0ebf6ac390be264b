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

// Phase 3: ask every kept question of every candidate image, match the VQA
// answer against the expected one, score, rank and select.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vi/gateway.hpp"
#include "nl2vi/model.hpp"
#include "nl2vi/synthesis.hpp"

namespace nl2vi {

struct MatcherConfig {
  /// Binary questions always use equality.
  MatcherKind open_matcher = MatcherKind::nli;
  double nli_threshold = 0.5;
  double semantic_threshold = 0.8;
  /// Pass the visual prompt to the VQA backend along with the image.
  bool vqa_context = true;
  /// Per-kind weights; score is the plain pass fraction unless enabled.
  bool weighted = false;
  double binary_weight = 1.0;
  double open_weight = 1.0;

  void validate() const;
};

struct MatchResult {
  double score = 0.0;
  bool passed = false;
};

MatchResult match_equality(std::string_view expected, std::string_view answer);

/// Normalized-equal answers pass with score 1 without a backend call.
MatchResult match_nli(std::string_view expected, std::string_view answer, std::string_view question,
                      Backend& nli_backend, double threshold);

/// Normalized-equal answers pass with score 1 without a backend call.
MatchResult match_semantic(std::string_view expected, std::string_view answer, Backend& similarity_backend,
                           double threshold);

struct ImageCheck {
  std::vector<QuestionVerdict> verdicts;
  double score = 0.0;
  std::vector<std::string> warnings;
};

ImageCheck verify_image(const GeneratedImage& image, const VisualPrompt& visual_prompt,
                        std::span<const VerificationQuestion> kept, const BackendSet& backends,
                        const MatcherConfig& config);

struct RankCandidate {
  std::string image_id;
  std::uint64_t seed = 0;
  double score = 0.0;
};

struct Ranking {
  std::vector<std::string> order;
  std::string selected;
};

/// Score descending, then seed ascending, then image id ascending.
/// Throws EmptyBatch on empty input.
Ranking rank_and_select(std::span<const RankCandidate> candidates);

/// Builds the full report. `synthesis.questions` must already carry filter
/// statuses.
ConsistencyReport run_verification(const NaturalPromptRecord& record, const SynthesisResult& synthesis,
                                   std::span<const GeneratedImage> candidates, const BackendSet& backends,
                                   const MatcherConfig& config, std::string config_digest);

}  // namespace nl2vi
