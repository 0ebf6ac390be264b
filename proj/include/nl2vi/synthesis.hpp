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

// Phase 1: render the in-context instruction, ask the text-generation
// backend for a visual prompt plus verification Q/A pairs, and parse the
// completion.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vi/gateway.hpp"
#include "nl2vi/model.hpp"

namespace nl2vi {

struct QaPair {
  std::string question;
  std::string answer;

  bool operator==(const QaPair&) const = default;
};

struct Exemplar {
  std::string description;
  std::string visual_prompt;
  std::vector<QaPair> qa_pairs;

  bool operator==(const Exemplar&) const = default;
};

/// Fixed preamble plus worked examples; the unseen description goes last.
class InstructionTemplate {
 public:
  /// Throws std::invalid_argument without exemplars or with an exemplar that
  /// has no Q/A pairs.
  InstructionTemplate(std::string preamble, std::vector<Exemplar> exemplars);

  /// Template text: the preamble, then one block per exemplar, each block
  /// introduced by a line reading exactly "---exemplar---".
  static InstructionTemplate parse(std::string_view text);
  static InstructionTemplate load(const std::filesystem::path& path);

  const std::string& preamble() const noexcept { return preamble_; }
  const std::vector<Exemplar>& exemplars() const noexcept { return exemplars_; }

 private:
  std::string preamble_;
  std::vector<Exemplar> exemplars_;
};

inline constexpr std::string_view kExemplarSeparator = "---exemplar---";

/// The completion region of one exemplar as it appears in a rendered
/// instruction: the "text2img prompt:" line followed by its Q/A lines.
std::string render_completion(const Exemplar& exemplar);

std::string render_instruction(const InstructionTemplate& tmpl, const NaturalPromptRecord& natural);

struct ParseOptions {
  /// Reject any unrecognised non-blank line after the prompt.
  bool strict = false;
};

struct ParsedSynthesis {
  std::string visual_prompt;
  std::vector<QaPair> qa_pairs;
};

/// Line-oriented, tolerant parser for the completion format. Never throws
/// anything but ParseError.
ParsedSynthesis parse_synthesis_output(std::string_view raw, const ParseOptions& options = {});

struct SynthesisOptions {
  Decoding decoding;
  int max_retries = 2;
  /// Added to the temperature on each retry.
  double retry_temperature_step = 0.2;
  /// Warn when characters / 4 exceeds this many tokens.
  std::size_t prompt_token_budget = 77;
  ParseOptions parse;
};

struct SynthesisResult {
  VisualPrompt visual_prompt;
  std::vector<VerificationQuestion> questions;
  std::string raw_completion;
  int attempts = 0;
  std::vector<std::string> warnings;
};

/// Questions with ids "{prompt_id}.q{n}", kinds classified, status generated.
std::vector<VerificationQuestion> make_questions(std::string_view prompt_id, const std::vector<QaPair>& pairs);

SynthesisResult synthesize(const NaturalPromptRecord& natural, Backend& backend,
                           const InstructionTemplate& tmpl, const SynthesisOptions& options = {});

/// Same question generation as synthesize, but the natural text is used as
/// the visual prompt verbatim.
SynthesisResult passthrough(const NaturalPromptRecord& natural, Backend& backend,
                            const InstructionTemplate& tmpl, const SynthesisOptions& options = {});

}  // namespace nl2vi
