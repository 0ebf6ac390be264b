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

#include "nl2vi/synthesis.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "nl2vi/errors.hpp"
#include "text_util.hpp"

namespace nl2vi {

namespace {

constexpr std::string_view kPromptMarker = "text2img prompt:";
constexpr std::string_view kQuestionsHeader = "questions:";

bool is_question_line(std::string_view t) { return t.size() >= 2 && t[0] == 'Q' && t[1] == ':'; }

std::size_t find_marker(std::string_view line) { return text::to_lower(line).find(kPromptMarker); }

/// Index of the "A:" that separates question from answer, or npos.
std::size_t find_answer_tag(std::string_view body) {
  for (std::size_t p = body.find("A:"); p != std::string_view::npos; p = body.find("A:", p + 1)) {
    if (p == 0 || text::is_space(body[p - 1]) || body[p - 1] == '?') return p;
  }
  return std::string_view::npos;
}

std::string description_of(std::string_view line) {
  std::string_view rest = text::trim(line.substr(std::string_view("Description:").size()));
  if (rest.size() >= 2 && rest.front() == '"' && rest.back() == '"') {
    rest = rest.substr(1, rest.size() - 2);
  } else if (!rest.empty() && rest.front() == '"') {
    rest.remove_prefix(1);
  }
  return std::string(text::trim(rest));
}

}  // namespace

InstructionTemplate::InstructionTemplate(std::string preamble, std::vector<Exemplar> exemplars)
    : preamble_(std::move(preamble)), exemplars_(std::move(exemplars)) {
  if (exemplars_.empty()) throw std::invalid_argument("instruction template needs at least one exemplar");
  for (const auto& ex : exemplars_) {
    if (ex.qa_pairs.empty()) {
      throw std::invalid_argument("exemplar '" + ex.description.substr(0, 40) + "' has no Q/A pairs");
    }
    if (ex.description.empty() || ex.visual_prompt.empty()) {
      throw std::invalid_argument("exemplar needs a description and a visual prompt");
    }
  }
}

InstructionTemplate InstructionTemplate::parse(std::string_view content) {
  std::vector<std::string> sections(1);
  for (std::string_view line : text::split_lines(content)) {
    if (text::trim(line) == kExemplarSeparator) {
      sections.emplace_back();
      continue;
    }
    sections.back().append(line);
    sections.back().push_back('\n');
  }
  std::string preamble(text::trim(sections.front()));

  std::vector<Exemplar> exemplars;
  for (std::size_t i = 1; i < sections.size(); ++i) {
    const auto lines = text::split_lines(sections[i]);
    Exemplar ex;
    std::size_t body_start = 0;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if (text::trim(lines[k]).starts_with("Description:")) {
        ex.description = description_of(text::trim(lines[k]));
        body_start = k + 1;
        break;
      }
    }
    if (ex.description.empty()) {
      throw std::invalid_argument("template exemplar " + std::to_string(i) + " lacks a Description line");
    }
    std::string body;
    for (std::size_t k = body_start; k < lines.size(); ++k) {
      body.append(lines[k]);
      body.push_back('\n');
    }
    ParsedSynthesis parsed;
    try {
      parsed = parse_synthesis_output(body);
    } catch (const ParseError& e) {
      throw std::invalid_argument("template exemplar " + std::to_string(i) + ": " + e.what());
    }
    ex.visual_prompt = std::move(parsed.visual_prompt);
    ex.qa_pairs = std::move(parsed.qa_pairs);
    exemplars.push_back(std::move(ex));
  }
  return InstructionTemplate(std::move(preamble), std::move(exemplars));
}

InstructionTemplate InstructionTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string render_completion(const Exemplar& exemplar) {
  std::string out = "text2img prompt: " + exemplar.visual_prompt + "\n";
  for (const auto& qa : exemplar.qa_pairs) out += "Q: " + qa.question + " A: " + qa.answer + "\n";
  return out;
}

std::string render_instruction(const InstructionTemplate& tmpl, const NaturalPromptRecord& natural) {
  std::string out = tmpl.preamble();
  out += "\n\n";
  for (const auto& ex : tmpl.exemplars()) {
    out += "Description: \"" + ex.description + "\"\n\n";
    out += render_completion(ex);
    out += "\n";
  }
  out += "Description: \"" + std::string(text::trim(natural.text)) + "\"\n";
  return out;
}

ParsedSynthesis parse_synthesis_output(std::string_view raw, const ParseOptions& options) {
  const auto lines = text::split_lines(raw);

  std::size_t i = 0;
  std::size_t marker_pos = std::string::npos;
  for (; i < lines.size(); ++i) {
    marker_pos = find_marker(lines[i]);
    if (marker_pos != std::string::npos) break;
  }
  if (i == lines.size()) throw ParseError(ParseErrorKind::missing_prompt, 0, "no 'text2img prompt:' marker");

  ParsedSynthesis result;
  std::string prompt(lines[i].substr(marker_pos + kPromptMarker.size()));
  const std::size_t marker_line = i;
  for (++i; i < lines.size(); ++i) {
    const std::string_view t = text::trim(lines[i]);
    if (is_question_line(t) || text::istarts_with(t, kQuestionsHeader) || t.starts_with("Description:")) break;
    if (!t.empty()) {
      prompt.push_back(' ');
      prompt.append(t);
    }
  }
  result.visual_prompt = text::squash(prompt);
  if (result.visual_prompt.empty()) {
    throw ParseError(ParseErrorKind::missing_prompt, marker_line + 1, "empty visual prompt");
  }

  for (; i < lines.size(); ++i) {
    const std::string_view t = text::trim(lines[i]);
    if (t.empty() || text::istarts_with(t, kQuestionsHeader)) continue;
    // A further example means the model kept going past its own block.
    if (t.starts_with("Description:") || find_marker(t) != std::string::npos) break;
    if (!is_question_line(t)) {
      if (options.strict) throw ParseError(ParseErrorKind::malformed_line, i + 1, "unexpected line");
      continue;
    }
    const std::string_view body = t.substr(2);
    const std::size_t tag = find_answer_tag(body);
    if (tag == std::string_view::npos) throw ParseError(ParseErrorKind::malformed_line, i + 1, "Q: without A:");
    QaPair pair{text::squash(body.substr(0, tag)), text::squash(body.substr(tag + 2))};
    if (pair.question.empty() || pair.answer.empty()) {
      throw ParseError(ParseErrorKind::malformed_line, i + 1, "empty question or answer");
    }
    result.qa_pairs.push_back(std::move(pair));
  }
  if (result.qa_pairs.empty()) throw ParseError(ParseErrorKind::no_questions, 0, "no Q/A pairs");
  return result;
}

std::vector<VerificationQuestion> make_questions(std::string_view prompt_id, const std::vector<QaPair>& pairs) {
  std::vector<VerificationQuestion> out;
  out.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    VerificationQuestion q;
    q.qid = std::string(prompt_id) + ".q" + std::to_string(k + 1);
    q.text = pairs[k].question;
    if (q.text.empty() || q.text.back() != '?') q.text.push_back('?');
    q.expected = pairs[k].answer;
    q.kind = classify_question_kind(q.expected);
    q.status = QuestionStatus::generated;
    out.push_back(std::move(q));
  }
  return out;
}

namespace {

SynthesisResult run_synthesis(const NaturalPromptRecord& natural, Backend& backend,
                              const InstructionTemplate& tmpl, const SynthesisOptions& options,
                              PromptMode mode) {
  if (backend.role() != Role::text_gen) throw std::invalid_argument("synthesis needs a text_gen backend");
  const std::string instruction = render_instruction(tmpl, natural);

  std::optional<ParseError> last;
  const int attempts = 1 + std::max(0, options.max_retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    Decoding decoding = options.decoding;
    decoding.temperature += options.retry_temperature_step * attempt;
    std::string raw = complete_text(backend, instruction, decoding);
    ParsedSynthesis parsed;
    try {
      parsed = parse_synthesis_output(raw, options.parse);
    } catch (const ParseError& e) {
      last = e;
      continue;
    }
    SynthesisResult result;
    result.visual_prompt.source_id = natural.id;
    result.visual_prompt.generator = backend.descriptor().model_name;
    result.visual_prompt.mode = mode;
    result.visual_prompt.text = mode == PromptMode::passthrough ? natural.text : parsed.visual_prompt;
    result.questions = make_questions(natural.id, parsed.qa_pairs);
    result.raw_completion = std::move(raw);
    result.attempts = attempt + 1;
    const std::size_t approx_tokens = result.visual_prompt.text.size() / 4;
    if (approx_tokens > options.prompt_token_budget) {
      result.warnings.push_back("visual prompt is ~" + std::to_string(approx_tokens) +
                                " tokens, above the budget of " + std::to_string(options.prompt_token_budget));
    }
    return result;
  }
  throw SynthesisFailed(*last, attempts);
}

}  // namespace

SynthesisResult synthesize(const NaturalPromptRecord& natural, Backend& backend,
                           const InstructionTemplate& tmpl, const SynthesisOptions& options) {
  return run_synthesis(natural, backend, tmpl, options, PromptMode::rewritten);
}

SynthesisResult passthrough(const NaturalPromptRecord& natural, Backend& backend,
                            const InstructionTemplate& tmpl, const SynthesisOptions& options) {
  return run_synthesis(natural, backend, tmpl, options, PromptMode::passthrough);
}

}  // namespace nl2vi
