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

#include "nl2vi/model.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "nl2vi/errors.hpp"

namespace nl2vi {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& names,
             const char* what) {
  for (const auto& [name, value] : names) {
    if (name == s) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Domain>, 3> kDomains{{
    {"recipes", Domain::recipes}, {"wikihow", Domain::wikihow}, {"other", Domain::other}}};
constexpr std::array<std::pair<std::string_view, PromptMode>, 2> kModes{{
    {"rewritten", PromptMode::rewritten}, {"passthrough", PromptMode::passthrough}}};
constexpr std::array<std::pair<std::string_view, QuestionKind>, 2> kKinds{{
    {"binary", QuestionKind::binary}, {"open", QuestionKind::open}}};
constexpr std::array<std::pair<std::string_view, QuestionStatus>, 3> kStatuses{{
    {"generated", QuestionStatus::generated},
    {"kept", QuestionStatus::kept},
    {"dropped", QuestionStatus::dropped}}};
constexpr std::array<std::pair<std::string_view, MatcherKind>, 3> kMatchers{{
    {"equality", MatcherKind::equality}, {"nli", MatcherKind::nli}, {"semantic", MatcherKind::semantic}}};

template <typename E, std::size_t N>
std::string_view name_of(E value, const std::array<std::pair<std::string_view, E>, N>& names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

bool strip_leading_article(std::string& s) {
  for (std::string_view article : {"a ", "an ", "the "}) {
    if (s.size() > article.size() && s.compare(0, article.size(), article) == 0) {
      s.erase(0, article.size());
      return true;
    }
  }
  return false;
}

bool strip_trailing(std::string& s) {
  bool changed = false;
  while (!s.empty() && (is_terminal_punct(s.back()) || s.back() == ' ')) {
    s.pop_back();
    changed = true;
  }
  return changed;
}

}  // namespace

const char* to_string(ParseErrorKind kind) noexcept {
  switch (kind) {
    case ParseErrorKind::missing_prompt: return "missing_prompt";
    case ParseErrorKind::no_questions: return "no_questions";
    case ParseErrorKind::malformed_line: return "malformed_line";
  }
  return "?";
}

std::string_view to_string(Domain d) noexcept { return name_of(d, kDomains); }
std::string_view to_string(PromptMode m) noexcept { return name_of(m, kModes); }
std::string_view to_string(QuestionKind k) noexcept { return name_of(k, kKinds); }
std::string_view to_string(QuestionStatus s) noexcept { return name_of(s, kStatuses); }
std::string_view to_string(MatcherKind m) noexcept { return name_of(m, kMatchers); }

Domain parse_domain(std::string_view s) { return parse_enum(s, kDomains, "domain"); }
PromptMode parse_prompt_mode(std::string_view s) { return parse_enum(s, kModes, "prompt mode"); }
QuestionKind parse_question_kind(std::string_view s) { return parse_enum(s, kKinds, "question kind"); }
QuestionStatus parse_question_status(std::string_view s) {
  return parse_enum(s, kStatuses, "question status");
}
MatcherKind parse_matcher_kind(std::string_view s) { return parse_enum(s, kMatchers, "matcher"); }

std::string normalize_answer(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  // Stripping one side can expose the other ("the ?" -> "the"), so iterate.
  bool changed = true;
  while (changed) {
    changed = strip_trailing(out);
    changed = strip_leading_article(out) || changed;
  }
  return out;
}

QuestionKind classify_question_kind(std::string_view expected) {
  const std::string n = normalize_answer(expected);
  return (n == "yes" || n == "no") ? QuestionKind::binary : QuestionKind::open;
}

double quantize_score(double value) { return std::round(value * 1e6) / 1e6; }

double pass_fraction(std::size_t passed, std::size_t kept) {
  if (kept == 0) return 0.0;
  return quantize_score(static_cast<double>(passed) / static_cast<double>(kept));
}

double score_from_verdicts(std::span<const QuestionVerdict> verdicts) {
  std::size_t passed = 0;
  for (const auto& v : verdicts) passed += v.passed ? 1 : 0;
  return pass_fraction(passed, verdicts.size());
}

bool rating_is_consistent(int rating, int cut) { return rating >= cut; }

ParseError::ParseError(ParseErrorKind kind, std::size_t line_no, const std::string& detail)
    : Error("ParseError", std::string(to_string(kind)) +
                              (line_no ? " at line " + std::to_string(line_no) : std::string()) +
                              (detail.empty() ? std::string() : ": " + detail)),
      parse_kind_(kind),
      line_no_(line_no) {}

SynthesisFailed::SynthesisFailed(const ParseError& last, int attempts)
    : Error("SynthesisFailed",
            "no parseable completion after " + std::to_string(attempts) + " attempts; last " + last.what()),
      last_(last),
      attempts_(attempts) {}

SchemaError::SchemaError(std::size_t line_no, std::string field, const std::string& detail)
    : Error("SchemaError", "line " + std::to_string(line_no) + ", field '" + field + "': " + detail),
      line_no_(line_no),
      field_(std::move(field)) {}

namespace {
std::string join_lines(const std::vector<std::size_t>& lines) {
  std::string s;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(lines[i]);
  }
  return s;
}
}  // namespace

DuplicateId::DuplicateId(std::string id, std::vector<std::size_t> lines)
    : Error("DuplicateId", "id '" + id + "' on lines " + join_lines(lines)),
      id_(std::move(id)),
      lines_(std::move(lines)) {}

}  // namespace nl2vi
