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

// Declarative pipeline configuration, loaded from one JSON document.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "nl2vi/candidates.hpp"
#include "nl2vi/canonical.hpp"
#include "nl2vi/filter.hpp"
#include "nl2vi/gateway.hpp"
#include "nl2vi/synthesis.hpp"
#include "nl2vi/verifier.hpp"

namespace nl2vi {

enum class RunMode { nl2vi, passthrough };

std::string_view to_string(RunMode m) noexcept;
RunMode parse_run_mode(std::string_view s);

struct PipelineConfig {
  std::map<Role, BackendDescriptor> backends;
  std::filesystem::path template_path;
  SynthesisOptions synthesis;
  GenerationConfig generation;
  FilterConfig filter;
  MatcherConfig matchers;
  RunMode mode = RunMode::nl2vi;
  /// Prompts processed in parallel.
  int concurrency = 4;
  std::filesystem::path store_root;
  /// Empty keeps the call cache in memory for the lifetime of the process.
  std::filesystem::path cache_root;

  /// Throws ConfigError. Required roles: text_gen, image_gen, vqa, text_qa,
  /// plus entailment unless open_matcher is semantic and similarity when it is.
  void validate() const;
};

/// Relative paths in `doc` resolve against `base_dir`. Unknown keys are
/// rejected. Throws ConfigError.
PipelineConfig config_from_json(const Json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
Json config_to_json(const PipelineConfig& config);

/// SHA-256 over every setting that can change a report: mode, template
/// content, decoding, generation, filter and matcher settings, and each
/// backend's kind and model. Paths, endpoints, timeouts, retry and
/// concurrency settings are excluded.
std::string config_digest(const PipelineConfig& config);

}  // namespace nl2vi
