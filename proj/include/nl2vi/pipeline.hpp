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

// Orchestration of synthesis, filtering, generation and verification over a
// corpus, plus the evaluation entry point.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nl2vi/config.hpp"
#include "nl2vi/errors.hpp"
#include "nl2vi/metrics.hpp"
#include "nl2vi/store.hpp"

namespace nl2vi {

/// Phase names recorded for per-prompt failures.
namespace phase {
inline constexpr const char* kSynthesis = "synthesis";
inline constexpr const char* kFilter = "filter";
inline constexpr const char* kGeneration = "generation";
inline constexpr const char* kVerification = "verification";
inline constexpr const char* kPersist = "persist";
}  // namespace phase

struct PromptFailure {
  std::string prompt_id;
  std::string phase;
  std::string error;

  bool operator==(const PromptFailure&) const = default;
};

struct RunSummary {
  std::string run_id;
  std::string started_at;
  std::string finished_at;
  std::size_t n_prompts = 0;
  /// Includes prompts skipped because a matching report already existed.
  std::size_t n_succeeded = 0;
  std::size_t n_failed = 0;
  std::size_t n_skipped = 0;
  /// Sorted by prompt id.
  std::vector<PromptFailure> failures;
  std::string config_digest;
};

Json to_json(const RunSummary& s);
RunSummary run_summary_from_json(const Json& j);
std::filesystem::path run_summary_path(const std::filesystem::path& store_root, std::string_view run_id);

/// "run-{utc timestamp}-{random hex}".
std::string new_run_id();

struct RunOptions {
  /// Skip prompts whose stored report carries the current config digest.
  bool resume = false;
  /// Generated when empty.
  std::string run_id;
};

/// Phase 1 and the filter for one record. Records that ship both a visual
/// prompt and questions skip the text-generation backend.
SynthesisResult synthesize_record(const DatasetRecord& record, const PipelineConfig& config,
                                  const InstructionTemplate& tmpl, const BackendSet& backends);
SynthesisResult filter_synthesis(SynthesisResult synthesis, const PipelineConfig& config,
                                 const BackendSet& backends);

Json to_json(const SynthesisResult& s);
SynthesisResult synthesis_from_json(const Json& j);

/// One configured pipeline: backends, shared call cache, artifact store.
class Pipeline {
 public:
  /// Builds backends from the descriptors in `config`.
  explicit Pipeline(PipelineConfig config);
  /// Uses caller-supplied backends (tests, instrumented runs).
  Pipeline(PipelineConfig config, BackendSet backends);

  const PipelineConfig& config() const noexcept { return config_; }
  const std::string& config_digest() const noexcept { return digest_; }
  const BackendSet& backends() const noexcept { return backends_; }
  const InstructionTemplate& instruction_template() const noexcept { return *template_; }
  const ArtifactStore& artifacts() const noexcept { return artifacts_; }

  /// All phases for one record. Errors propagate with their phase attached
  /// (see PhaseError).
  ConsistencyReport process(const DatasetRecord& record) const;

  /// Bounded worker pool over the records; failures are isolated per
  /// prompt. The summary is written under {store_root}/runs/.
  RunSummary run(std::span<const DatasetRecord> records, const RunOptions& options = {}) const;

 private:
  PipelineConfig config_;
  BackendSet backends_;
  std::string digest_;
  std::unique_ptr<InstructionTemplate> template_;
  ArtifactStore artifacts_;
};

/// Wraps a per-prompt error with the phase that raised it.
class PhaseError : public Error {
 public:
  PhaseError(std::string phase, const std::exception& cause);
  const std::string& phase() const noexcept { return phase_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  std::string phase_;
  std::string cause_;
};

/// Throws ConfigError or DatasetError; per-prompt errors end up in the summary.
RunSummary run_pipeline(const std::filesystem::path& dataset_path, const PipelineConfig& config,
                        const RunOptions& options = {});

struct Evaluation {
  MetricReport report;
  std::vector<PrecisionPoint> curve;
  std::vector<HistogramBin> histogram;
};

/// Metrics over an annotation export joined to the run's reports.
/// NoPositives propagates from the metrics.
Evaluation evaluate(const std::filesystem::path& run_root, const std::filesystem::path& annotations_export,
                    double threshold, int histogram_bins = 10);

/// Plain-text table of the local result next to the published reference
/// figures, followed by the curve and histogram as CSV blocks.
std::string format_evaluation(const Evaluation& evaluation);

}  // namespace nl2vi
