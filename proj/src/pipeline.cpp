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

#include "nl2vi/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include "nl2vi/errors.hpp"

namespace nl2vi {

namespace fs = std::filesystem;

PhaseError::PhaseError(std::string phase, const std::exception& cause)
    : Error("PhaseError", phase + ": " + cause.what()), phase_(std::move(phase)), cause_(cause.what()) {}

// ------------------------------------------------------------ run summary

Json to_json(const RunSummary& s) {
  Json failures = Json::array();
  for (const auto& f : s.failures) {
    failures.push_back(Json{{"prompt_id", f.prompt_id}, {"phase", f.phase}, {"error", f.error}});
  }
  return Json{{"run_id", s.run_id},
              {"started_at", s.started_at},
              {"finished_at", s.finished_at},
              {"n_prompts", s.n_prompts},
              {"n_succeeded", s.n_succeeded},
              {"n_failed", s.n_failed},
              {"n_skipped", s.n_skipped},
              {"failures", std::move(failures)},
              {"config_digest", s.config_digest}};
}

RunSummary run_summary_from_json(const Json& j) {
  RunSummary s;
  s.run_id = j.at("run_id").get<std::string>();
  s.started_at = j.at("started_at").get<std::string>();
  s.finished_at = j.at("finished_at").get<std::string>();
  s.n_prompts = j.at("n_prompts").get<std::size_t>();
  s.n_succeeded = j.at("n_succeeded").get<std::size_t>();
  s.n_failed = j.at("n_failed").get<std::size_t>();
  s.n_skipped = j.value("n_skipped", std::size_t{0});
  for (const Json& f : j.at("failures")) {
    s.failures.push_back({f.at("prompt_id").get<std::string>(), f.at("phase").get<std::string>(),
                          f.at("error").get<std::string>()});
  }
  s.config_digest = j.at("config_digest").get<std::string>();
  return s;
}

fs::path run_summary_path(const fs::path& store_root, std::string_view run_id) {
  return store_root / "runs" / (std::string(run_id) + ".json");
}

// ------------------------------------------------------- synthesis records

Json to_json(const SynthesisResult& s) {
  Json questions = Json::array();
  for (const auto& q : s.questions) questions.push_back(to_json(q));
  return Json{{"visual_prompt", to_json(s.visual_prompt)},
              {"questions", std::move(questions)},
              {"raw_completion", s.raw_completion},
              {"attempts", s.attempts},
              {"warnings", s.warnings}};
}

SynthesisResult synthesis_from_json(const Json& j) {
  SynthesisResult s;
  s.visual_prompt = visual_prompt_from_json(j.at("visual_prompt"));
  for (const Json& q : j.at("questions")) s.questions.push_back(question_from_json(q));
  s.raw_completion = j.value("raw_completion", std::string());
  s.attempts = j.value("attempts", 0);
  s.warnings = j.value("warnings", std::vector<std::string>{});
  return s;
}

SynthesisResult synthesize_record(const DatasetRecord& record, const PipelineConfig& config,
                                  const InstructionTemplate& tmpl, const BackendSet& backends) {
  const PromptMode mode = config.mode == RunMode::passthrough ? PromptMode::passthrough : PromptMode::rewritten;
  if (record.visual_prompt && record.questions) {
    std::vector<QaPair> pairs;
    for (const auto& q : *record.questions) pairs.push_back({q.text, q.expected});
    SynthesisResult s;
    s.visual_prompt = {mode == PromptMode::passthrough ? record.natural_prompt : *record.visual_prompt, record.id,
                       "dataset", mode};
    s.questions = make_questions(record.id, pairs);
    return s;
  }
  Backend& llm = backends.at(Role::text_gen);
  return mode == PromptMode::passthrough ? passthrough(record.natural(), llm, tmpl, config.synthesis)
                                         : synthesize(record.natural(), llm, tmpl, config.synthesis);
}

SynthesisResult filter_synthesis(SynthesisResult synthesis, const PipelineConfig& config,
                                 const BackendSet& backends) {
  Backend* nli = backends.has(Role::entailment) ? &backends.at(Role::entailment) : nullptr;
  synthesis.questions = filter_questions(synthesis.visual_prompt, std::move(synthesis.questions),
                                         backends.at(Role::text_qa), nli, config.filter, &synthesis.warnings);
  return synthesis;
}

// ----------------------------------------------------------------- pipeline

namespace {

BackendSet build_backends(const PipelineConfig& config) {
  config.validate();
  auto cache = std::make_shared<CallCache>(config.cache_root);
  BackendSet set;
  for (const auto& [role, descriptor] : config.backends) set.set(std::make_shared<Backend>(descriptor, cache));
  return set;
}

}  // namespace

std::string new_run_id() {
  std::random_device rd;
  char suffix[16];
  std::snprintf(suffix, sizeof suffix, "%06x", static_cast<unsigned>(rd()) & 0xffffffu);
  std::string ts = utc_now_iso8601();
  std::string compact;
  for (char c : ts.substr(0, 19)) {
    if (c != '-' && c != ':') compact.push_back(c);
  }
  return "run-" + compact + "Z-" + suffix;
}

namespace {

template <typename F>
auto in_phase(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw PhaseError(name, e);
  }
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config) : Pipeline(config, build_backends(config)) {}

Pipeline::Pipeline(PipelineConfig config, BackendSet backends)
    : config_(std::move(config)), backends_(std::move(backends)), artifacts_(config_.store_root) {
  config_.validate();
  try {
    template_ = std::make_unique<InstructionTemplate>(InstructionTemplate::load(config_.template_path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("template: ") + e.what());
  }
  digest_ = nl2vi::config_digest(config_);
}

ConsistencyReport Pipeline::process(const DatasetRecord& record) const {
  SynthesisResult synthesis =
      in_phase(phase::kSynthesis, [&] { return synthesize_record(record, config_, *template_, backends_); });
  synthesis = in_phase(phase::kFilter, [&] { return filter_synthesis(std::move(synthesis), config_, backends_); });
  const std::vector<GeneratedImage> images = in_phase(phase::kGeneration, [&] {
    return generate_candidates(synthesis.visual_prompt, config_.generation, backends_.at(Role::image_gen),
                               artifacts_);
  });
  ConsistencyReport report = in_phase(phase::kVerification, [&] {
    return run_verification(record.natural(), synthesis, images, backends_, config_.matchers, digest_);
  });
  in_phase(phase::kPersist, [&] {
    save_report(report, config_.store_root);
    return 0;
  });
  return report;
}

RunSummary Pipeline::run(std::span<const DatasetRecord> records, const RunOptions& options) const {
  RunSummary summary;
  summary.run_id = options.run_id.empty() ? new_run_id() : options.run_id;
  summary.started_at = utc_now_iso8601();
  summary.config_digest = digest_;
  summary.n_prompts = records.size();

  enum class Outcome { succeeded, skipped, failed };
  std::vector<Outcome> outcomes(records.size(), Outcome::failed);
  std::vector<PromptFailure> failures(records.size());

  auto work = [&](std::size_t i) {
    const DatasetRecord& record = records[i];
    if (options.resume && has_report(config_.store_root, record.id)) {
      try {
        if (load_report(record.id, config_.store_root).config_digest == digest_) {
          outcomes[i] = Outcome::skipped;
          return;
        }
      } catch (const std::exception&) {
        // Unreadable report: recompute it.
      }
    }
    try {
      process(record);
      outcomes[i] = Outcome::succeeded;
    } catch (const PhaseError& e) {
      failures[i] = {record.id, e.phase(), e.cause()};
    } catch (const std::exception& e) {
      failures[i] = {record.id, "internal", e.what()};
    }
  };

  std::atomic<std::size_t> next{0};
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config_.concurrency), std::max<std::size_t>(records.size(), 1));
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) work(i);
    });
  }
  for (auto& t : workers) t.join();

  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (outcomes[i]) {
      case Outcome::skipped:
        ++summary.n_skipped;
        [[fallthrough]];
      case Outcome::succeeded:
        ++summary.n_succeeded;
        break;
      case Outcome::failed:
        ++summary.n_failed;
        summary.failures.push_back(std::move(failures[i]));
        break;
    }
  }
  std::sort(summary.failures.begin(), summary.failures.end(),
            [](const PromptFailure& a, const PromptFailure& b) { return a.prompt_id < b.prompt_id; });
  summary.finished_at = utc_now_iso8601();
  write_text_atomic(run_summary_path(config_.store_root, summary.run_id), canonical_dump(to_json(summary), 2) + "\n");
  return summary;
}

RunSummary run_pipeline(const fs::path& dataset_path, const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  std::vector<DatasetRecord> records;
  try {
    records = load_dataset(dataset_path);
  } catch (const Error& e) {
    throw DatasetError(e.what());
  }
  Pipeline pipeline(config);
  return pipeline.run(records, options);
}

// --------------------------------------------------------------- evaluation

Evaluation evaluate(const fs::path& run_root, const fs::path& annotations_export, double threshold,
                    int histogram_bins) {
  std::vector<ExportRow> rows = parse_export_csv(read_text(annotations_export));
  std::map<std::string, ConsistencyReport> reports;
  for (auto& row : rows) {
    auto it = reports.find(row.prompt_id);
    if (it == reports.end()) {
      if (!has_report(run_root, row.prompt_id)) throw IoError("no report for exported prompt " + row.prompt_id);
      it = reports.emplace(row.prompt_id, load_report(row.prompt_id, run_root)).first;
    }
    const auto& per_image = it->second.per_image;
    auto img = std::find_if(per_image.begin(), per_image.end(),
                            [&](const ImageVerification& iv) { return iv.image_id == row.image_id; });
    if (img == per_image.end()) throw IoError("report " + row.prompt_id + " has no image " + row.image_id);
    row.score = img->score;
  }
  const std::vector<LabeledScore> items = to_labeled_scores(rows);
  Evaluation out;
  out.report = compute_metric_report(items, threshold);
  out.curve = precision_curve(items);
  std::vector<double> scores;
  for (const auto& it : items) scores.push_back(it.predicted);
  out.histogram = score_histogram(scores, histogram_bins);
  return out;
}

namespace {
std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}
}  // namespace

std::string format_evaluation(const Evaluation& e) {
  std::ostringstream os;
  const MetricReport& r = e.report;
  os << "metric          local\n";
  os << "items           " << r.n_items << "\n";
  os << "auc_ap          " << pct(100.0 * r.auc_ap) << "\n";
  os << "p_at_1          " << (r.p_at_1 ? pct(100.0 * *r.p_at_1) : std::string("undefined")) << "\n";
  os << "accuracy@" << format_fixed6(r.threshold_used).substr(0, 4) << "   " << pct(100.0 * r.accuracy) << "\n";
  os << "\npublished reference: consistency accuracy (%)\n";
  os << "method     llm      vqa    recipes  wikihow\n";
  for (const auto& row : reference::kConsistencyAccuracy) {
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %-8s %-6s %7.1f  %7.1f\n", row.method, row.llm, row.vqa, row.recipes,
                  row.wikihow);
    os << line;
  }
  os << "\npublished reference: prompt alignment (%)\n";
  os << "llm      recipes_auc  recipes_p@1  wikihow_auc  wikihow_p@1\n";
  for (const auto& row : reference::kPromptAlignment) {
    char line[128];
    std::snprintf(line, sizeof line, "%-8s %11.1f  %11.1f  %11.1f  %11.1f\n", row.llm, row.recipes_auc,
                  row.recipes_p_at_1, row.wikihow_auc, row.wikihow_p_at_1);
    os << line;
  }
  os << "\n# curve\nrank,score,precision,recall\n";
  for (const auto& p : e.curve) {
    os << p.rank << "," << format_fixed6(p.score) << "," << format_fixed6(p.precision) << ","
       << format_fixed6(p.recall) << "\n";
  }
  os << "\n# histogram\nlo,hi,count\n";
  for (const auto& b : e.histogram) os << format_fixed6(b.lo) << "," << format_fixed6(b.hi) << "," << b.count << "\n";
  return os.str();
}

}  // namespace nl2vi
