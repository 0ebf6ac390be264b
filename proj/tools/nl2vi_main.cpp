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

// Command-line entry point.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 dataset error,
// 4 run finished with per-prompt failures, 1 anything else.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nl2vi/errors.hpp"
#include "nl2vi/pipeline.hpp"
#include "nl2vi/service.hpp"

namespace fs = std::filesystem;
using namespace nl2vi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;
constexpr int kExitPartial = 4;

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

// Reads stage records (one JSON object per line) from stdin and writes the
// transformed records to stdout. Returns 4 when any line failed.
template <typename F>
int for_each_stdin_record(F&& transform) {
  std::string line;
  std::size_t line_no = 0;
  int rc = kExitOk;
  while (std::getline(std::cin, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::cout << canonical_dump(transform(Json::parse(line), line_no)) << "\n";
    } catch (const std::exception& e) {
      std::cerr << "line " << line_no << ": " << e.what() << "\n";
      rc = kExitPartial;
    }
  }
  return rc;
}

// Stage records carry the dataset record under "record" and, as phases
// run, "synthesis" and "images". A bare dataset record is also accepted.
DatasetRecord stage_record(const Json& j, std::size_t line_no) {
  return dataset_record_from_json(j.contains("record") ? j.at("record") : j, line_no);
}

std::vector<GeneratedImage> stage_images(const Json& j) {
  std::vector<GeneratedImage> images;
  for (const Json& img : j.at("images")) images.push_back(image_from_json(img));
  return images;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nl2vi: natural language to verified image pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string dataset_path;
  std::string mode;
  bool resume = false;
  int concurrency = 0;
  std::string store_root;
  auto* run = app.add_subcommand("run", "Run every phase over a dataset");
  run->add_option("--dataset", dataset_path, "Dataset JSONL")->required();
  run->add_option("--config", config_path, "Pipeline config JSON")->required();
  run->add_option("--mode", mode, "nl2vi or passthrough")->check(CLI::IsMember({"nl2vi", "passthrough"}));
  run->add_flag("--resume", resume, "Skip prompts whose report matches the current config");
  run->add_option("--concurrency", concurrency, "Override the worker count")->check(CLI::PositiveNumber);
  run->add_option("--store", store_root, "Override store_root");

  auto* synth = app.add_subcommand("synth", "Phase 1 over stdin dataset records");
  auto* filter = app.add_subcommand("filter", "Question filtering over stdin stage records");
  auto* generate = app.add_subcommand("generate", "Candidate generation over stdin stage records");
  auto* verify = app.add_subcommand("verify", "Verification over stdin stage records; prints reports");
  for (auto* sub : {synth, filter, generate, verify}) {
    sub->add_option("--config", config_path, "Pipeline config JSON")->required();
    sub->add_option("--mode", mode, "nl2vi or passthrough")->check(CLI::IsMember({"nl2vi", "passthrough"}));
    sub->add_option("--store", store_root, "Override store_root");
  }

  std::string run_root;
  std::string annotations_path;
  double threshold = 0.5;
  int bins = 10;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Metrics over an annotation export");
  evaluate_cmd->add_option("--run", run_root, "Store root holding reports/")->required();
  evaluate_cmd->add_option("--annotations", annotations_path, "Export CSV")->required();
  evaluate_cmd->add_option("--threshold", threshold, "Consistency threshold")->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);

  std::string bind_address = "127.0.0.1:8080";
  std::string ui_dir;
  std::string auth_env;
  int replicas = 1;
  auto* serve = app.add_subcommand("serve", "HTTP service");
  serve->add_option("--config", config_path, "Pipeline config JSON")->required();
  serve->add_option("--bind", bind_address, "host:port");
  serve->add_option("--ui", ui_dir, "Static asset directory served at /ui/");
  serve->add_option("--auth-token-env", auth_env, "Env var holding a bearer token required on /v1/");
  serve->add_option("--store", store_root, "Override store_root");
  serve->add_option("--replicas", replicas, "Annotation tasks per report")->check(CLI::PositiveNumber);

  std::string out_path;
  bool latest_wins = false;
  int label_cut = 4;
  auto* export_cmd = app.add_subcommand("export-annotations", "Ratings joined with report scores as CSV");
  export_cmd->add_option("--run", run_root, "Store root")->required();
  export_cmd->add_option("--out", out_path, "Output file (default stdout)");
  export_cmd->add_flag("--latest-wins", latest_wins, "Keep the latest rating per (prompt, image, rater)");
  export_cmd->add_option("--label-cut", label_cut, "Ratings at or above count as consistent")
      ->check(CLI::Range(1, 5));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    auto load = [&] {
      PipelineConfig cfg = load_config(config_path);
      if (!mode.empty()) cfg.mode = parse_run_mode(mode);
      if (concurrency > 0) cfg.concurrency = concurrency;
      if (!store_root.empty()) cfg.store_root = fs::absolute(store_root);
      return cfg;
    };

    if (*run) {
      const RunSummary summary = run_pipeline(dataset_path, load(), RunOptions{resume, ""});
      std::cout << canonical_dump(to_json(summary), 2) << "\n";
      return summary.n_failed ? kExitPartial : kExitOk;
    }

    if (*synth || *filter || *generate || *verify) {
      const Pipeline pipeline(load());
      const PipelineConfig& cfg = pipeline.config();
      return for_each_stdin_record([&](const Json& j, std::size_t line_no) {
        const DatasetRecord record = stage_record(j, line_no);
        Json out{{"record", to_json(record)}};
        if (*synth) {
          out["synthesis"] =
              to_json(synthesize_record(record, cfg, pipeline.instruction_template(), pipeline.backends()));
          return out;
        }
        SynthesisResult s = synthesis_from_json(j.at("synthesis"));
        if (*filter) {
          out["synthesis"] = to_json(filter_synthesis(std::move(s), cfg, pipeline.backends()));
          return out;
        }
        out["synthesis"] = to_json(s);
        if (*generate) {
          Json images = Json::array();
          for (const auto& img : generate_candidates(s.visual_prompt, cfg.generation,
                                                     pipeline.backends().at(Role::image_gen), pipeline.artifacts())) {
            images.push_back(to_json(img));
          }
          out["images"] = std::move(images);
          return out;
        }
        return to_json(run_verification(record.natural(), s, stage_images(j), pipeline.backends(), cfg.matchers,
                                        pipeline.config_digest()));
      });
    }

    if (*evaluate_cmd) {
      std::cout << format_evaluation(evaluate(run_root, annotations_path, threshold, bins));
      return kExitOk;
    }

    if (*serve) {
      ServiceOptions options;
      options.ui_dir = ui_dir;
      options.task_replicas = replicas;
      options.dataset_dir = fs::current_path();
      if (!auth_env.empty()) {
        const char* token = std::getenv(auth_env.c_str());
        if (!token || !*token) throw ConfigError("environment variable " + auth_env + " is not set");
        options.bearer_token = token;
      }
      const auto [host, port] = parse_bind_address(bind_address);
      Service service(load(), options);
      const int bound = service.bind(host, port);
      std::cerr << "listening on " << host << ":" << bound << "\n";
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.listen();
      g_service = nullptr;
      return kExitOk;
    }

    if (*export_cmd) {
      const std::string csv = export_to_csv(export_annotations(run_root, ExportOptions{label_cut, latest_wins}));
      if (out_path.empty()) {
        std::cout << csv;
      } else {
        write_text_atomic(out_path, csv);
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const DatasetError& e) {
    std::cerr << e.what() << "\n";
    return kExitDataset;
  } catch (const BindError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
