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

// Builds the fixture corpus from a hand-authored scenario.
//
// The scenario states, per prompt, what each model role should answer in
// plain terms (the completion text, the QA answer for question n, the VQA
// answer for question n on candidate k, ...). This tool runs the real
// pipeline once against scripted transports that answer from the scenario,
// records every request it sees, and writes the digest-keyed fixture files
// the fixture backends replay. It also writes the dataset, the failure
// variant of the text-generation fixture, the golden reports and the
// hand-authored rating log.
//
// usage: nl2vi_fixtures --scenario S --config C --out DIR [--golden DIR]

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>

#include <CLI11.hpp>

#include "nl2vi/errors.hpp"
#include "nl2vi/pipeline.hpp"

namespace fs = std::filesystem;
using namespace nl2vi;

namespace {

struct PromptScript {
  DatasetRecord record;
  std::vector<std::string> completions;          // by attempt; the last one repeats
  std::vector<std::string> failure_completions;  // failure variant only
  std::map<int, TextAnswer> qa;                  // question index (1-based)
  std::map<int, std::map<std::string, double>> entail;
  std::map<int, std::vector<Json>> vqa;          // per candidate; null = expected answer
  std::vector<int> ratings;                      // per candidate
};

struct Scenario {
  std::vector<PromptScript> prompts;
  std::string rater = "fixture-rater";
};

Scenario load_scenario(const fs::path& path) {
  const Json doc = Json::parse(read_text(path));
  Scenario s;
  s.rater = doc.value("rater", s.rater);
  for (const Json& p : doc.at("prompts")) {
    PromptScript ps;
    ps.record.id = p.at("id").get<std::string>();
    ps.record.domain = parse_domain(p.at("domain").get<std::string>());
    ps.record.natural_prompt = p.at("natural").get<std::string>();
    if (p.contains("completion")) ps.completions.push_back(p.at("completion").get<std::string>());
    if (p.contains("completions")) ps.completions = p.at("completions").get<std::vector<std::string>>();
    ps.failure_completions = p.value("failure_completions", std::vector<std::string>{});
    const Json qa_table = p.value("qa", Json::object());
    for (const auto& [k, v] : qa_table.items()) {
      ps.qa[std::stoi(k)] = TextAnswer{v.at("answer").get<std::string>(), v.value("answerable", true)};
    }
    const Json entail_table = p.value("entail", Json::object());
    for (const auto& [k, v] : entail_table.items()) {
      for (const auto& [answer, prob] : v.items()) ps.entail[std::stoi(k)][answer] = prob.get<double>();
    }
    const Json vqa_table = p.value("vqa", Json::object());
    for (const auto& [k, v] : vqa_table.items()) {
      ps.vqa[std::stoi(k)] = std::vector<Json>(v.begin(), v.end());
    }
    ps.ratings = p.value("ratings", std::vector<int>{});
    s.prompts.push_back(std::move(ps));
  }
  return s;
}

// Answers from the scenario. Lookups go through the same request builders
// the pipeline uses, so the request text is the key.
class ScriptedTransport final : public Transport {
 public:
  ScriptedTransport(Role role, const Scenario& scenario, const PipelineConfig& cfg,
                    const InstructionTemplate& tmpl, bool failure_variant)
      : role_(role), scenario_(scenario), cfg_(cfg), failure_(failure_variant) {
    for (std::size_t i = 0; i < scenario.prompts.size(); ++i) {
      const auto& p = scenario.prompts[i];
      by_instruction_[render_instruction(tmpl, p.record.natural())] = i;
      const auto seeds = candidate_seeds(cfg.generation);
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        const std::uint64_t seed = seeds[k];
        by_image_[make_image_id(p.record.id, seed, cfg.backends.at(Role::image_gen).model_name)] = {i, k};
      }
    }
  }

  Json send(const Json& request, const std::string&) override {
    switch (role_) {
      case Role::text_gen: return text_gen(request);
      case Role::text_qa: return text_qa(request);
      case Role::vqa: return vqa(request);
      case Role::entailment: return nli(request);
      default: throw std::logic_error("no scripted answers for role " + std::string(to_string(role_)));
    }
  }

 private:
  // Parsed questions of prompt i, as the pipeline sees them.
  const std::vector<VerificationQuestion>& questions(std::size_t i) {
    std::lock_guard lock(mutex_);
    auto it = questions_.find(i);
    if (it == questions_.end()) {
      const auto& p = scenario_.prompts[i];
      const ParsedSynthesis parsed = parse_synthesis_output(p.completions.at(0), cfg_.synthesis.parse);
      it = questions_.emplace(i, make_questions(p.record.id, parsed.qa_pairs)).first;
      visual_[i] = parsed.visual_prompt;
    }
    return it->second;
  }

  // (prompt, 1-based question index) for a question text asked against a
  // prompt's visual prompt (or natural text in passthrough mode).
  std::pair<std::size_t, int> locate(const std::string& question, const std::string& passage) {
    for (std::size_t i = 0; i < scenario_.prompts.size(); ++i) {
      const auto& qs = questions(i);
      const bool passage_matches =
          passage.empty() || passage == visual_[i] || passage == scenario_.prompts[i].record.natural_prompt;
      if (!passage_matches) continue;
      for (std::size_t n = 0; n < qs.size(); ++n) {
        if (qs[n].text == question) return {i, static_cast<int>(n + 1)};
      }
    }
    throw std::runtime_error("scenario has no question '" + question + "'");
  }

  Json text_gen(const Json& request) {
    const auto it = by_instruction_.find(request.at("instruction").get<std::string>());
    if (it == by_instruction_.end()) throw std::runtime_error("unknown instruction");
    const auto& p = scenario_.prompts[it->second];
    const auto& list = failure_ && !p.failure_completions.empty() ? p.failure_completions : p.completions;
    const double temperature = request.at("temperature").get<double>() - cfg_.synthesis.decoding.temperature;
    const auto attempt = static_cast<std::size_t>(std::lround(temperature / cfg_.synthesis.retry_temperature_step));
    return list.at(std::min(attempt, list.size() - 1));
  }

  Json text_qa(const Json& request) {
    const auto [i, n] = locate(request.at("question"), request.at("passage"));
    const auto& p = scenario_.prompts[i];
    if (auto it = p.qa.find(n); it != p.qa.end()) {
      return Json{{"answer", it->second.answer}, {"answerable", it->second.answerable}};
    }
    return Json{{"answer", questions(i)[n - 1].expected}, {"answerable", true}};
  }

  Json vqa(const Json& request) {
    const auto it = by_image_.find(request.at("image_id").get<std::string>());
    if (it == by_image_.end()) throw std::runtime_error("unknown image id");
    const auto [i, k] = it->second;
    const auto& p = scenario_.prompts[i];
    const std::string question = request.at("question");
    const auto& qs = questions(i);
    for (std::size_t n = 0; n < qs.size(); ++n) {
      if (qs[n].text != question) continue;
      if (auto v = p.vqa.find(static_cast<int>(n + 1)); v != p.vqa.end() && !v->second.at(k).is_null()) {
        return Json{{"answer", v->second.at(k)}};
      }
      return Json{{"answer", qs[n].expected}};
    }
    throw std::runtime_error("unknown vqa question '" + question + "'");
  }

  // premise "question: Q answer: A", hypothesis "question: Q answer: E".
  Json nli(const Json& request) {
    const std::string premise = request.at("premise");
    const std::string hypothesis = request.at("hypothesis");
    const std::string q_prefix = "question: ";
    const auto split = [&](const std::string& s) {
      const auto at = s.rfind(" answer: ");
      return std::make_pair(s.substr(q_prefix.size(), at - q_prefix.size()), s.substr(at + 9));
    };
    const auto [question, answer] = split(premise);
    for (std::size_t i = 0; i < scenario_.prompts.size(); ++i) {
      const auto& qs = questions(i);
      for (std::size_t n = 0; n < qs.size(); ++n) {
        if (qs[n].text != question || hypothesis != nli_statement(qs[n].text, qs[n].expected)) continue;
        double p = 0.0;
        const auto& table = scenario_.prompts[i].entail;
        if (auto t = table.find(static_cast<int>(n + 1)); t != table.end()) {
          if (auto a = t->second.find(answer); a != t->second.end()) p = a->second;
        }
        return Json{{"entail", p}, {"neutral", 0.0}, {"contradict", quantize_score(1.0 - p)}};
      }
    }
    throw std::runtime_error("unknown nli pair: " + premise);
  }

  Role role_;
  const Scenario& scenario_;
  const PipelineConfig& cfg_;
  bool failure_;
  std::map<std::string, std::size_t> by_instruction_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_image_;
  std::mutex mutex_;
  std::map<std::size_t, std::vector<VerificationQuestion>> questions_;
  std::map<std::size_t, std::string> visual_;
};

// Records digest -> (request, response) for everything that passes through.
class Recorder final : public Transport {
 public:
  explicit Recorder(std::unique_ptr<Transport> inner) : inner_(std::move(inner)) {}

  Json send(const Json& request, const std::string& digest) override {
    Json response = inner_->send(request, digest);
    std::lock_guard lock(mutex_);
    entries_[digest] = Json{{"digest", digest}, {"request", request}, {"response", response}};
    return response;
  }

  std::string jsonl() const {
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& [_, e] : entries_) out += canonical_dump(e) + "\n";
    return out;
  }

 private:
  std::unique_ptr<Transport> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, Json> entries_;
};

struct Harness {
  BackendSet set;
  std::map<Role, Recorder*> recorders;
};

Harness scripted_backends(const Scenario& scenario, const PipelineConfig& cfg, const InstructionTemplate& tmpl,
                          bool failure_variant) {
  Harness h;
  for (const auto& [role, d] : cfg.backends) {
    if (role == Role::image_gen) {
      h.set.set(std::make_shared<Backend>(d, make_fixture_transport(d), nullptr));
      continue;
    }
    auto recorder = std::make_unique<Recorder>(
        std::make_unique<ScriptedTransport>(role, scenario, cfg, tmpl, failure_variant));
    h.recorders[role] = recorder.get();
    h.set.set(std::make_shared<Backend>(d, std::move(recorder), nullptr));
  }
  return h;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Builds fixture files from a scenario"};
  std::string scenario_path, config_path, out_dir, golden_dir;
  app.add_option("--scenario", scenario_path)->required();
  app.add_option("--config", config_path, "Config the fixtures are recorded for")->required();
  app.add_option("--out", out_dir, "Directory for dataset.jsonl and fixtures/")->required();
  app.add_option("--golden", golden_dir, "Directory for the golden reports");
  CLI11_PARSE(app, argc, argv);

  try {
    const Scenario scenario = load_scenario(scenario_path);
    PipelineConfig cfg = load_config(config_path);
    const fs::path scratch = fs::temp_directory_path() / ("nl2vi-fixtures-" + new_run_id());
    cfg.store_root = scratch / "store";
    cfg.concurrency = 1;
    const InstructionTemplate tmpl = InstructionTemplate::load(cfg.template_path);

    std::vector<DatasetRecord> records;
    for (const auto& p : scenario.prompts) records.push_back(p.record);
    fs::create_directories(fs::path(out_dir) / "fixtures");
    save_dataset(records, fs::path(out_dir) / "dataset.jsonl");

    Harness main_run = scripted_backends(scenario, cfg, tmpl, false);
    const RunSummary summary = Pipeline(cfg, main_run.set).run(records);
    if (summary.n_failed) {
      for (const auto& f : summary.failures) std::cerr << f.prompt_id << " " << f.phase << ": " << f.error << "\n";
      return 1;
    }
    for (const auto& [role, rec] : main_run.recorders) {
      write_text_atomic(fs::path(out_dir) / "fixtures" / (std::string(to_string(role)) + ".jsonl"), rec->jsonl());
    }

    // Failure variant: same corpus, scripted garbage for the prompts that
    // declare failure_completions. Only the text_gen table differs.
    PipelineConfig failure_cfg = cfg;
    failure_cfg.store_root = scratch / "failure";
    Harness failure_run = scripted_backends(scenario, failure_cfg, tmpl, true);
    const RunSummary failure_summary = Pipeline(failure_cfg, failure_run.set).run(records);
    write_text_atomic(fs::path(out_dir) / "fixtures" / "text_gen_failure.jsonl",
                      failure_run.recorders.at(Role::text_gen)->jsonl());
    std::cerr << "failure variant: " << failure_summary.n_failed << " failed\n";

    // Rating log for the hand-authored labels.
    std::vector<AnnotationRecord> ratings;
    for (const auto& p : scenario.prompts) {
      const auto seeds = candidate_seeds(cfg.generation);
      for (std::size_t k = 0; k < p.ratings.size() && k < seeds.size(); ++k) {
        ratings.push_back({p.record.id, make_image_id(p.record.id, seeds[k], cfg.backends.at(Role::image_gen).model_name),
                           scenario.rater, p.ratings[k], "2026-01-01T00:00:00.000Z"});
      }
    }
    write_text_atomic(fs::path(out_dir) / "annotations.log", annotations_to_jsonl(ratings));

    if (!golden_dir.empty()) {
      fs::remove_all(fs::path(golden_dir) / "reports");
      fs::create_directories(fs::path(golden_dir) / "reports");
      for (const auto& id : list_reports(cfg.store_root)) {
        fs::copy_file(report_path(cfg.store_root, id), report_path(golden_dir, id));
      }
    }
    fs::remove_all(scratch);
    std::cerr << "recorded " << summary.n_succeeded << " prompts\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
