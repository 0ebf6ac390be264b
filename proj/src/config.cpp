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

#include "nl2vi/config.hpp"

#include <set>

#include "nl2vi/errors.hpp"
#include "nl2vi/store.hpp"

namespace nl2vi {

namespace fs = std::filesystem;

std::string_view to_string(RunMode m) noexcept { return m == RunMode::nl2vi ? "nl2vi" : "passthrough"; }

RunMode parse_run_mode(std::string_view s) {
  if (s == "nl2vi") return RunMode::nl2vi;
  if (s == "passthrough") return RunMode::passthrough;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

namespace {

// Reads typed fields from one object and rejects keys nobody asked for.
class Section {
 public:
  Section(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      fail(key, "wrong type");
    }
  }

  void get_path(const char* key, fs::path& out, const fs::path& base) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    fs::path p(s);
    out = p.is_absolute() ? p : (base / p).lexically_normal();
  }

  template <typename E, typename Parse>
  void get_enum(const char* key, E& out, Parse parse) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const Json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) fail(key.c_str(), "unknown key");
    }
  }

  [[noreturn]] void fail(const char* key, const std::string& why) const {
    std::string at = where_;
    if (key && *key) at += at.empty() ? key : std::string(".") + key;
    throw ConfigError((at.empty() ? std::string("config") : at) + ": " + why);
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

BackendDescriptor backend_from_json(Role role, const Json& j, const fs::path& base) {
  Section s(j, "backends." + std::string(to_string(role)));
  BackendDescriptor d;
  d.role = role;
  s.get_enum("kind", d.kind, parse_backend_kind);
  s.get("model", d.model_name);
  s.get("endpoint", d.endpoint);
  s.get("credentials_env", d.credentials_env);
  s.get_path("fixture_path", d.fixture_path, base);
  long long timeout_ms = d.timeout.count();
  s.get("timeout_ms", timeout_ms);
  d.timeout = std::chrono::milliseconds(timeout_ms);
  s.get("max_in_flight", d.max_in_flight);
  if (s.has("retry")) {
    Section r(s.raw("retry"), "backends." + std::string(to_string(role)) + ".retry");
    long long backoff_ms = d.retry.backoff_base.count();
    r.get("max_attempts", d.retry.max_attempts);
    r.get("backoff_ms", backoff_ms);
    d.retry.backoff_base = std::chrono::milliseconds(backoff_ms);
    r.finish();
  }
  s.finish();
  return d;
}

}  // namespace

PipelineConfig config_from_json(const Json& doc, const fs::path& base_dir) {
  PipelineConfig c;
  Section top(doc, "");
  top.get_path("template_path", c.template_path, base_dir);
  top.get_enum("mode", c.mode, parse_run_mode);
  top.get("concurrency", c.concurrency);
  top.get_path("store_root", c.store_root, base_dir);
  top.get_path("cache_root", c.cache_root, base_dir);

  if (top.has("backends")) {
    const Json& backends = top.raw("backends");
    if (!backends.is_object()) throw ConfigError("backends: expected an object");
    for (const auto& [name, value] : backends.items()) {
      Role role;
      try {
        role = parse_role(name);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("backends." + name + ": " + e.what());
      }
      c.backends[role] = backend_from_json(role, value, base_dir);
    }
  }
  if (top.has("synthesis")) {
    Section s(top.raw("synthesis"), "synthesis");
    s.get("temperature", c.synthesis.decoding.temperature);
    s.get("max_tokens", c.synthesis.decoding.max_tokens);
    s.get("max_retries", c.synthesis.max_retries);
    s.get("retry_temperature_step", c.synthesis.retry_temperature_step);
    s.get("prompt_token_budget", c.synthesis.prompt_token_budget);
    s.get("strict", c.synthesis.parse.strict);
    s.finish();
  }
  if (top.has("generation")) {
    Section s(top.raw("generation"), "generation");
    s.get("n_candidates", c.generation.n_candidates);
    s.get("base_seed", c.generation.base_seed);
    s.get("seed_stride", c.generation.seed_stride);
    s.finish();
  }
  if (top.has("filter")) {
    Section s(top.raw("filter"), "filter");
    s.get("entail_threshold", c.filter.entail_threshold);
    s.get_enum("binary_rule", c.filter.binary_rule, parse_binary_rule);
    s.get("drop_unanswerable", c.filter.drop_unanswerable);
    s.get("best_effort", c.filter.best_effort);
    s.finish();
  }
  if (top.has("matchers")) {
    Section s(top.raw("matchers"), "matchers");
    s.get_enum("open_matcher", c.matchers.open_matcher, parse_matcher_kind);
    s.get("nli_threshold", c.matchers.nli_threshold);
    s.get("semantic_threshold", c.matchers.semantic_threshold);
    s.get("vqa_context", c.matchers.vqa_context);
    s.get("weighted", c.matchers.weighted);
    s.get("binary_weight", c.matchers.binary_weight);
    s.get("open_weight", c.matchers.open_weight);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc, fs::absolute(path).parent_path());
}

void PipelineConfig::validate() const {
  auto require = [&](Role r) {
    if (!backends.count(r)) throw ConfigError("no backend configured for role " + std::string(to_string(r)));
  };
  require(Role::text_gen);
  require(Role::image_gen);
  require(Role::vqa);
  require(Role::text_qa);
  if (matchers.open_matcher == MatcherKind::nli) require(Role::entailment);
  if (matchers.open_matcher == MatcherKind::semantic) require(Role::similarity);
  for (const auto& [role, d] : backends) {
    if (d.role != role) throw ConfigError("backend registered under the wrong role");
    d.validate();
  }
  if (template_path.empty()) throw ConfigError("template_path is required");
  if (store_root.empty()) throw ConfigError("store_root is required");
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  if (synthesis.max_retries < 0) throw ConfigError("synthesis.max_retries must be >= 0");
  if (synthesis.decoding.max_tokens < 1) throw ConfigError("synthesis.max_tokens must be >= 1");
  try {
    generation.validate();
    filter.validate();
    matchers.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

Json effective_settings(const PipelineConfig& c) {
  Json backends = Json::object();
  for (const auto& [role, d] : c.backends) {
    backends[std::string(to_string(role))] =
        Json{{"kind", std::string(to_string(d.kind))}, {"model", d.model_name}};
  }
  return Json{
      {"mode", std::string(to_string(c.mode))},
      {"synthesis",
       {{"temperature", c.synthesis.decoding.temperature},
        {"max_tokens", c.synthesis.decoding.max_tokens},
        {"max_retries", c.synthesis.max_retries},
        {"retry_temperature_step", c.synthesis.retry_temperature_step},
        {"prompt_token_budget", c.synthesis.prompt_token_budget},
        {"strict", c.synthesis.parse.strict}}},
      {"generation",
       {{"n_candidates", c.generation.n_candidates},
        {"base_seed", c.generation.base_seed},
        {"seed_stride", c.generation.seed_stride}}},
      {"filter",
       {{"entail_threshold", c.filter.entail_threshold},
        {"binary_rule", std::string(to_string(c.filter.binary_rule))},
        {"drop_unanswerable", c.filter.drop_unanswerable},
        {"best_effort", c.filter.best_effort}}},
      {"matchers",
       {{"open_matcher", std::string(to_string(c.matchers.open_matcher))},
        {"nli_threshold", c.matchers.nli_threshold},
        {"semantic_threshold", c.matchers.semantic_threshold},
        {"vqa_context", c.matchers.vqa_context},
        {"weighted", c.matchers.weighted},
        {"binary_weight", c.matchers.binary_weight},
        {"open_weight", c.matchers.open_weight}}},
      {"backends", std::move(backends)},
  };
}

}  // namespace

Json config_to_json(const PipelineConfig& c) {
  Json j = effective_settings(c);
  for (const auto& [role, d] : c.backends) {
    Json& b = j["backends"][std::string(to_string(role))];
    if (!d.endpoint.empty()) b["endpoint"] = d.endpoint;
    if (!d.credentials_env.empty()) b["credentials_env"] = d.credentials_env;
    if (!d.fixture_path.empty()) b["fixture_path"] = d.fixture_path.string();
    b["timeout_ms"] = d.timeout.count();
    b["max_in_flight"] = d.max_in_flight;
    b["retry"] = Json{{"max_attempts", d.retry.max_attempts}, {"backoff_ms", d.retry.backoff_base.count()}};
  }
  j["template_path"] = c.template_path.string();
  j["concurrency"] = c.concurrency;
  j["store_root"] = c.store_root.string();
  if (!c.cache_root.empty()) j["cache_root"] = c.cache_root.string();
  return j;
}

std::string config_digest(const PipelineConfig& c) {
  Json j = effective_settings(c);
  std::string tmpl;
  try {
    tmpl = read_text(c.template_path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  j["template_sha256"] = sha256_hex(tmpl);
  return sha256_hex(canonical_dump(j));
}

}  // namespace nl2vi
