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

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "nl2vi/config.hpp"
#include "nl2vi/gateway.hpp"

namespace nl2vi::testing {

inline std::filesystem::path data_dir() { return NL2VI_DATA_DIR; }
inline std::filesystem::path golden_dir() { return NL2VI_GOLDEN_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("nl2vi-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Transport answering through a callback and counting every request.
class ScriptTransport final : public Transport {
 public:
  using Fn = std::function<Json(const Json&)>;
  explicit ScriptTransport(Fn fn, std::shared_ptr<std::atomic<int>> counter = nullptr)
      : fn_(std::move(fn)), counter_(std::move(counter)) {}

  Json send(const Json& request, const std::string&) override {
    if (counter_) counter_->fetch_add(1);
    return fn_(request);
  }

 private:
  Fn fn_;
  std::shared_ptr<std::atomic<int>> counter_;
};

inline BackendDescriptor fixture_descriptor(Role role, std::string model = "") {
  BackendDescriptor d;
  d.role = role;
  d.kind = BackendKind::fixture;
  d.model_name = model.empty() ? "test-" + std::string(to_string(role)) : std::move(model);
  d.fixture_path = "unused";
  return d;
}

inline std::shared_ptr<Backend> script_backend(Role role, ScriptTransport::Fn fn,
                                               std::shared_ptr<std::atomic<int>> counter = nullptr,
                                               std::shared_ptr<CallCache> cache = nullptr) {
  return std::make_shared<Backend>(fixture_descriptor(role),
                                   std::make_unique<ScriptTransport>(std::move(fn), std::move(counter)),
                                   std::move(cache));
}

/// The shipped 20-prompt corpus config with the store redirected.
inline PipelineConfig corpus_config(const std::filesystem::path& store_root, bool failure_variant = false,
                                    int concurrency = 4) {
  PipelineConfig cfg =
      load_config(data_dir() / "corpus20" / (failure_variant ? "config_failure.json" : "config.json"));
  cfg.store_root = store_root;
  cfg.concurrency = concurrency;
  return cfg;
}

inline std::filesystem::path corpus_dataset() { return data_dir() / "corpus20" / "dataset.jsonl"; }

}  // namespace nl2vi::testing
