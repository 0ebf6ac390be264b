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

// HTTP front end: pipeline runs, report and image reads, the annotation
// queue and live metrics. Mutations go through the AnnotationStore's single
// writer; at most one pipeline run is active at a time.

#include <filesystem>
#include <memory>
#include <string>

#include "nl2vi/config.hpp"

namespace nl2vi {

struct ServiceOptions {
  /// Static asset directory served under /ui/ when it exists.
  std::filesystem::path ui_dir;
  /// When non-empty, /v1/ requests must carry "Authorization: Bearer <token>".
  std::string bearer_token;
  /// Annotation tasks created per report.
  int task_replicas = 1;
  /// Directory relative dataset paths in POST /v1/pipeline/runs resolve against.
  std::filesystem::path dataset_dir;
};

class Service {
 public:
  Service(PipelineConfig config, ServiceOptions options = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving yet. Port 0 picks a free port. Throws BindError.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();
  /// Blocks until any background pipeline run has finished.
  void wait_for_runs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "host:port", "[v6]:port" or ":port" (all interfaces).
std::pair<std::string, int> parse_bind_address(const std::string& address);

}  // namespace nl2vi
