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

#include "nl2vi/service.hpp"

#include <httplib.h>

#include <condition_variable>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "nl2vi/errors.hpp"
#include "nl2vi/pipeline.hpp"
#include "nl2vi/store.hpp"

namespace nl2vi {

namespace fs = std::filesystem;

namespace {

int status_for(const std::string& kind) {
  if (kind == "InvalidRating" || kind == "SchemaError" || kind == "DuplicateId" || kind == "DatasetError") return 422;
  if (kind == "DuplicateAnnotation" || kind == "NotAssigned" || kind == "RunInProgress") return 409;
  if (kind == "NoPositives" || kind == "EmptyInput") return 409;
  if (kind == "NotFound") return 404;
  if (kind == "BadRequest" || kind == "ConfigError") return 400;
  return 500;
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

void send_error(httplib::Response& res, const std::string& kind, const std::string& message) {
  send_json(res, status_for(kind), Json{{"error", kind}, {"message", message}});
}

// Handler wrapper: library errors become structured bodies.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.kind(), e.what());
    } catch (const Json::exception& e) {
      send_error(res, "BadRequest", e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, "BadRequest", e.what());
    } catch (const std::exception& e) {
      send_error(res, "Internal", e.what());
    }
  };
}

bool safe_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return id.find('/') == std::string::npos && id.find('\\') == std::string::npos;
}

}  // namespace

struct Service::Impl {
  PipelineConfig config;
  ServiceOptions options;
  AnnotationStore annotations;
  httplib::Server server;

  std::mutex runs_mutex;
  std::condition_variable runs_cv;
  std::map<std::string, Json> runs;  // run_id -> status document
  bool run_active = false;
  std::thread run_thread;

  Impl(PipelineConfig c, ServiceOptions o)
      : config(std::move(c)), options(std::move(o)), annotations(config.store_root) {
    config.validate();
    fs::create_directories(config.store_root);
    annotations.seed_tasks_from_reports(options.task_replicas);
    routes();
  }

  ~Impl() {
    if (run_thread.joinable()) run_thread.join();
  }

  void routes() {
    // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which
    // lets a second instance share a port that is already taken.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    if (!options.bearer_token.empty()) {
      server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (req.path.rfind("/v1/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + options.bearer_token) {
          return httplib::Server::HandlerResponse::Unhandled;
        }
        send_json(res, 401, Json{{"error", "Unauthorized"}, {"message", "missing or wrong bearer token"}});
        return httplib::Server::HandlerResponse::Handled;
      });
    }
    std::error_code ec;
    if (!options.ui_dir.empty() && fs::is_directory(options.ui_dir, ec)) {
      server.set_mount_point("/ui", options.ui_dir.string());
    }

    server.Post("/v1/pipeline/runs", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  start_run(req, res);
                }));
    server.Get(R"(/v1/pipeline/runs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 get_run(req.matches[1], res);
               }));
    server.Get(R"(/v1/reports/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 if (!safe_id(id) || !has_report(config.store_root, id)) throw_not_found("report " + id);
                 res.status = 200;
                 res.set_content(read_text(report_path(config.store_root, id)), "application/json");
               }));
    server.Get(R"(/v1/images/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::string id = req.matches[1];
                 if (id.size() > 4 && id.compare(id.size() - 4, 4, ".png") == 0) id.resize(id.size() - 4);
                 if (!safe_id(id)) throw_not_found("image " + id);
                 auto bytes = ArtifactStore(config.store_root).get(id);
                 if (!bytes) throw_not_found("image " + id);
                 res.status = 200;
                 res.set_content(*bytes, "image/png");
               }));
    server.Get("/v1/annotations/tasks/next", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 next_task(req, res);
               }));
    server.Post("/v1/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  post_annotation(req, res);
                }));
    server.Get("/v1/annotations/export", guarded([this](const httplib::Request&, httplib::Response& res) {
                 res.status = 200;
                 res.set_content(export_to_csv(export_annotations(config.store_root)), "text/csv");
               }));
    server.Get("/v1/metrics", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 metrics(req, res);
               }));
  }

  [[noreturn]] static void throw_not_found(const std::string& what) {
    throw Error("NotFound", "unknown " + what);
  }

  void start_run(const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body.empty() ? "{}" : req.body);
    if (!body.contains("dataset") || !body.at("dataset").is_string()) {
      throw Error("BadRequest", "body needs a string field 'dataset'");
    }
    fs::path dataset = body.at("dataset").get<std::string>();
    if (dataset.is_relative() && !options.dataset_dir.empty()) dataset = options.dataset_dir / dataset;
    PipelineConfig cfg = config;
    if (body.contains("mode")) cfg.mode = parse_run_mode(body.at("mode").get<std::string>());
    RunOptions run_options;
    run_options.resume = body.value("resume", true);

    std::vector<DatasetRecord> records;
    try {
      records = load_dataset(dataset);
    } catch (const Error& e) {
      throw DatasetError(e.what());
    }
    auto pipeline = std::make_shared<Pipeline>(cfg);

    std::unique_lock lock(runs_mutex);
    if (run_active) throw Error("RunInProgress", "a pipeline run is already active");
    if (run_thread.joinable()) run_thread.join();
    const std::string run_id = new_run_id();
    run_options.run_id = run_id;
    runs[run_id] = Json{{"run_id", run_id}, {"state", "running"}, {"config_digest", pipeline->config_digest()}};
    run_active = true;
    run_thread = std::thread([this, pipeline, records = std::move(records), run_options] {
      Json status;
      try {
        status = to_json(pipeline->run(records, run_options));
        status["state"] = "finished";
        annotations.seed_tasks_from_reports(options.task_replicas);
      } catch (const std::exception& e) {
        status = Json{{"run_id", run_options.run_id}, {"state", "failed"}, {"message", e.what()}};
      }
      std::lock_guard done(runs_mutex);
      runs[run_options.run_id] = std::move(status);
      run_active = false;
      runs_cv.notify_all();
    });
    send_json(res, 202, Json{{"run_id", run_id}});
  }

  void get_run(const std::string& run_id, httplib::Response& res) {
    {
      std::lock_guard lock(runs_mutex);
      if (auto it = runs.find(run_id); it != runs.end()) {
        send_json(res, 200, it->second);
        return;
      }
    }
    const fs::path path = run_summary_path(config.store_root, run_id);
    if (!safe_id(run_id) || !fs::exists(path)) throw_not_found("run " + run_id);
    Json status = to_json(run_summary_from_json(Json::parse(read_text(path))));
    status["state"] = "finished";
    send_json(res, 200, status);
  }

  void next_task(const httplib::Request& req, httplib::Response& res) {
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) throw Error("BadRequest", "query parameter 'rater' is required");
    auto task = annotations.next_task(rater);
    if (!task) {
      res.status = 204;
      return;
    }
    const ConsistencyReport report = load_report(task->prompt_id, config.store_root);
    std::size_t done = 0;
    for (const auto& t : annotations.tasks()) done += t.state == TaskState::done ? 1 : 0;
    Json images = Json::array();
    std::set<std::string> rated;
    for (const auto& a : annotations.annotations()) {
      if (a.prompt_id == task->prompt_id && a.rater_id == rater) rated.insert(a.image_id);
    }
    for (const auto& id : task->image_ids) {
      images.push_back(Json{{"image_id", id}, {"url", "/v1/images/" + id}, {"rated", rated.count(id) > 0}});
    }
    Json body = to_json(*task);
    body["prompt_text"] = report.visual_prompt.text;
    body["images"] = std::move(images);
    body["progress"] = Json{{"done", done}, {"total", annotations.tasks().size()}};
    send_json(res, 200, body);
  }

  void post_annotation(const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body);
    AnnotationRecord record;
    record.prompt_id = body.at("prompt_id").get<std::string>();
    record.image_id = body.at("image_id").get<std::string>();
    record.rater_id = body.at("rater_id").get<std::string>();
    if (!body.at("rating").is_number_integer()) throw InvalidRating("rating must be an integer from 1 to 5");
    record.rating = body.at("rating").get<int>();
    record.timestamp = body.value("timestamp", std::string());
    send_json(res, 201, to_json(annotations.record_annotation(std::move(record))));
  }

  void metrics(const httplib::Request& req, httplib::Response& res) {
    double threshold = 0.5;
    if (req.has_param("threshold")) {
      try {
        threshold = std::stod(req.get_param_value("threshold"));
      } catch (const std::exception&) {
        throw Error("BadRequest", "threshold must be a number");
      }
    }
    const std::string join = req.has_param("join") ? req.get_param_value("join") : "candidates";
    if (join != "candidates" && join != "selected") throw Error("BadRequest", "join must be candidates or selected");
    std::vector<ExportRow> rows = export_annotations(config.store_root);
    if (join == "selected") {
      std::map<std::string, std::string> selected;
      std::vector<ExportRow> kept;
      for (const auto& r : rows) {
        auto it = selected.find(r.prompt_id);
        if (it == selected.end()) it = selected.emplace(r.prompt_id, load_report(r.prompt_id, config.store_root).selected).first;
        if (r.image_id == it->second) kept.push_back(r);
      }
      rows = std::move(kept);
    }
    const MetricReport m = compute_metric_report(to_labeled_scores(rows), threshold);
    send_json(res, 200,
              Json{{"auc_ap", m.auc_ap},
                   {"p_at_1", m.p_at_1 ? Json(*m.p_at_1) : Json(nullptr)},
                   {"accuracy", m.accuracy},
                   {"n_items", m.n_items},
                   {"threshold_used", m.threshold_used},
                   {"join", join}});
  }
};

Service::Service(PipelineConfig config, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options))) {}

Service::~Service() {
  stop();
  wait_for_runs();
}

int Service::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw BindError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

void Service::wait_for_runs() {
  std::unique_lock lock(impl_->runs_mutex);
  impl_->runs_cv.wait(lock, [&] { return !impl_->run_active; });
}

std::pair<std::string, int> parse_bind_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bind address needs a port: " + address);
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  if (host.empty()) host = "0.0.0.0";
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(address.substr(colon + 1), &used);
    if (used != address.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw ConfigError("bad port in bind address: " + address);
  }
  if (port < 0 || port > 65535) throw ConfigError("port out of range: " + address);
  return {host, port};
}

}  // namespace nl2vi
