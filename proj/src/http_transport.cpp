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

#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "nl2vi/errors.hpp"
#include "nl2vi/gateway.hpp"

namespace nl2vi {

namespace {

struct Endpoint {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string base_path;
};

Endpoint parse_endpoint(const std::string& url) {
  Endpoint ep;
  std::string rest;
  if (url.rfind("http://", 0) == 0) {
    ep.scheme = "http";
    rest = url.substr(7);
  } else if (url.rfind("https://", 0) == 0) {
    ep.scheme = "https";
    ep.port = 443;
    rest = url.substr(8);
  } else {
    throw ConfigError("endpoint must start with http:// or https://: " + url);
  }
  const auto slash = rest.find('/');
  if (slash != std::string::npos) {
    ep.base_path = rest.substr(slash);
    rest.resize(slash);
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  const auto colon = rest.rfind(':');
  if (colon != std::string::npos) {
    try {
      ep.port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad port in endpoint: " + url);
    }
    rest.resize(colon);
  }
  if (rest.empty()) throw ConfigError("missing host in endpoint: " + url);
  ep.host = rest;
  return ep;
}

std::string error_message(const std::string& body) {
  try {
    const Json j = Json::parse(body);
    if (j.contains("error")) {
      const Json& e = j.at("error");
      if (e.is_string()) return e.get<std::string>();
      if (e.is_object() && e.contains("message") && e.at("message").is_string()) {
        return e.at("message").get<std::string>();
      }
      return e.dump();
    }
  } catch (const Json::exception&) {
  }
  return body;
}

/// Chat-completions for text generation, flat POST /v1/{role} otherwise.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const BackendDescriptor& d) : d_(d), ep_(parse_endpoint(d.endpoint)) {}

  Json send(const Json& request, const std::string& /*digest*/) override {
    std::string path;
    Json body;
    if (d_.role == Role::text_gen) {
      path = ep_.base_path + "/v1/chat/completions";
      body = Json{{"model", d_.model_name},
                  {"messages", Json::array({Json{{"role", "user"}, {"content", request.at("instruction")}}})},
                  {"temperature", request.at("temperature")},
                  {"max_tokens", request.at("max_tokens")}};
    } else {
      path = ep_.base_path + "/v1/" + std::string(to_string(d_.role));
      body = request;
      body["model"] = d_.model_name;
    }

    httplib::Headers headers;
    if (!d_.credentials_env.empty()) {
      const char* secret = std::getenv(d_.credentials_env.c_str());
      if (secret == nullptr || *secret == '\0') {
        throw BackendUnavailable("credentials variable " + d_.credentials_env + " is not set");
      }
      headers.emplace("Authorization", std::string("Bearer ") + secret);
    }

    const std::string who = std::string(to_string(d_.role)) + " backend " + d_.endpoint + path;
    const std::string text = body.dump();
    std::string last_error;
    for (int attempt = 1; attempt <= d_.retry.max_attempts; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(d_.retry.backoff_base * (1 << std::min(attempt - 2, 16)));
      }
      httplib::Client client(ep_.scheme + "://" + ep_.host + ":" + std::to_string(ep_.port));
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(d_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(d_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());

      auto res = client.Post(path, headers, text, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 200 && res->status < 300) return decode(res->body, who);
      last_error = "HTTP " + std::to_string(res->status) + ": " + error_message(res->body);
      const bool retryable = res->status >= 500 || res->status == 429;
      if (!retryable) break;
    }
    throw BackendUnavailable(who + ": " + last_error);
  }

 private:
  Json decode(const std::string& body, const std::string& who) const {
    Json j;
    try {
      j = Json::parse(body);
    } catch (const Json::parse_error& e) {
      throw InvalidBackendResponse(who + ": response is not JSON");
    }
    if (d_.role != Role::text_gen) return j;
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception&) {
      throw InvalidBackendResponse(who + ": no choices[0].message.content");
    }
  }

  BackendDescriptor d_;
  Endpoint ep_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const BackendDescriptor& d) {
  return std::make_unique<HttpTransport>(d);
}

}  // namespace nl2vi
