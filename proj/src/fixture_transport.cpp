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

#include <fstream>
#include <unordered_map>

#include "nl2vi/errors.hpp"
#include "nl2vi/gateway.hpp"

namespace nl2vi {

namespace {

/// Lookup table from request digest to response, loaded once.
class FixtureTransport final : public Transport {
 public:
  explicit FixtureTransport(const BackendDescriptor& d) : role_(d.role), model_(d.model_name) {
    if (!d.fixture_path.empty()) load(d.fixture_path);
  }

  Json send(const Json& request, const std::string& digest) override {
    if (role_ == Role::image_gen && table_.empty()) {
      return Json{{"image_b64", base64_encode(placeholder_png(request.at("prompt").get<std::string>(),
                                                              request.at("seed").get<std::uint64_t>()))}};
    }
    if (auto it = table_.find(digest); it != table_.end()) return it->second;

    if (role_ == Role::entailment && echo_ &&
        request.at("premise").get<std::string>() == request.at("hypothesis").get<std::string>()) {
      return Json{{"entail", 1.0}, {"neutral", 0.0}, {"contradict", 0.0}};
    }
    if (role_ == Role::similarity) {
      const Json swapped = payload::similarity(request.at("candidate").get<std::string>(),
                                               request.at("reference").get<std::string>());
      if (auto it = table_.find(request_digest(role_, model_, swapped)); it != table_.end()) {
        return it->second;
      }
    }
    throw FixtureMiss(std::string(to_string(role_)) + " fixture '" + model_ + "' has no entry for " +
                      canonical_dump(request) + " (digest " + digest + ")");
  }

 private:
  void load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fixture file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      Json entry;
      try {
        entry = Json::parse(line);
      } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      if (entry.contains("rule")) {
        if (entry.at("rule") == "echo") {
          echo_ = true;
          continue;
        }
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": unknown rule");
      }
      if (!entry.contains("digest") || !entry.contains("response")) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": needs digest and response");
      }
      auto [it, inserted] = table_.emplace(entry.at("digest").get<std::string>(), entry.at("response"));
      if (!inserted && it->second != entry.at("response")) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": conflicting duplicate digest");
      }
    }
  }

  Role role_;
  std::string model_;
  bool echo_ = false;
  std::unordered_map<std::string, Json> table_;
};

}  // namespace

std::unique_ptr<Transport> make_fixture_transport(const BackendDescriptor& d) {
  return std::make_unique<FixtureTransport>(d);
}

}  // namespace nl2vi
