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

// One client abstraction over every external model role. Each role has an
// HTTP wire client and a fixture-driven mock; both sit behind a
// content-addressed call cache keyed by (role, model, canonical request).

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nl2vi/canonical.hpp"
#include "nl2vi/model.hpp"

namespace nl2vi {

enum class Role { text_gen, image_gen, vqa, text_qa, entailment, similarity };
enum class BackendKind { http, fixture };

std::string_view to_string(Role r) noexcept;
std::string_view to_string(BackendKind k) noexcept;
Role parse_role(std::string_view s);
BackendKind parse_backend_kind(std::string_view s);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{200};
};

struct BackendDescriptor {
  Role role = Role::text_gen;
  BackendKind kind = BackendKind::fixture;
  std::string endpoint;          // http only, e.g. "http://127.0.0.1:8080"
  std::string model_name;
  std::string credentials_env;   // http only; names the env var, never the secret
  std::filesystem::path fixture_path;  // fixture only
  std::chrono::milliseconds timeout{30000};
  int max_in_flight = 4;
  RetryPolicy retry;

  /// Throws ConfigError when the invariants for `kind` are not met.
  void validate() const;
};

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 256;
};

struct EntailmentScores {
  double entail = 0.0;
  double neutral = 0.0;
  double contradict = 0.0;
};

struct TextAnswer {
  std::string answer;
  bool answerable = false;
};

/// Request payload builders. These are the exact objects that are digested
/// for cache and fixture keys and sent over the wire.
namespace payload {
Json text_gen(std::string_view instruction, const Decoding& decoding);
Json image_gen(std::string_view prompt, std::uint64_t seed);
Json vqa(std::string_view image_id, std::string_view question, std::string_view context);
Json text_qa(std::string_view question, std::string_view passage);
Json entailment(std::string_view premise, std::string_view hypothesis);
Json similarity(std::string_view reference, std::string_view candidate);
}  // namespace payload

std::string request_digest(Role role, std::string_view model_name, const Json& payload);

/// (prompt_id, seed, backend) -> image id. Pure.
std::string make_image_id(std::string_view prompt_id, std::uint64_t seed, std::string_view backend);

/// Content-addressed response cache. An empty root keeps entries in memory;
/// otherwise entries live at {root}/{role}/{digest[0:2]}/{digest}.
/// Reads are concurrent; the first value written for a key wins.
class CallCache {
 public:
  explicit CallCache(std::filesystem::path root = {});

  std::optional<std::string> get(Role role, const std::string& digest) const;
  /// Stores `value` unless the key already has one; returns the persisted value.
  std::string put(Role role, const std::string& digest, const std::string& value);

  std::filesystem::path path_for(Role role, const std::string& digest) const;
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::mutex& stripe(const std::string& digest) const;

  std::filesystem::path root_;
  mutable std::shared_mutex memory_mutex_;
  std::unordered_map<std::string, std::string> memory_;
  mutable std::array<std::mutex, 32> stripes_;
};

/// Image bytes at {root}/images/{image_id}.png.
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  std::filesystem::path path_for(std::string_view image_id) const;
  /// Relative reference stored in GeneratedImage::content_ref.
  static std::string content_ref(std::string_view image_id);
  void put(std::string_view image_id, std::string_view bytes) const;
  std::optional<std::string> get(std::string_view image_id) const;
  bool remove(std::string_view image_id) const;
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

/// Sends one request payload. Implementations may block and must be safe to
/// call from several threads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Json send(const Json& payload, const std::string& digest) = 0;
};

std::unique_ptr<Transport> make_fixture_transport(const BackendDescriptor& d);
std::unique_ptr<Transport> make_http_transport(const BackendDescriptor& d);

struct CallRecord {
  std::string digest;
  bool from_cache = false;
};

/// A configured model endpoint for one role.
class Backend {
 public:
  explicit Backend(BackendDescriptor descriptor, std::shared_ptr<CallCache> cache = nullptr);
  Backend(BackendDescriptor descriptor, std::unique_ptr<Transport> transport,
          std::shared_ptr<CallCache> cache);

  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  const BackendDescriptor& descriptor() const noexcept { return descriptor_; }
  Role role() const noexcept { return descriptor_.role; }

  /// Cached request. Cached and uncached paths return the same bytes.
  Json call(const Json& payload);

  std::vector<CallRecord> call_log() const;
  std::size_t request_count() const;
  std::size_t transport_count() const;
  void clear_log();

 private:
  BackendDescriptor descriptor_;
  std::unique_ptr<Transport> transport_;
  std::shared_ptr<CallCache> cache_;
  std::counting_semaphore<1 << 16> in_flight_;
  mutable std::mutex log_mutex_;
  std::vector<CallRecord> log_;
};

/// Role -> backend lookup shared by the pipeline phases.
class BackendSet {
 public:
  void set(std::shared_ptr<Backend> backend);
  bool has(Role role) const { return backends_.count(role) != 0; }
  /// Throws ConfigError when the role is not configured.
  Backend& at(Role role) const;
  std::size_t total_requests() const;
  std::size_t total_transport_calls() const;

 private:
  std::map<Role, std::shared_ptr<Backend>> backends_;
};

// Role operations. Each throws std::invalid_argument when `backend` has the
// wrong role, BackendUnavailable on transport failure, FixtureMiss on an
// incomplete fixture and InvalidBackendResponse on a malformed response.

std::string complete_text(Backend& backend, std::string_view instruction, const Decoding& decoding);

GeneratedImage generate_image(Backend& backend, const ArtifactStore& store, std::string_view prompt_id,
                              std::string_view prompt, std::uint64_t seed);

std::string answer_visual_question(Backend& backend, const GeneratedImage& image,
                                   std::string_view question, std::string_view context);

/// An empty passage answers ("", false) without contacting the backend.
TextAnswer answer_text_question(Backend& backend, std::string_view question, std::string_view passage);

/// Scores must each lie in [0,1] and sum to 1 within 1e-6.
EntailmentScores entailment(Backend& backend, std::string_view premise, std::string_view hypothesis);

/// 1.0 for normalized-equal strings and 0.0 for an empty candidate, both
/// without a backend call.
double semantic_similarity(Backend& backend, std::string_view reference, std::string_view candidate);

// Encoding helpers shared with the fixture tooling.
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// Deterministic 16x16 PNG whose pixels and tEXt chunk encode
/// (sha256(prompt), seed).
std::string placeholder_png(std::string_view prompt, std::uint64_t seed);

}  // namespace nl2vi
