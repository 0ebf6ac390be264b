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

#include "nl2vi/gateway.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nl2vi/errors.hpp"

namespace nl2vi {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<std::string_view, Role>, 6> kRoles{{
    {"text_gen", Role::text_gen},
    {"image_gen", Role::image_gen},
    {"vqa", Role::vqa},
    {"text_qa", Role::text_qa},
    {"entailment", Role::entailment},
    {"similarity", Role::similarity},
}};

void require_role(const Backend& backend, Role expected) {
  if (backend.role() != expected) {
    throw std::invalid_argument("backend '" + backend.descriptor().model_name + "' has role " +
                                std::string(to_string(backend.role())) + ", expected " +
                                std::string(to_string(expected)));
  }
}

const Json& require_field(const Json& response, const char* field, Role role) {
  if (!response.is_object() || !response.contains(field)) {
    throw InvalidBackendResponse(std::string(to_string(role)) + " response lacks '" + field + "'");
  }
  return response.at(field);
}

double unit_interval(const Json& v, const char* field, Role role) {
  if (!v.is_number()) {
    throw InvalidBackendResponse(std::string(to_string(role)) + " field '" + field + "' is not a number");
  }
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) {
    throw InvalidBackendResponse(std::string(to_string(role)) + " field '" + field + "' outside [0,1]");
  }
  return x;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& target, std::string_view bytes) {
  static std::atomic<unsigned long> counter{0};
  fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1)) + "-" +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + target.string());
  }
}

}  // namespace

std::string_view to_string(Role r) noexcept {
  for (const auto& [name, role] : kRoles) {
    if (role == r) return name;
  }
  return "?";
}

std::string_view to_string(BackendKind k) noexcept { return k == BackendKind::http ? "http" : "fixture"; }

Role parse_role(std::string_view s) {
  for (const auto& [name, role] : kRoles) {
    if (name == s) return role;
  }
  throw std::invalid_argument("unknown backend role '" + std::string(s) + "'");
}

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "http") return BackendKind::http;
  if (s == "fixture") return BackendKind::fixture;
  throw std::invalid_argument("unknown backend kind '" + std::string(s) + "'");
}

void BackendDescriptor::validate() const {
  const std::string who = std::string(to_string(role)) + " backend";
  if (model_name.empty()) throw ConfigError(who + ": model_name is required");
  if (max_in_flight < 1) throw ConfigError(who + ": max_in_flight must be >= 1");
  if (retry.max_attempts < 1) throw ConfigError(who + ": retry.max_attempts must be >= 1");
  if (kind == BackendKind::http && endpoint.empty()) throw ConfigError(who + ": http kind requires endpoint");
  // Placeholder images need no lookup table.
  if (kind == BackendKind::fixture && fixture_path.empty() && role != Role::image_gen) {
    throw ConfigError(who + ": fixture kind requires fixture_path");
  }
}

namespace payload {

Json text_gen(std::string_view instruction, const Decoding& decoding) {
  return Json{{"instruction", instruction},
              {"temperature", decoding.temperature},
              {"max_tokens", decoding.max_tokens}};
}

Json image_gen(std::string_view prompt, std::uint64_t seed) {
  return Json{{"prompt", prompt}, {"seed", seed}};
}

Json vqa(std::string_view image_id, std::string_view question, std::string_view context) {
  return Json{{"image_id", image_id}, {"question", question}, {"context", context}};
}

Json text_qa(std::string_view question, std::string_view passage) {
  return Json{{"question", question}, {"passage", passage}};
}

Json entailment(std::string_view premise, std::string_view hypothesis) {
  return Json{{"premise", premise}, {"hypothesis", hypothesis}};
}

Json similarity(std::string_view reference, std::string_view candidate) {
  return Json{{"reference", reference}, {"candidate", candidate}};
}

}  // namespace payload

std::string request_digest(Role role, std::string_view model_name, const Json& payload) {
  std::string material(to_string(role));
  material.push_back('\n');
  material.append(model_name);
  material.push_back('\n');
  material += canonical_dump(payload);
  return sha256_hex(material);
}

std::string make_image_id(std::string_view prompt_id, std::uint64_t seed, std::string_view backend) {
  std::string material(prompt_id);
  material.push_back('\x1f');
  material += std::to_string(seed);
  material.push_back('\x1f');
  material.append(backend);
  return "img-" + sha256_hex(material).substr(0, 20);
}

// ---------------------------------------------------------------- CallCache

CallCache::CallCache(fs::path root) : root_(std::move(root)) {}

fs::path CallCache::path_for(Role role, const std::string& digest) const {
  return root_ / std::string(to_string(role)) / digest.substr(0, 2) / digest;
}

std::mutex& CallCache::stripe(const std::string& digest) const {
  return stripes_[std::hash<std::string>{}(digest) % stripes_.size()];
}

std::optional<std::string> CallCache::get(Role role, const std::string& digest) const {
  if (root_.empty()) {
    std::shared_lock lock(memory_mutex_);
    auto it = memory_.find(std::string(to_string(role)) + "/" + digest);
    if (it == memory_.end()) return std::nullopt;
    return it->second;
  }
  const fs::path p = path_for(role, digest);
  std::error_code ec;
  if (!fs::exists(p, ec)) return std::nullopt;
  return read_file(p);
}

std::string CallCache::put(Role role, const std::string& digest, const std::string& value) {
  std::lock_guard write_lock(stripe(digest));
  if (root_.empty()) {
    std::unique_lock lock(memory_mutex_);
    auto [it, inserted] = memory_.emplace(std::string(to_string(role)) + "/" + digest, value);
    return it->second;
  }
  const fs::path p = path_for(role, digest);
  std::error_code ec;
  if (fs::exists(p, ec)) return read_file(p);
  write_file_atomic(p, value);
  return value;
}

// ------------------------------------------------------------ ArtifactStore

ArtifactStore::ArtifactStore(fs::path root) : root_(std::move(root)) {}

fs::path ArtifactStore::path_for(std::string_view image_id) const {
  return root_ / "images" / (std::string(image_id) + ".png");
}

std::string ArtifactStore::content_ref(std::string_view image_id) {
  return "images/" + std::string(image_id) + ".png";
}

void ArtifactStore::put(std::string_view image_id, std::string_view bytes) const {
  write_file_atomic(path_for(image_id), bytes);
}

std::optional<std::string> ArtifactStore::get(std::string_view image_id) const {
  const fs::path p = path_for(image_id);
  std::error_code ec;
  if (!fs::exists(p, ec)) return std::nullopt;
  return read_file(p);
}

bool ArtifactStore::remove(std::string_view image_id) const {
  std::error_code ec;
  return fs::remove(path_for(image_id), ec);
}

// ------------------------------------------------------------------ Backend

namespace {
std::unique_ptr<Transport> transport_for(const BackendDescriptor& d) {
  d.validate();
  return d.kind == BackendKind::http ? make_http_transport(d) : make_fixture_transport(d);
}
}  // namespace

Backend::Backend(BackendDescriptor descriptor, std::shared_ptr<CallCache> cache)
    : Backend(descriptor, transport_for(descriptor), std::move(cache)) {}

Backend::Backend(BackendDescriptor descriptor, std::unique_ptr<Transport> transport,
                 std::shared_ptr<CallCache> cache)
    : descriptor_(std::move(descriptor)),
      transport_(std::move(transport)),
      cache_(std::move(cache)),
      in_flight_(std::max(1, descriptor_.max_in_flight)) {}

Json Backend::call(const Json& payload) {
  const std::string digest = request_digest(descriptor_.role, descriptor_.model_name, payload);
  if (cache_) {
    if (auto hit = cache_->get(descriptor_.role, digest)) {
      {
        std::lock_guard lock(log_mutex_);
        log_.push_back({digest, true});
      }
      return Json::parse(*hit);
    }
  }
  Json response;
  {
    in_flight_.acquire();
    struct Release {
      std::counting_semaphore<1 << 16>& s;
      ~Release() { s.release(); }
    } release{in_flight_};
    response = transport_->send(payload, digest);
  }
  {
    std::lock_guard lock(log_mutex_);
    log_.push_back({digest, false});
  }
  std::string bytes = response.dump();
  if (cache_) bytes = cache_->put(descriptor_.role, digest, bytes);
  return Json::parse(bytes);
}

std::vector<CallRecord> Backend::call_log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

std::size_t Backend::request_count() const {
  std::lock_guard lock(log_mutex_);
  return log_.size();
}

std::size_t Backend::transport_count() const {
  std::lock_guard lock(log_mutex_);
  std::size_t n = 0;
  for (const auto& r : log_) n += r.from_cache ? 0 : 1;
  return n;
}

void Backend::clear_log() {
  std::lock_guard lock(log_mutex_);
  log_.clear();
}

void BackendSet::set(std::shared_ptr<Backend> backend) {
  const Role r = backend->role();
  backends_[r] = std::move(backend);
}

Backend& BackendSet::at(Role role) const {
  auto it = backends_.find(role);
  if (it == backends_.end()) {
    throw ConfigError("no backend configured for role " + std::string(to_string(role)));
  }
  return *it->second;
}

std::size_t BackendSet::total_requests() const {
  std::size_t n = 0;
  for (const auto& [_, b] : backends_) n += b->request_count();
  return n;
}

std::size_t BackendSet::total_transport_calls() const {
  std::size_t n = 0;
  for (const auto& [_, b] : backends_) n += b->transport_count();
  return n;
}

// --------------------------------------------------------------- operations

std::string complete_text(Backend& backend, std::string_view instruction, const Decoding& decoding) {
  require_role(backend, Role::text_gen);
  const Json response = backend.call(payload::text_gen(instruction, decoding));
  if (!response.is_string()) throw InvalidBackendResponse("text_gen response is not a string");
  return response.get<std::string>();
}

GeneratedImage generate_image(Backend& backend, const ArtifactStore& store, std::string_view prompt_id,
                              std::string_view prompt, std::uint64_t seed) {
  require_role(backend, Role::image_gen);
  if (prompt.empty()) throw std::invalid_argument("generate_image: empty prompt");
  const Json response = backend.call(payload::image_gen(prompt, seed));
  const Json& encoded = require_field(response, "image_b64", Role::image_gen);
  if (!encoded.is_string()) throw InvalidBackendResponse("image_gen 'image_b64' is not a string");
  const std::string bytes = base64_decode(encoded.get<std::string>());
  if (bytes.empty()) throw InvalidBackendResponse("image_gen returned no image bytes");

  GeneratedImage image;
  image.prompt_id = std::string(prompt_id);
  image.seed = seed;
  image.backend = backend.descriptor().model_name;
  image.image_id = make_image_id(prompt_id, seed, image.backend);
  image.content_ref = ArtifactStore::content_ref(image.image_id);
  store.put(image.image_id, bytes);
  return image;
}

std::string answer_visual_question(Backend& backend, const GeneratedImage& image,
                                   std::string_view question, std::string_view context) {
  require_role(backend, Role::vqa);
  const Json response = backend.call(payload::vqa(image.image_id, question, context));
  const Json& answer = require_field(response, "answer", Role::vqa);
  if (!answer.is_string()) throw InvalidBackendResponse("vqa 'answer' is not a string");
  return answer.get<std::string>();
}

TextAnswer answer_text_question(Backend& backend, std::string_view question, std::string_view passage) {
  require_role(backend, Role::text_qa);
  if (passage.empty()) return {"", false};
  const Json response = backend.call(payload::text_qa(question, passage));
  const Json& answer = require_field(response, "answer", Role::text_qa);
  const Json& answerable = require_field(response, "answerable", Role::text_qa);
  if (!answer.is_string() || !answerable.is_boolean()) {
    throw InvalidBackendResponse("text_qa response has wrong field types");
  }
  return {answer.get<std::string>(), answerable.get<bool>()};
}

EntailmentScores entailment(Backend& backend, std::string_view premise, std::string_view hypothesis) {
  require_role(backend, Role::entailment);
  const Json response = backend.call(payload::entailment(premise, hypothesis));
  EntailmentScores s;
  s.entail = unit_interval(require_field(response, "entail", Role::entailment), "entail", Role::entailment);
  s.neutral = unit_interval(require_field(response, "neutral", Role::entailment), "neutral", Role::entailment);
  s.contradict =
      unit_interval(require_field(response, "contradict", Role::entailment), "contradict", Role::entailment);
  const double total = s.entail + s.neutral + s.contradict;
  if (std::abs(total - 1.0) > 1e-6) {
    throw InvalidBackendResponse("entailment scores sum to " + std::to_string(total) + ", not 1");
  }
  return s;
}

double semantic_similarity(Backend& backend, std::string_view reference, std::string_view candidate) {
  require_role(backend, Role::similarity);
  if (candidate.empty()) return 0.0;
  if (answers_match(reference, candidate)) return 1.0;
  const Json response = backend.call(payload::similarity(reference, candidate));
  return unit_interval(require_field(response, "score", Role::similarity), "score", Role::similarity);
}

// ------------------------------------------------------------------- base64

std::string base64_encode(std::string_view bytes) {
  if (bytes.empty()) return {};
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.empty()) return {};
  if (text.size() % 4 != 0) throw InvalidBackendResponse("base64 length not a multiple of 4");
  std::string out(3 * (text.size() / 4), '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw InvalidBackendResponse("invalid base64");
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

}  // namespace nl2vi
