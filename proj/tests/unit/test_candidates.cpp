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

#include <gtest/gtest.h>

#include <set>

#include "nl2vi/candidates.hpp"
#include "nl2vi/errors.hpp"
#include "test_support.hpp"

namespace nl2vi {
namespace {

using testing::script_backend;
using testing::TempDir;

Json png_response(const Json& req) {
  return Json{{"image_b64", base64_encode(placeholder_png(req.at("prompt").get<std::string>(),
                                                          req.at("seed").get<std::uint64_t>()))}};
}

TEST(CandidateSeeds, BasePlusStride) {
  EXPECT_EQ(candidate_seeds({4, 0, 1}), (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(candidate_seeds({3, 100, 7}), (std::vector<std::uint64_t>{100, 107, 114}));
  EXPECT_THROW(candidate_seeds({0, 0, 1}), ConfigError);
  EXPECT_THROW(candidate_seeds({2, 0, 0}), ConfigError);
}

TEST(GenerateCandidates, OneImagePerSeedWithDistinctIds) {
  TempDir dir;
  ArtifactStore store(dir.path());
  std::vector<std::uint64_t> seen;
  auto backend = script_backend(Role::image_gen, [&](const Json& req) {
    seen.push_back(req.at("seed"));
    return png_response(req);
  });
  const VisualPrompt vp{"A plate of garlic bread.", "r01", "m", PromptMode::rewritten};
  const auto images = generate_candidates(vp, {4, 10, 5}, *backend, store);
  ASSERT_EQ(images.size(), 4u);
  EXPECT_EQ(seen, (std::vector<std::uint64_t>{10, 15, 20, 25}));
  std::set<std::string> ids;
  for (std::size_t k = 0; k < images.size(); ++k) {
    EXPECT_EQ(images[k].seed, 10 + 5 * k);
    EXPECT_EQ(images[k].prompt_id, "r01");
    EXPECT_EQ(images[k].image_id, make_image_id("r01", images[k].seed, "test-image_gen"));
    EXPECT_EQ(store.get(images[k].image_id), placeholder_png(vp.text, images[k].seed));
    ids.insert(images[k].image_id);
  }
  EXPECT_EQ(ids.size(), 4u);
}

TEST(GenerateCandidates, RepeatRunIsByteIdentical) {
  TempDir a, b;
  auto backend = script_backend(Role::image_gen, png_response);
  const VisualPrompt vp{"Soup in a bowl.", "w03", "m", PromptMode::rewritten};
  const auto first = generate_candidates(vp, {3, 0, 1}, *backend, ArtifactStore(a.path()));
  const auto second = generate_candidates(vp, {3, 0, 1}, *backend, ArtifactStore(b.path()));
  EXPECT_EQ(first, second);
  for (const auto& img : first) {
    EXPECT_EQ(ArtifactStore(a.path()).get(img.image_id), ArtifactStore(b.path()).get(img.image_id));
  }
}

TEST(GenerateCandidates, FailureRemovesPartialBatch) {
  TempDir dir;
  ArtifactStore store(dir.path());
  auto backend = script_backend(Role::image_gen, [](const Json& req) -> Json {
    if (req.at("seed") == 2) throw BackendUnavailable("image backend down");
    return png_response(req);
  });
  const VisualPrompt vp{"Tea.", "w01", "m", PromptMode::rewritten};
  EXPECT_THROW(generate_candidates(vp, {4, 0, 1}, *backend, store), BackendUnavailable);
  for (std::uint64_t seed : {0, 1}) EXPECT_FALSE(store.get(make_image_id("w01", seed, "test-image_gen")));
}

TEST(GenerateCandidates, WrongRoleRejected) {
  TempDir dir;
  auto backend = script_backend(Role::vqa, png_response);
  EXPECT_THROW(generate_candidates({"x", "r", "m", PromptMode::rewritten}, {}, *backend, ArtifactStore(dir.path())),
               std::invalid_argument);
}

}  // namespace
}  // namespace nl2vi
