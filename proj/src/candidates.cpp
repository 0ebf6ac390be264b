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

#include "nl2vi/candidates.hpp"

#include <stdexcept>

#include "nl2vi/errors.hpp"

namespace nl2vi {

void GenerationConfig::validate() const {
  if (n_candidates < 1) throw ConfigError("generation.n_candidates must be >= 1");
  if (seed_stride < 1) throw ConfigError("generation.seed_stride must be >= 1");
}

std::vector<std::uint64_t> candidate_seeds(const GenerationConfig& config) {
  config.validate();
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(config.n_candidates));
  for (int k = 0; k < config.n_candidates; ++k) {
    seeds.push_back(config.base_seed + static_cast<std::uint64_t>(k) * config.seed_stride);
  }
  return seeds;
}

std::vector<GeneratedImage> generate_candidates(const VisualPrompt& visual_prompt, const GenerationConfig& config,
                                                Backend& backend, const ArtifactStore& store) {
  if (backend.role() != Role::image_gen) throw std::invalid_argument("generate_candidates needs image_gen");
  std::vector<GeneratedImage> images;
  try {
    for (std::uint64_t seed : candidate_seeds(config)) {
      images.push_back(generate_image(backend, store, visual_prompt.source_id, visual_prompt.text, seed));
    }
  } catch (...) {
    for (const auto& img : images) store.remove(img.image_id);
    throw;
  }
  return images;
}

}  // namespace nl2vi
