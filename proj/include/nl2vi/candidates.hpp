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

// Phase 2: N candidate images per visual prompt, seeds base + k * stride.

#include <cstdint>
#include <vector>

#include "nl2vi/gateway.hpp"
#include "nl2vi/model.hpp"

namespace nl2vi {

struct GenerationConfig {
  int n_candidates = 4;
  std::uint64_t base_seed = 0;
  std::uint64_t seed_stride = 1;

  void validate() const;
};

std::vector<std::uint64_t> candidate_seeds(const GenerationConfig& config);

/// All-or-nothing: on failure every image written for this batch is removed
/// from the store before the error propagates.
std::vector<GeneratedImage> generate_candidates(const VisualPrompt& visual_prompt, const GenerationConfig& config,
                                                Backend& backend, const ArtifactStore& store);

}  // namespace nl2vi
