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

#include <string>
#include <string_view>

#include <json.hpp>

namespace nl2vi {

using Json = nlohmann::json;

/// Byte-stable JSON text: keys sorted, floating-point numbers printed with
/// exactly six fractional digits, integers verbatim. `indent` < 0 yields the
/// compact single-line form. Throws std::invalid_argument on NaN/infinity.
std::string canonical_dump(const Json& value, int indent = -1);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Fixed six-decimal rendering shared by reports and CSV exports.
std::string format_fixed6(double value);

}  // namespace nl2vi
