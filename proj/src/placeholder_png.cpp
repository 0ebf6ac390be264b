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

#include <zlib.h>

#include <array>
#include <stdexcept>

#include "nl2vi/canonical.hpp"
#include "nl2vi/gateway.hpp"

namespace nl2vi {

namespace {

constexpr int kSide = 16;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace

std::string placeholder_png(std::string_view prompt, std::uint64_t seed) {
  const std::string prompt_digest = sha256_hex(prompt);
  const std::string pixel_digest = sha256_hex(prompt_digest + ":" + std::to_string(seed));

  // Each row is a filter byte (0) followed by RGB triples drawn from the digest.
  std::string raw;
  raw.reserve(kSide * (1 + kSide * 3));
  for (int y = 0; y < kSide; ++y) {
    raw.push_back('\0');
    for (int x = 0; x < kSide; ++x) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t i = static_cast<std::size_t>((y * kSide + x) * 3 + c) % (pixel_digest.size() / 2);
        raw.push_back(static_cast<char>(std::stoi(pixel_digest.substr(i * 2, 2), nullptr, 16) ^ (x * 16 + y)));
      }
    }
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw std::runtime_error("placeholder_png: deflate failed");
  }
  packed.resize(packed_size);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32(ihdr, kSide);
  put_u32(ihdr, kSide);
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB, no interlace
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "tEXt", std::string("nl2vi") + '\0' + "prompt_sha256=" + prompt_digest +
                             ";seed=" + std::to_string(seed));
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", "");
  return png;
}

}  // namespace nl2vi
