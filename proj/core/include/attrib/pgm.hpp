/*
 * Copyright 2026 The attrib Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "attrib/image.hpp"

namespace attrib {

// Binary (P5) PGM. Images use maxval 65535 (big-endian 16-bit samples),
// masks use maxval 1.
void write_pgm(const Image& image, const std::filesystem::path& path);
void write_pgm(const MaskImage& mask, const std::filesystem::path& path);

// Throws DecodeError: kBadMagic for non-P5 files, kBadHeader for malformed
// dimensions, kMaxvalMismatch when maxval is not 65535 / 1, kShortPayload
// when the pixel data ends early.
Image read_pgm(const std::filesystem::path& path);
MaskImage read_pgm_mask(const std::filesystem::path& path);

struct RawPgm {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint32_t maxval = 0;
  std::vector<std::uint16_t> samples;
};

void write_pgm_raw(const RawPgm& pgm, const std::filesystem::path& path);
RawPgm read_pgm_raw(const std::filesystem::path& path);

}  // namespace attrib
