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

#include "attrib/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"

namespace attrib {
namespace {

constexpr std::uint32_t kImageMaxval = 65535;
constexpr std::uint32_t kMaskMaxval = 1;

// Parses one ASCII header integer, skipping whitespace and '#' comments.
std::uint64_t header_number(const std::string& data, std::size_t& pos,
                            const std::string& what) {
  while (pos < data.size()) {
    const unsigned char c = static_cast<unsigned char>(data[pos]);
    if (std::isspace(c)) {
      ++pos;
    } else if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::uint64_t v = 0;
  std::size_t digits = 0;
  while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
    v = v * 10 + static_cast<std::uint64_t>(data[pos] - '0');
    if (v > (1ULL << 32)) break;
    ++pos;
    ++digits;
  }
  if (digits == 0) {
    throw DecodeError(DecodeError::Kind::kBadHeader, "PGM header: bad " + what);
  }
  return v;
}

}  // namespace

void write_pgm_raw(const RawPgm& pgm, const std::filesystem::path& path) {
  if (pgm.maxval == 0 || pgm.maxval > 65535) {
    throw ContractError("PGM maxval must be in [1, 65535]");
  }
  if (pgm.samples.size() != pgm.rows * pgm.cols) {
    throw ContractError("PGM sample count does not match dimensions");
  }
  std::string out = "P5\n" + std::to_string(pgm.cols) + " " +
                    std::to_string(pgm.rows) + "\n" +
                    std::to_string(pgm.maxval) + "\n";
  const bool wide = pgm.maxval > 255;
  out.reserve(out.size() + pgm.samples.size() * (wide ? 2 : 1));
  for (std::uint16_t s : pgm.samples) {
    if (s > pgm.maxval) throw ContractError("PGM sample exceeds maxval");
    if (wide) out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xff));
  }
  write_file(path, out);
}

RawPgm read_pgm_raw(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') {
    throw DecodeError(DecodeError::Kind::kBadMagic,
                      path.string() + ": not a binary (P5) PGM");
  }
  std::size_t pos = 2;
  RawPgm pgm;
  pgm.cols = header_number(data, pos, "width");
  pgm.rows = header_number(data, pos, "height");
  const std::uint64_t maxval = header_number(data, pos, "maxval");
  if (pgm.cols == 0 || pgm.rows == 0 || maxval == 0 || maxval > 65535) {
    throw DecodeError(DecodeError::Kind::kBadHeader,
                      path.string() + ": PGM header out of range");
  }
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
    throw DecodeError(DecodeError::Kind::kBadHeader,
                      path.string() + ": PGM header not terminated");
  }
  ++pos;
  pgm.maxval = static_cast<std::uint32_t>(maxval);
  const bool wide = pgm.maxval > 255;
  const std::size_t n = pgm.rows * pgm.cols;
  const std::size_t need = n * (wide ? 2 : 1);
  if (data.size() - pos < need) {
    throw DecodeError(DecodeError::Kind::kShortPayload,
                      path.string() + ": PGM payload has " +
                          std::to_string(data.size() - pos) + " bytes, need " +
                          std::to_string(need));
  }
  pgm.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint16_t s = 0;
    if (wide) {
      s = static_cast<std::uint16_t>(
          (static_cast<unsigned char>(data[pos]) << 8) |
          static_cast<unsigned char>(data[pos + 1]));
      pos += 2;
    } else {
      s = static_cast<unsigned char>(data[pos++]);
    }
    if (s > pgm.maxval) {
      throw DecodeError(DecodeError::Kind::kMalformed,
                        path.string() + ": sample exceeds maxval");
    }
    pgm.samples[i] = s;
  }
  return pgm;
}

void write_pgm(const Image& image, const std::filesystem::path& path) {
  RawPgm pgm{image.rows(), image.cols(), kImageMaxval, {}};
  pgm.samples.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    pgm.samples[i] = static_cast<std::uint16_t>(std::lround(v * kImageMaxval));
  }
  write_pgm_raw(pgm, path);
}

void write_pgm(const MaskImage& mask, const std::filesystem::path& path) {
  RawPgm pgm{mask.rows(), mask.cols(), kMaskMaxval, {}};
  pgm.samples.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) pgm.samples[i] = mask[i] ? 1 : 0;
  write_pgm_raw(pgm, path);
}

Image read_pgm(const std::filesystem::path& path) {
  const RawPgm pgm = read_pgm_raw(path);
  if (pgm.maxval != kImageMaxval) {
    throw DecodeError(DecodeError::Kind::kMaxvalMismatch,
                      path.string() + ": image maxval " +
                          std::to_string(pgm.maxval) + ", expected 65535");
  }
  Image image(pgm.rows, pgm.cols);
  for (std::size_t i = 0; i < image.size(); ++i) {
    image[i] = static_cast<double>(pgm.samples[i]) / kImageMaxval;
  }
  return image;
}

MaskImage read_pgm_mask(const std::filesystem::path& path) {
  const RawPgm pgm = read_pgm_raw(path);
  if (pgm.maxval != kMaskMaxval) {
    throw DecodeError(DecodeError::Kind::kMaxvalMismatch,
                      path.string() + ": mask maxval " +
                          std::to_string(pgm.maxval) + ", expected 1");
  }
  MaskImage mask(pgm.rows, pgm.cols);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.set(i, pgm.samples[i] != 0);
  return mask;
}

}  // namespace attrib
