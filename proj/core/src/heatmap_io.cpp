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

#include "attrib/heatmap_io.hpp"

#include <algorithm>
#include <string>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"

namespace attrib {
namespace {

constexpr std::string_view kHeatmapMagic = "ATTRIBHMP";
constexpr std::uint32_t kHeatmapVersion = 1;

}  // namespace

void save_heatmap(const Heatmap& heatmap, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes(kHeatmapMagic);
  w.u32(kHeatmapVersion);
  w.str(heatmap.provenance);
  w.u32(static_cast<std::uint32_t>(heatmap.rows()));
  w.u32(static_cast<std::uint32_t>(heatmap.cols()));
  w.f64s(heatmap.scores.values());
  w.write_file(path);
}

Heatmap load_heatmap(const std::filesystem::path& path) {
  ByteReader r = ByteReader::from_file(path);
  const std::size_t head = std::min(r.remaining(), kHeatmapMagic.size());
  if (r.bytes(head) != kHeatmapMagic.substr(0, head)) {
    throw DecodeError(DecodeError::Kind::kBadMagic, path.string() + ": not an ATTRIBHMP file");
  }
  if (head < kHeatmapMagic.size()) {
    throw DecodeError(DecodeError::Kind::kTruncated, path.string() + ": truncated magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kHeatmapVersion) {
    throw DecodeError(DecodeError::Kind::kBadVersion,
                      path.string() + ": unsupported heatmap version " + std::to_string(version));
  }
  Heatmap h;
  h.provenance = r.str();
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
  h.scores = Image(rows, cols, r.f64s(n));
  if (r.remaining() != 0) {
    throw DecodeError(DecodeError::Kind::kMalformed, path.string() + ": trailing bytes");
  }
  const std::string id = h.provenance.substr(0, h.provenance.find_first_of("(+"));
  const auto kind = parse_estimator(id);
  if (!kind) {
    throw DecodeError(DecodeError::Kind::kMalformed,
                      path.string() + ": unknown estimator in provenance '" + h.provenance + "'");
  }
  h.estimator = *kind;
  h.absolute = h.provenance.find("+abs") != std::string::npos;
  return h;
}

}  // namespace attrib
