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

#include <filesystem>

#include "attrib/estimators.hpp"

namespace attrib {

// "ATTRIBHMP" file: magic, u32 version, u32-length provenance string,
// u32 rows, u32 cols, rows * cols little-endian f64 scores.
void save_heatmap(const Heatmap& heatmap, const std::filesystem::path& path);

// The estimator kind and absolute flag are recovered from the provenance.
// Throws DecodeError: kBadMagic, kBadVersion, kTruncated, kMalformed.
Heatmap load_heatmap(const std::filesystem::path& path);

}  // namespace attrib
