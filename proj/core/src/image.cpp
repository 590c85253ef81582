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

#include "attrib/image.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "attrib/error.hpp"

namespace attrib {

Image::Image(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ContractError("image of " + std::to_string(rows_) + "x" +
                        std::to_string(cols_) + " given " +
                        std::to_string(values_.size()) + " values");
  }
}

Tensor Image::to_tensor() const {
  return Tensor({1, rows_, cols_}, values_);
}

Image Image::from_tensor(const Tensor& tensor) {
  const Shape& s = tensor.shape();
  if (s.size() == 2) {
    return Image(s[0], s[1], {tensor.values().begin(), tensor.values().end()});
  }
  if (s.size() == 3 && s[0] == 1) {
    return Image(s[1], s[2], {tensor.values().begin(), tensor.values().end()});
  }
  throw ContractError("tensor " + shape_to_string(s) + " is not a single-channel image");
}

std::size_t MaskImage::count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](std::uint8_t v) { return v != 0; }));
}

}  // namespace attrib
