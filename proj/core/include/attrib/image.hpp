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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "attrib/tensor.hpp"

namespace attrib {

// Row-major 2-D grid. Used for grayscale images (values in [0, 1]) and for
// heatmap scores (any finite real).
class Image {
 public:
  Image() = default;
  Image(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  // Throws ContractError when values.size() != rows * cols.
  Image(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool same_shape(const Image& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  // {1, rows, cols} network input.
  Tensor to_tensor() const;
  // Accepts {rows, cols} or {1, rows, cols}.
  static Image from_tensor(const Tensor& tensor);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Binary per-pixel mask; nonzero bytes are "inside".
class MaskImage {
 public:
  MaskImage() = default;
  MaskImage(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), values_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool same_shape(const MaskImage& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool same_shape(const Image& other) const {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  bool at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { values_[r * cols_ + c] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return values_[i] != 0; }
  void set(std::size_t i, bool v) { values_[i] = v ? 1 : 0; }

  std::size_t count() const;
  double coverage() const {
    return values_.empty() ? 0.0 : static_cast<double>(count()) / size();
  }

  friend bool operator==(const MaskImage&, const MaskImage&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> values_;
};

}  // namespace attrib
