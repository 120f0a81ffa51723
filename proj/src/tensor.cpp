/* Copyright 2026 The woqt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "woqt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "woqt/errors.hpp"

namespace woqt {

Tensor::Tensor(std::string name, std::size_t rows, std::size_t cols,
               std::vector<float> data, TagSet tags)
    : name_(std::move(name)),
      rows_(rows),
      cols_(cols),
      data_(std::move(data)),
      tags_(std::move(tags)) {
  if (rows_ == 0 || cols_ == 0) {
    throw ShapeError("tensor '" + name_ + "' must have rows >= 1 and cols >= 1");
  }
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("tensor '" + name_ + "': data length " +
                     std::to_string(data_.size()) + " != rows*cols " +
                     std::to_string(rows_ * cols_));
  }
}

Tensor Tensor::zeros(std::string name, std::size_t rows, std::size_t cols) {
  return Tensor(std::move(name), rows, cols, std::vector<float>(rows * cols, 0.0f));
}

Tensor Tensor::from_rows(std::string name,
                         std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<float> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged row in tensor literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(std::move(name), r, c, std::move(data));
}

Tensor Tensor::renamed(std::string name) const {
  Tensor out = *this;
  out.name_ = std::move(name);
  return out;
}

Tensor Tensor::retagged(TagSet tags) const {
  Tensor out = *this;
  out.tags_ = std::move(tags);
  return out;
}

void Tensor::validate_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError("tensor '" + name_ + "' has a non-finite value at (" +
                            std::to_string(i / cols_) + ", " +
                            std::to_string(i % cols_) + ")");
    }
  }
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.name_ == b.name_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ &&
         a.tags_ == b.tags_ && a.data_.size() == b.data_.size() &&
         std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

std::vector<float> to_column_major(const Tensor& t) {
  const std::size_t rows = t.rows();
  const std::size_t cols = t.cols();
  const float* src = t.data().data();
  std::vector<float> out(rows * cols);
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
    const std::size_t r1 = std::min(rows, r0 + kBlock);
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t c1 = std::min(cols, c0 + kBlock);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) out[c * rows + r] = src[r * cols + c];
      }
    }
  }
  return out;
}

}  // namespace woqt
