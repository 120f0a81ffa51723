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

#pragma once

#include <cstddef>
#include <initializer_list>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace woqt {

using TagSet = std::set<std::string>;

// Dense row-major K x N matrix of 32-bit floats. Rows run along the
// reduction dimension, columns are output channels. Immutable once built.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::string name, std::size_t rows, std::size_t cols,
         std::vector<float> data, TagSet tags = {});

  static Tensor zeros(std::string name, std::size_t rows, std::size_t cols);
  static Tensor from_rows(std::string name,
                          std::initializer_list<std::initializer_list<float>> rows);

  const std::string& name() const { return name_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::span<const float> data() const { return data_; }
  float at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const TagSet& tags() const { return tags_; }

  Tensor renamed(std::string name) const;
  Tensor retagged(TagSet tags) const;

  // Throws ValidationError on the first NaN or Inf.
  void validate_finite() const;

  // Bitwise comparison of the payload; -0.0f and 0.0f differ.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  std::string name_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
  TagSet tags_;
};

// Column-major copy of t: element (r, c) lands at c * rows + r.
std::vector<float> to_column_major(const Tensor& t);

}  // namespace woqt
