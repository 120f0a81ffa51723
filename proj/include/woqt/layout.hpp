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
#include <cstdint>
#include <string>

namespace woqt {

enum class LayoutKind : std::uint8_t {
  per_tensor = 0,
  per_column = 1,
  fixed_group = 2,
  adaptive = 3,
};

inline constexpr std::size_t kDefaultMinGroup = 16;
inline constexpr double kDefaultAlpha = 0.5;

std::string to_string(LayoutKind kind);
LayoutKind layout_kind_from_string(const std::string& s);

// Partition of each column into contiguous scale-sharing groups along K.
//
// All groups within a matrix share one nominal size. When the size does not
// divide rows (possible only for adaptive layouts), the last group absorbs
// the remainder, so group g covers [g*size, (g+1)*size) except the last,
// which ends at rows. per_tensor shares one scale across every column.
class GroupLayout {
 public:
  static GroupLayout per_tensor(std::size_t rows, std::size_t cols);
  static GroupLayout per_column(std::size_t rows, std::size_t cols);
  static GroupLayout fixed_group(std::size_t rows, std::size_t cols, std::size_t group,
                                 std::size_t min_group = kDefaultMinGroup);
  // Result of adaptation; group must be a power of two in [min_group, rows)
  // or equal rows. alpha is stored in thousandths.
  static GroupLayout adaptive(std::size_t rows, std::size_t cols, std::size_t group,
                              std::size_t min_group, double alpha);

  // Rebuilds a layout from its serialized descriptor, validating it.
  static GroupLayout from_descriptor(LayoutKind kind, std::size_t rows, std::size_t cols,
                                     std::uint32_t group_size, std::uint32_t min_group,
                                     std::uint32_t alpha_milli);

  LayoutKind kind() const { return kind_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t group_size() const { return group_; }
  std::size_t resolved_size() const { return group_; }
  std::size_t min_group() const { return min_group_; }
  std::uint32_t alpha_milli() const { return alpha_milli_; }
  double alpha() const { return alpha_milli_ / 1000.0; }

  std::size_t groups_per_column() const;
  std::size_t num_scales() const;
  std::size_t group_begin(std::size_t g) const { return g * group_; }
  std::size_t group_end(std::size_t g) const;
  // Row-major position of s_{g,j} in the scale matrix.
  std::size_t scale_index(std::size_t g, std::size_t j) const;
  std::size_t largest_group() const;

  std::string describe() const;

  friend bool operator==(const GroupLayout&, const GroupLayout&) = default;

 private:
  GroupLayout(LayoutKind kind, std::size_t rows, std::size_t cols, std::size_t group,
              std::size_t min_group, std::uint32_t alpha_milli)
      : kind_(kind), rows_(rows), cols_(cols), group_(group), min_group_(min_group),
        alpha_milli_(alpha_milli) {}

  LayoutKind kind_ = LayoutKind::per_column;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t group_ = 0;
  std::size_t min_group_ = 0;
  std::uint32_t alpha_milli_ = 0;
};

// Validated construction by kind. group is required for fixed_group and
// ignored otherwise; adaptive layouts come from adapt_group_size().
GroupLayout make_layout(LayoutKind kind, std::size_t rows, std::size_t cols,
                        std::size_t group = 0, std::size_t min_group = kDefaultMinGroup);

}  // namespace woqt
