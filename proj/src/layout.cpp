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

#include "woqt/layout.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "woqt/errors.hpp"

namespace woqt {
namespace {

void check_shape(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw ShapeError("layout needs rows >= 1 and cols >= 1");
}

void check_min_group(std::size_t min_group) {
  if (min_group == 0 || !std::has_single_bit(min_group)) {
    throw InvalidArgument("min_group must be a power of two, got " + std::to_string(min_group));
  }
}

std::uint32_t alpha_to_milli(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  const auto milli = static_cast<std::uint32_t>(std::lround(alpha * 1000.0));
  if (milli == 0 || milli >= 1000) {
    throw InvalidArgument("alpha must be representable in thousandths within (0, 1)");
  }
  return milli;
}

}  // namespace

std::string to_string(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::per_tensor:
      return "tensor";
    case LayoutKind::per_column:
      return "column";
    case LayoutKind::fixed_group:
      return "group";
    case LayoutKind::adaptive:
      return "adaptive";
  }
  return "?";
}

LayoutKind layout_kind_from_string(const std::string& s) {
  if (s == "tensor" || s == "per_tensor") return LayoutKind::per_tensor;
  if (s == "column" || s == "per_column") return LayoutKind::per_column;
  if (s == "group" || s == "fixed_group") return LayoutKind::fixed_group;
  if (s == "adaptive") return LayoutKind::adaptive;
  throw InvalidArgument("unknown granularity '" + s + "'");
}

GroupLayout GroupLayout::per_tensor(std::size_t rows, std::size_t cols) {
  check_shape(rows, cols);
  return GroupLayout(LayoutKind::per_tensor, rows, cols, rows,
                     std::min(kDefaultMinGroup, rows), 0);
}

GroupLayout GroupLayout::per_column(std::size_t rows, std::size_t cols) {
  check_shape(rows, cols);
  return GroupLayout(LayoutKind::per_column, rows, cols, rows,
                     std::min(kDefaultMinGroup, rows), 0);
}

GroupLayout GroupLayout::fixed_group(std::size_t rows, std::size_t cols, std::size_t group,
                                     std::size_t min_group) {
  check_shape(rows, cols);
  check_min_group(min_group);
  if (group == 0 || !std::has_single_bit(group)) {
    throw InvalidArgument("group size must be a power of two, got " + std::to_string(group));
  }
  if (group < min_group) {
    throw InvalidArgument("group size " + std::to_string(group) + " is below min_group " +
                          std::to_string(min_group));
  }
  if (group > rows || rows % group != 0) {
    throw InvalidArgument("group size " + std::to_string(group) + " does not divide rows " +
                          std::to_string(rows));
  }
  return GroupLayout(LayoutKind::fixed_group, rows, cols, group, min_group, 0);
}

GroupLayout GroupLayout::adaptive(std::size_t rows, std::size_t cols, std::size_t group,
                                  std::size_t min_group, double alpha) {
  check_shape(rows, cols);
  check_min_group(min_group);
  const std::uint32_t milli = alpha_to_milli(alpha);
  const bool degenerate = group == rows;
  if (!degenerate &&
      (!std::has_single_bit(group) || group < min_group || group > rows)) {
    throw InvalidArgument("adaptive group size " + std::to_string(group) +
                          " must be rows or a power of two in [min_group, rows]");
  }
  return GroupLayout(LayoutKind::adaptive, rows, cols, group, min_group, milli);
}

GroupLayout GroupLayout::from_descriptor(LayoutKind kind, std::size_t rows, std::size_t cols,
                                         std::uint32_t group_size, std::uint32_t min_group,
                                         std::uint32_t alpha_milli) {
  if (kind != LayoutKind::adaptive && alpha_milli != 0) {
    throw FormatError("non-adaptive descriptor must have alpha_milli == 0");
  }
  switch (kind) {
    case LayoutKind::per_tensor:
    case LayoutKind::per_column: {
      check_shape(rows, cols);
      if (group_size != rows) {
        throw FormatError("per-tensor/per-column descriptor must have group_size == rows");
      }
      if (min_group == 0) throw FormatError("descriptor min_group must be positive");
      return GroupLayout(kind, rows, cols, rows, min_group, 0);
    }
    case LayoutKind::fixed_group:
      return fixed_group(rows, cols, group_size, min_group);
    case LayoutKind::adaptive: {
      if (alpha_milli == 0 || alpha_milli >= 1000) {
        throw FormatError("adaptive descriptor alpha_milli out of (0, 1000)");
      }
      GroupLayout l = adaptive(rows, cols, group_size, min_group, 0.5);
      l.alpha_milli_ = alpha_milli;
      return l;
    }
  }
  throw FormatError("unknown layout kind " + std::to_string(static_cast<int>(kind)));
}

std::size_t GroupLayout::groups_per_column() const {
  if (kind_ == LayoutKind::per_tensor) return 1;
  return std::max<std::size_t>(1, rows_ / group_);
}

std::size_t GroupLayout::num_scales() const {
  if (kind_ == LayoutKind::per_tensor) return 1;
  return groups_per_column() * cols_;
}

std::size_t GroupLayout::group_end(std::size_t g) const {
  return g + 1 == groups_per_column() ? rows_ : (g + 1) * group_;
}

std::size_t GroupLayout::scale_index(std::size_t g, std::size_t j) const {
  if (kind_ == LayoutKind::per_tensor) return 0;
  return g * cols_ + j;
}

std::size_t GroupLayout::largest_group() const {
  const std::size_t last = groups_per_column() - 1;
  return group_end(last) - group_begin(last);
}

std::string GroupLayout::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case LayoutKind::per_tensor:
      os << "per-tensor";
      break;
    case LayoutKind::per_column:
      os << "per-column(" << rows_ << ")";
      break;
    case LayoutKind::fixed_group:
      os << "group(" << group_ << ")";
      break;
    case LayoutKind::adaptive:
      os << "adaptive(" << group_ << " alpha=" << alpha() << ")";
      break;
  }
  return os.str();
}

GroupLayout make_layout(LayoutKind kind, std::size_t rows, std::size_t cols, std::size_t group,
                        std::size_t min_group) {
  switch (kind) {
    case LayoutKind::per_tensor:
      return GroupLayout::per_tensor(rows, cols);
    case LayoutKind::per_column:
      return GroupLayout::per_column(rows, cols);
    case LayoutKind::fixed_group:
      return GroupLayout::fixed_group(rows, cols, group, min_group);
    case LayoutKind::adaptive:
      break;
  }
  throw InvalidArgument("adaptive layouts are produced by adapt_group_size()");
}

}  // namespace woqt
