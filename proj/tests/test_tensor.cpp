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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "woqt/errors.hpp"
#include "woqt/tensor.hpp"

using woqt::Tensor;

TEST_CASE("tensor shape validation") {
  CHECK_THROWS_AS(Tensor("t", 0, 3, {}), woqt::ShapeError);
  CHECK_THROWS_AS(Tensor("t", 2, 2, {1, 2, 3}), woqt::ShapeError);
  const Tensor t("t", 2, 2, {1, 2, 3, 4}, {"layer=0"});
  CHECK(t.at(1, 0) == 3.0f);
  CHECK(t.tags().count("layer=0") == 1);
}

TEST_CASE("from_rows is row-major") {
  const Tensor t = Tensor::from_rows("t", {{1, 2, 3}, {4, 5, 6}});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.data()[3] == 4.0f);
  CHECK_THROWS_AS(Tensor::from_rows("t", {{1, 2}, {3}}), woqt::ShapeError);
}

TEST_CASE("validate_finite rejects NaN and Inf") {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const float inf = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(Tensor("t", 1, 2, {0.0f, nan}).validate_finite(), woqt::ValidationError);
  CHECK_THROWS_AS(Tensor("t", 1, 2, {-inf, 0.0f}).validate_finite(), woqt::ValidationError);
  CHECK_NOTHROW(Tensor("t", 1, 2, {0.0f, 1.0f}).validate_finite());
}

TEST_CASE("equality is bitwise") {
  const Tensor a("t", 1, 1, {0.0f});
  const Tensor b("t", 1, 1, {-0.0f});
  CHECK_FALSE(a == b);
  CHECK(a == a.renamed("t"));
  CHECK_FALSE(a == a.renamed("u"));
}

TEST_CASE("column-major copy") {
  std::vector<float> data(37 * 53);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(i);
  const Tensor t("t", 37, 53, data);
  const auto cm = woqt::to_column_major(t);
  for (std::size_t r = 0; r < 37; ++r) {
    for (std::size_t c = 0; c < 53; ++c) REQUIRE(cm[c * 37 + r] == t.at(r, c));
  }
}
