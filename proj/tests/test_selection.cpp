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

#include <string>

#include "doctest.h"
#include "woqt/container.hpp"
#include "woqt/errors.hpp"
#include "woqt/selection.hpp"

using namespace woqt;

namespace {

TensorBundle toy_bundle(int layers) {
  TensorBundle b;
  for (int i = 0; i < layers; ++i) {
    for (const char* part : {"attn", "ffn"}) {
      const std::string name = "layers." + std::to_string(i) + "." + part;
      b.add(Tensor(name, 2, 2, {1, 2, 3, 4},
                   {"layer=" + std::to_string(i), std::string("part=") + part}));
    }
  }
  return b;
}

}  // namespace

TEST_CASE("even-layer FFNs") {
  const auto sel = select_tensors(toy_bundle(4), SelectionPolicy::parse("layer % 2 == 0 and part == ffn"));
  CHECK(sel.names == std::vector<std::string>{"layers.0.ffn", "layers.2.ffn"});
  CHECK(sel.warnings.empty());
}

TEST_CASE("unknown part value on a dense bundle selects nothing") {
  const auto sel = select_tensors(toy_bundle(4), SelectionPolicy::parse("part == expert_ffn"));
  CHECK(sel.names.empty());
}

TEST_CASE("unknown namespace warns") {
  const auto sel = select_tensors(toy_bundle(2), SelectionPolicy::parse("expert == 1"));
  CHECK(sel.names.empty());
  CHECK(sel.warnings.size() == 1);
}

TEST_CASE("all selects every tensor in bundle order") {
  const TensorBundle b = toy_bundle(3);
  CHECK(select_tensors(b, SelectionPolicy::all()).names == b.names());
  CHECK(select_tensors(b, SelectionPolicy::parse("none")).names.empty());
}

TEST_CASE("operators, precedence and names") {
  const TagSet tags{"layer=3", "part=ffn", "frozen"};
  auto m = [&](const char* e) { return SelectionPolicy::parse(e).matches("layers.3.ffn", tags); };
  CHECK(m("layer >= 3"));
  CHECK_FALSE(m("layer < 3"));
  CHECK(m("layer % 2 == 1"));
  CHECK(m("not part == attn"));
  CHECK(m("part == attn or layer == 3 and frozen"));
  CHECK_FALSE(m("(part == attn or layer == 3) and not frozen"));
  CHECK(m("name == \"layers.3.ffn\""));
  CHECK(m("part != attn"));
  CHECK(m("frozen"));
  CHECK_FALSE(m("layer == ffn"));
  CHECK(SelectionPolicy::parse("layer % 2 == 0 and part == ffn").referenced_keys() ==
        std::set<std::string>{"layer", "part"});
}

TEST_CASE("syntax errors are rejected") {
  for (const char* e : {"", "layer ==", "(all", "layer % 0 == 1", "and", "layer == 1 1", "\"x"}) {
    CHECK_THROWS_AS(SelectionPolicy::parse(e), InvalidArgument);
  }
}
