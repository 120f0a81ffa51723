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

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "woqt/container.hpp"
#include "woqt/tensor.hpp"

namespace woqt {

// Boolean predicate over a tensor's name and tags.
//
// Tags of the form "key=value" put the tensor in namespace `key`; bare tags
// are flags. Grammar:
//
//   expr    := and ('or' and)*
//   and     := unary ('and' unary)*
//   unary   := 'not' unary | '(' expr ')' | 'all' | 'none' | compare | IDENT
//   compare := IDENT ['%' INT] OP (INT | IDENT | STRING)
//   OP      := == != < <= > >=
//
// `name` is the tensor name. A bare IDENT is true when the tensor carries
// that flag or any tag in that namespace. Comparisons against a namespace the
// tensor lacks are false. Examples: "layer % 2 == 0 and part == ffn", "all".
class SelectionPolicy {
 public:
  struct Node;

  // Throws InvalidArgument on a syntax error.
  static SelectionPolicy parse(const std::string& expr);
  static SelectionPolicy all() { return parse("all"); }

  bool matches(const std::string& name, const TagSet& tags) const;
  // Namespaces referenced by comparisons and bare identifiers.
  const std::set<std::string>& referenced_keys() const { return keys_; }
  const std::string& source() const { return source_; }

 private:
  std::shared_ptr<const Node> root_;
  std::set<std::string> keys_;
  std::string source_;
};

struct Selection {
  std::vector<std::string> names;     // bundle order
  std::vector<std::string> warnings;  // e.g. unknown tag namespace
};

Selection select_tensors(const TensorBundle& bundle, const SelectionPolicy& policy);

}  // namespace woqt
