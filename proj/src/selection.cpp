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

#include "woqt/selection.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <utility>

#include "woqt/errors.hpp"

namespace woqt {

struct SelectionPolicy::Node {
  enum class Kind { constant, flag, compare, negate, conj, disj };
  enum class Op { eq, ne, lt, le, gt, ge };

  Kind kind = Kind::constant;
  bool value = false;
  std::string key;
  std::optional<long long> modulus;
  Op op = Op::eq;
  std::string literal;
  std::optional<long long> literal_int;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = SelectionPolicy::Node;
using NodePtr = std::shared_ptr<const Node>;

struct Token {
  enum class Type { ident, integer, string, op, lparen, rparen, end };
  Type type = Type::end;
  std::string text;
};

std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto error = [&](const std::string& what) {
    throw InvalidArgument("selection policy: " + what + " at offset " + std::to_string(i) +
                          " in \"" + s + "\"");
  };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Token::Type::lparen, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Token::Type::rparen, ")"});
      ++i;
    } else if (c == '"' || c == '\'') {
      const std::size_t close = s.find(c, i + 1);
      if (close == std::string::npos) error("unterminated string");
      out.push_back({Token::Type::string, s.substr(i + 1, close - i - 1)});
      i = close + 1;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i + 1;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Token::Type::integer, s.substr(i, j - i)});
      i = j;
    } else if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.push_back({Token::Type::ident, s.substr(i, j - i)});
      i = j;
    } else {
      static const char* const kOps[] = {"==", "!=", "<=", ">=", "&&", "||", "<", ">", "%", "!"};
      bool matched = false;
      for (const char* op : kOps) {
        const std::string o(op);
        if (s.compare(i, o.size(), o) == 0) {
          out.push_back({Token::Type::op, o});
          i += o.size();
          matched = true;
          break;
        }
      }
      if (!matched) error(std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Token::Type::end, ""});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string source, std::set<std::string>& keys)
      : tokens_(std::move(tokens)), source_(std::move(source)), keys_(keys) {}

  NodePtr parse() {
    NodePtr n = parse_or();
    if (peek().type != Token::Type::end) fail("unexpected '" + peek().text + "'");
    return n;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  Token next() { return tokens_[pos_++]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("selection policy \"" + source_ + "\": " + what);
  }

  bool is_word(const char* w) const {
    return peek().type == Token::Type::ident && peek().text == w;
  }
  bool is_op(const char* o) const { return peek().type == Token::Type::op && peek().text == o; }

  NodePtr combine(Node::Kind kind, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  NodePtr parse_or() {
    NodePtr n = parse_and();
    while (is_word("or") || is_op("||")) {
      next();
      n = combine(Node::Kind::disj, n, parse_and());
    }
    return n;
  }

  NodePtr parse_and() {
    NodePtr n = parse_unary();
    while (is_word("and") || is_op("&&")) {
      next();
      n = combine(Node::Kind::conj, n, parse_unary());
    }
    return n;
  }

  NodePtr parse_unary() {
    if (is_word("not") || is_op("!")) {
      next();
      return combine(Node::Kind::negate, parse_unary(), nullptr);
    }
    if (peek().type == Token::Type::lparen) {
      next();
      NodePtr n = parse_or();
      if (peek().type != Token::Type::rparen) fail("expected ')'");
      next();
      return n;
    }
    if (peek().type != Token::Type::ident || is_word("and") || is_word("or")) {
      fail("expected a tag, 'all' or '('");
    }
    const Token id = next();
    auto n = std::make_shared<Node>();
    if (id.text == "all" || id.text == "none") {
      n->kind = Node::Kind::constant;
      n->value = id.text == "all";
      return n;
    }
    n->key = id.text;
    keys_.insert(id.text);
    if (is_op("%")) {
      next();
      if (peek().type != Token::Type::integer) fail("expected an integer after '%'");
      n->modulus = parse_int(next().text);
      if (!n->modulus || *n->modulus <= 0) fail("modulus must be a positive integer");
    }
    static const std::pair<const char*, Node::Op> kOps[] = {
        {"==", Node::Op::eq}, {"!=", Node::Op::ne}, {"<", Node::Op::lt},
        {"<=", Node::Op::le}, {">", Node::Op::gt},  {">=", Node::Op::ge}};
    for (const auto& [text, op] : kOps) {
      if (is_op(text)) {
        next();
        const Token lit = next();
        if (lit.type != Token::Type::integer && lit.type != Token::Type::ident &&
            lit.type != Token::Type::string) {
          fail("expected a value after '" + std::string(text) + "'");
        }
        n->kind = Node::Kind::compare;
        n->op = op;
        n->literal = lit.text;
        if (lit.type == Token::Type::integer) n->literal_int = parse_int(lit.text);
        return n;
      }
    }
    if (n->modulus) fail("'%' needs a comparison");
    n->kind = Node::Kind::flag;
    return n;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::string source_;
  std::set<std::string>& keys_;
};

template <typename T>
bool apply(Node::Op op, const T& a, const T& b) {
  switch (op) {
    case Node::Op::eq:
      return a == b;
    case Node::Op::ne:
      return a != b;
    case Node::Op::lt:
      return a < b;
    case Node::Op::le:
      return a <= b;
    case Node::Op::gt:
      return a > b;
    case Node::Op::ge:
      return a >= b;
  }
  return false;
}

// Values of namespace `key` on a tensor; `name` is built in.
std::vector<std::string> values_of(const std::string& key, const std::string& name,
                                   const TagSet& tags) {
  if (key == "name") return {name};
  std::vector<std::string> out;
  const std::string prefix = key + "=";
  for (const std::string& t : tags) {
    if (t.compare(0, prefix.size(), prefix) == 0) out.push_back(t.substr(prefix.size()));
  }
  return out;
}

bool compare_value(const Node& n, const std::string& value) {
  const std::optional<long long> iv = parse_int(value);
  if (iv && (n.literal_int || n.modulus)) {
    if (!n.literal_int) return false;
    const long long lhs = n.modulus ? ((*iv % *n.modulus) + *n.modulus) % *n.modulus : *iv;
    return apply(n.op, lhs, *n.literal_int);
  }
  if (n.modulus) return false;
  return apply(n.op, value, n.literal);
}

bool eval(const Node& n, const std::string& name, const TagSet& tags) {
  switch (n.kind) {
    case Node::Kind::constant:
      return n.value;
    case Node::Kind::flag:
      return tags.count(n.key) != 0 || !values_of(n.key, name, tags).empty();
    case Node::Kind::compare: {
      for (const std::string& v : values_of(n.key, name, tags)) {
        if (compare_value(n, v)) return true;
      }
      return false;
    }
    case Node::Kind::negate:
      return !eval(*n.lhs, name, tags);
    case Node::Kind::conj:
      return eval(*n.lhs, name, tags) && eval(*n.rhs, name, tags);
    case Node::Kind::disj:
      return eval(*n.lhs, name, tags) || eval(*n.rhs, name, tags);
  }
  return false;
}

}  // namespace

SelectionPolicy SelectionPolicy::parse(const std::string& expr) {
  SelectionPolicy p;
  p.source_ = expr;
  Parser parser(tokenize(expr), expr, p.keys_);
  p.root_ = parser.parse();
  return p;
}

bool SelectionPolicy::matches(const std::string& name, const TagSet& tags) const {
  return eval(*root_, name, tags);
}

Selection select_tensors(const TensorBundle& bundle, const SelectionPolicy& policy) {
  Selection out;
  std::set<std::string> known = {"name"};
  for (const BundleEntry& e : bundle.entries()) {
    for (const std::string& tag : entry_tags(e)) {
      const auto eq = tag.find('=');
      known.insert(eq == std::string::npos ? tag : tag.substr(0, eq));
    }
  }
  for (const std::string& key : policy.referenced_keys()) {
    if (known.count(key) == 0) {
      out.warnings.push_back("selection references unknown tag namespace '" + key + "'");
    }
  }
  for (const BundleEntry& e : bundle.entries()) {
    if (policy.matches(entry_name(e), entry_tags(e))) out.names.push_back(entry_name(e));
  }
  return out;
}

}  // namespace woqt
