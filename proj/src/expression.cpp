#include "qs/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace qs {

struct Expression::Node {
  enum class Kind { number, x, y, neg, add, sub, mul, div, pow, sin, cos, exp, abs } kind;
  double value = 0.0;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(double x, double y) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::x: return x;
      case Kind::y: return y;
      case Kind::neg: return -lhs->eval(x, y);
      case Kind::add: return lhs->eval(x, y) + rhs->eval(x, y);
      case Kind::sub: return lhs->eval(x, y) - rhs->eval(x, y);
      case Kind::mul: return lhs->eval(x, y) * rhs->eval(x, y);
      case Kind::div: return lhs->eval(x, y) / rhs->eval(x, y);
      case Kind::pow: return std::pow(lhs->eval(x, y), rhs->eval(x, y));
      case Kind::sin: return std::sin(lhs->eval(x, y));
      case Kind::cos: return std::cos(lhs->eval(x, y));
      case Kind::exp: return std::exp(lhs->eval(x, y));
      case Kind::abs: return std::abs(lhs->eval(x, y));
    }
    return 0.0;
  }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("expression '" + s_ + "' at column " + std::to_string(pos_ + 1) + ": " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
    return std::make_shared<const Node>(Node{k, v, std::move(a), std::move(b)});
  }

  NodePtr expr() {
    auto n = term();
    for (;;) {
      if (accept('+')) n = make(Node::Kind::add, n, term());
      else if (accept('-')) n = make(Node::Kind::sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    auto n = unary();
    for (;;) {
      if (accept('*')) n = make(Node::Kind::mul, n, unary());
      else if (accept('/')) n = make(Node::Kind::div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Node::Kind::neg, unary());
    return power();
  }
  NodePtr power() {
    auto base = primary();
    if (accept('^')) return make(Node::Kind::pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (accept('(')) {
      auto n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
      if (res.ec != std::errc()) fail("bad number");
      pos_ = static_cast<std::size_t>(res.ptr - s_.data());
      return make(Node::Kind::number, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const auto start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const auto word = s_.substr(start, pos_ - start);
      if (word == "x") return make(Node::Kind::x);
      if (word == "y") return make(Node::Kind::y);
      Node::Kind k;
      if (word == "sin") k = Node::Kind::sin;
      else if (word == "cos") k = Node::Kind::cos;
      else if (word == "exp") k = Node::Kind::exp;
      else if (word == "abs") k = Node::Kind::abs;
      else fail("unknown name '" + word + "'");
      if (!accept('(')) fail("expected '(' after " + word);
      auto arg = expr();
      if (!accept(')')) fail("expected ')'");
      return make(k, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).parse();
  return e;
}

double Expression::operator()(double x, double y) const { return root_->eval(x, y); }

ScalarField sample_expression(const GridSpec& g, const Expression& e) {
  ScalarField f(g, 0.0, false);
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const auto p = g.node_point(k);
    f.values[k] = e(p.x, p.y);
  }
  return f;
}

}  // namespace qs
