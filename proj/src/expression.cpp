// SPDX-License-Identifier: Apache-2.0
#include "finsler/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace finsler {

struct Expression::Node {
  enum class Op { number, var_x, var_y, var_z, var_theta, add, sub, mul, div, pow, neg, call } op = Op::number;
  double value = 0.0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(const Location& at) const {
    switch (op) {
      case Op::number: return value;
      case Op::var_x: return at.x;
      case Op::var_y: return at.y;
      case Op::var_z: return at.z;
      case Op::var_theta: return at.theta;
      case Op::add: return lhs->eval(at) + rhs->eval(at);
      case Op::sub: return lhs->eval(at) - rhs->eval(at);
      case Op::mul: return lhs->eval(at) * rhs->eval(at);
      case Op::div: return lhs->eval(at) / rhs->eval(at);
      case Op::pow: return std::pow(lhs->eval(at), rhs->eval(at));
      case Op::neg: return -lhs->eval(at);
      case Op::call: return fn(lhs->eval(at));
    }
    return 0.0;
  }

  bool constant() const {
    switch (op) {
      case Op::var_x:
      case Op::var_y:
      case Op::var_z:
      case Op::var_theta: return false;
      case Op::number: return true;
      default: return (!lhs || lhs->constant()) && (!rhs || rhs->constant());
    }
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

struct Function {
  const char* name;
  double (*fn)(double);
};

const Function kFunctions[] = {
    {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
    {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
    {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
    {"abs", [](double v) { return std::abs(v); }},   {"sinh", [](double v) { return std::sinh(v); }},
    {"cosh", [](double v) { return std::cosh(v); }}, {"tanh", [](double v) { return std::tanh(v); }},
};

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr number(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ExpressionError(msg, pos_ + 1); }

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

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+'))
        n = make(Op::add, n, term());
      else if (accept('-'))
        n = make(Op::sub, n, term());
      else
        return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*'))
        n = make(Op::mul, n, unary());
      else if (accept('/'))
        n = make(Op::div, n, unary());
      else
        return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Op::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x") return make(Op::var_x);
      if (name == "y") return make(Op::var_y);
      if (name == "z") return make(Op::var_z);
      if (name == "theta") return make(Op::var_theta);
      if (name == "pi") return number(std::numbers::pi);
      if (name == "e") return number(std::numbers::e);
      for (const auto& f : kFunctions)
        if (name == f.name) {
          if (!accept('(')) fail("expected '(' after " + name);
          auto n = std::make_shared<Expression::Node>();
          n->op = Op::call;
          n->fn = f.fn;
          n->lhs = expr();
          if (!accept(')')) fail("expected ')'");
          return n;
        }
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  e.root_ = number(value);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  e.text_ = buf;
  return e;
}

double Expression::operator()(const Location& at) const { return root_->eval(at); }

bool Expression::is_constant() const { return root_->constant(); }

}  // namespace finsler
