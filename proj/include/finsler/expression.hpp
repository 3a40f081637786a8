// SPDX-License-Identifier: Apache-2.0
//
// Closed-form arithmetic expressions over sample locations, e.g.
// "1 + 0.5*cos(theta)". Operators + - * / ^, unary minus, parentheses;
// variables x, y, z, theta; constants pi, e; functions sin cos tan exp log
// sqrt abs sinh cosh tanh.
#pragma once

#include "finsler/common.hpp"

#include <memory>
#include <string>

namespace finsler {

class ExpressionError : public InvalidArgument {
 public:
  ExpressionError(const std::string& what, std::size_t column)
      : InvalidArgument(what + " at column " + std::to_string(column)), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class Expression {
 public:
  /// Throws ExpressionError with a 1-based column on malformed input.
  static Expression parse(const std::string& text);
  static Expression constant(double value);

  double operator()(const Location& at) const;
  const std::string& text() const { return text_; }
  /// True when no variable occurs.
  bool is_constant() const;

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace finsler
