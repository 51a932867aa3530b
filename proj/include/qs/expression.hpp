#pragma once

#include <memory>
#include <string>

#include "qs/mesh.hpp"

namespace qs {

/// Scalar expression in x and y over the grammar
///   expr := term (('+' | '-') term)*
///   term := unary (('*' | '/') unary)*
///   unary := '-' unary | power
///   power := primary ('^' unary)?
///   primary := number | x | y | (sin|cos|exp|abs) '(' expr ')' | '(' expr ')'
class Expression {
 public:
  static Expression parse(const std::string& text);
  double operator()(double x, double y) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

/// Samples an expression at every node (boundary included).
ScalarField sample_expression(const GridSpec& g, const Expression& e);

}  // namespace qs
