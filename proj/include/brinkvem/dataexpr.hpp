// Closed-form scalar fields over (x, y): parsing, exact differentiation and
// evaluation.  Used for boundary data, forcing terms and manufactured
// solutions supplied through config files.
#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace brinkvem {

/// Parse or evaluation failure; `offset` is the 0-based position in the
/// source text for parse errors, -1 for evaluation-time domain errors.
class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& what, long offset = -1)
      : std::runtime_error(what), offset_(offset) {}
  long offset() const { return offset_; }

 private:
  long offset_;
};

/// Immutable expression tree over variables x and y.
///
/// Grammar: numbers, x, y, pi, + - * /, integer powers with ^, unary minus,
/// sin, cos, exp, sqrt, parentheses.  Precedence ^ > unary minus > * / > + -
/// with the usual left associativity ("-x^2" is -(x^2)).
class Expr {
 public:
  Expr() = default;

  static Expr parse(const std::string& text);
  static Expr number(double v);

  bool valid() const { return node_ != nullptr; }
  double eval(double x, double y) const;
  /// Exact partial derivative with respect to 'x' or 'y'.
  Expr derivative(char var) const;
  std::string str() const;

  Expr operator+(const Expr& o) const;
  Expr operator-(const Expr& o) const;
  Expr operator*(const Expr& o) const;

  // implementation detail, opaque outside dataexpr.cpp
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

 private:
  explicit Expr(NodePtr n) : node_(std::move(n)) {}
  NodePtr node_;
};

} // namespace brinkvem
