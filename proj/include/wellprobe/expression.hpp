#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace wellprobe {

// Closed-form real expression in the variables `x` and `eps`.
//
// Grammar (whitespace insensitive):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | 'x' | 'eps' | 'pi' | fn '(' expr ')'
//            | 'pow' '(' expr ',' expr ')' | '(' expr ')'
//   fn      := 'exp' | 'sin' | 'cos'
//
// Expressions are immutable and cheap to copy; subtrees are shared.
class Expr {
 public:
  struct Node;

  Expr();  // the constant 0

  static Expr parse(std::string_view text);
  static Expr constant(double value);
  static Expr variable_x();
  static Expr variable_eps();

  double operator()(double x, double eps = 0.0) const;

  // Symbolic d/dx, with light constant folding.
  Expr derivative() const;

  bool depends_on_x() const;
  bool depends_on_eps() const;
  bool is_constant() const;

  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, const Expr& exponent);
  friend Expr exp(const Expr& a);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr log(const Expr& a);  // only produced by differentiation of pow

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

}  // namespace wellprobe
