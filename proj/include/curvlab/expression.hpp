#pragma once

// A small expression language over z1..zn and their conjugates, used for
// metric entries and holomorphic map components.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' integer)?
//   base   := number | 'i' | 'z' index | 'conj(' expr ')' | 'abs2(' expr ')'
//           | '(' expr ')' | '-' base
//
// `i` is the imaginary unit. Variables are written 1-based (z1) and stored
// 0-based.

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "curvlab/tensor.hpp"

namespace curvlab {

enum class NodeKind { Const, Var, ConjVar, Add, Sub, Mul, Div, Pow, Abs2, Conj, Neg };

class Expr {
 public:
  struct Node;

  Expr();  // constant zero

  static Expr constant(cplx c);
  static Expr var(std::size_t index);
  static Expr conj_var(std::size_t index);

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, int exponent);
  friend Expr abs2(const Expr& a);
  friend Expr conj(const Expr& a);

  NodeKind kind() const;
  cplx value() const;            // Const only
  std::size_t index() const;     // Var / ConjVar only
  int exponent() const;          // Pow only

  cplx eval(std::span<const cplx> z) const;
  cplx eval(const CVector& z) const;

  /// Wirtinger derivative d/dz_k (anti = false) or d/dzbar_k (anti = true).
  Expr derivative(std::size_t k, bool anti) const;

  /// True when the expression mentions a conjugated variable anywhere.
  bool depends_on_conjugates() const;
  /// One past the largest variable index, 0 for constants.
  std::size_t variable_count() const;

  /// Fully parenthesized canonical text; parse(to_string()) reproduces the tree.
  std::string to_string() const;

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr binary(NodeKind kind, const Expr& a, const Expr& b);
  std::shared_ptr<const Node> node_;
};

/// Throws Error(Config) with "line L, column C" in the message on bad input.
Expr parse_expression(std::string_view source);

}  // namespace curvlab
