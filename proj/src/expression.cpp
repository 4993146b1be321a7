#include "curvlab/expression.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "curvlab/error.hpp"

namespace curvlab {

struct Expr::Node {
  NodeKind kind = NodeKind::Const;
  cplx value{0.0, 0.0};
  std::size_t index = 0;
  int exponent = 0;
  Expr a{nullptr};
  Expr b{nullptr};
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

bool is_const(const Expr& e, cplx c) { return e.kind() == NodeKind::Const && e.value() == c; }
bool is_const(const Expr& e) { return e.kind() == NodeKind::Const; }

cplx ipow(cplx base, int n) {
  if (n < 0) return cplx{1.0, 0.0} / ipow(base, -n);
  cplx result{1.0, 0.0};
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

}  // namespace

Expr::Expr() {
  static const std::shared_ptr<const Node> zero = std::make_shared<Node>();
  node_ = zero;
}

Expr Expr::constant(cplx c) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Const;
  n->value = c;
  return Expr(std::move(n));
}

Expr Expr::var(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Var;
  n->index = index;
  return Expr(std::move(n));
}

Expr Expr::conj_var(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::ConjVar;
  n->index = index;
  return Expr(std::move(n));
}


Expr operator+(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return Expr::constant(a.value() + b.value());
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return Expr::binary(NodeKind::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return Expr::constant(a.value() - b.value());
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return -b;
  return Expr::binary(NodeKind::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return Expr::constant(a.value() * b.value());
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return Expr::binary(NodeKind::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b) && b.value() != cplx{0.0, 0.0})
    return Expr::constant(a.value() / b.value());
  if (is_const(a, 0.0)) return Expr::constant(0.0);
  if (is_const(b, 1.0)) return a;
  return Expr::binary(NodeKind::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (is_const(a)) return Expr::constant(-a.value());
  if (a.kind() == NodeKind::Neg) return a.node_->a;
  auto n = std::make_shared<Expr::Node>();
  n->kind = NodeKind::Neg;
  n->a = a;
  return Expr(std::move(n));
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr::constant(1.0);
  if (exponent == 1) return base;
  if (is_const(base) && (exponent > 0 || base.value() != cplx{0.0, 0.0}))
    return Expr::constant(ipow(base.value(), exponent));
  auto n = std::make_shared<Expr::Node>();
  n->kind = NodeKind::Pow;
  n->a = base;
  n->exponent = exponent;
  return Expr(std::move(n));
}

Expr abs2(const Expr& a) {
  if (is_const(a)) return Expr::constant(std::norm(a.value()));
  auto n = std::make_shared<Expr::Node>();
  n->kind = NodeKind::Abs2;
  n->a = a;
  return Expr(std::move(n));
}

Expr conj(const Expr& a) {
  switch (a.kind()) {
    case NodeKind::Const: return Expr::constant(std::conj(a.value()));
    case NodeKind::Var: return Expr::conj_var(a.index());
    case NodeKind::ConjVar: return Expr::var(a.index());
    case NodeKind::Conj: return a.node_->a;
    default: break;
  }
  auto n = std::make_shared<Expr::Node>();
  n->kind = NodeKind::Conj;
  n->a = a;
  return Expr(std::move(n));
}

Expr Expr::binary(NodeKind kind, const Expr& a, const Expr& b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->a = a;
  n->b = b;
  return Expr(std::move(n));
}

NodeKind Expr::kind() const { return node_->kind; }
cplx Expr::value() const { return node_->value; }
std::size_t Expr::index() const { return node_->index; }
int Expr::exponent() const { return node_->exponent; }

cplx Expr::eval(std::span<const cplx> z) const {
  const Node& n = *node_;
  switch (n.kind) {
    case NodeKind::Const: return n.value;
    case NodeKind::Var:
      require(n.index < z.size(), "Expr::eval: variable index exceeds point dimension");
      return z[n.index];
    case NodeKind::ConjVar:
      require(n.index < z.size(), "Expr::eval: variable index exceeds point dimension");
      return std::conj(z[n.index]);
    case NodeKind::Add: return n.a.eval(z) + n.b.eval(z);
    case NodeKind::Sub: return n.a.eval(z) - n.b.eval(z);
    case NodeKind::Mul: return n.a.eval(z) * n.b.eval(z);
    case NodeKind::Div: {
      const cplx d = n.b.eval(z);
      if (d == cplx{0.0, 0.0}) fail(ErrorKind::Numerical, "Expr::eval: division by zero");
      return n.a.eval(z) / d;
    }
    case NodeKind::Pow: {
      const cplx base = n.a.eval(z);
      if (n.exponent < 0 && base == cplx{0.0, 0.0})
        fail(ErrorKind::Numerical, "Expr::eval: zero raised to a negative power");
      return ipow(base, n.exponent);
    }
    case NodeKind::Abs2: return std::norm(n.a.eval(z));
    case NodeKind::Conj: return std::conj(n.a.eval(z));
    case NodeKind::Neg: return -n.a.eval(z);
  }
  return {};
}

cplx Expr::eval(const CVector& z) const {
  return eval(std::span<const cplx>(z.data(), static_cast<std::size_t>(z.size())));
}

Expr Expr::derivative(std::size_t k, bool anti) const {
  const Node& n = *node_;
  switch (n.kind) {
    case NodeKind::Const: return constant(0.0);
    case NodeKind::Var: return constant((n.index == k && !anti) ? 1.0 : 0.0);
    case NodeKind::ConjVar: return constant((n.index == k && anti) ? 1.0 : 0.0);
    case NodeKind::Add: return n.a.derivative(k, anti) + n.b.derivative(k, anti);
    case NodeKind::Sub: return n.a.derivative(k, anti) - n.b.derivative(k, anti);
    case NodeKind::Mul:
      return n.a.derivative(k, anti) * n.b + n.a * n.b.derivative(k, anti);
    case NodeKind::Div:
      return n.a.derivative(k, anti) / n.b - n.a * n.b.derivative(k, anti) / pow(n.b, 2);
    case NodeKind::Pow:
      return constant(static_cast<double>(n.exponent)) * pow(n.a, n.exponent - 1) *
             n.a.derivative(k, anti);
    case NodeKind::Abs2:
      // |e|^2 = e conj(e); d conj(e) = conj(dbar e)
      return n.a.derivative(k, anti) * conj(n.a) + n.a * conj(n.a.derivative(k, !anti));
    case NodeKind::Conj: return conj(n.a.derivative(k, !anti));
    case NodeKind::Neg: return -n.a.derivative(k, anti);
  }
  return constant(0.0);
}

bool Expr::depends_on_conjugates() const {
  const Node& n = *node_;
  switch (n.kind) {
    case NodeKind::Const:
    case NodeKind::Var: return false;
    case NodeKind::ConjVar: return true;
    case NodeKind::Conj:
    case NodeKind::Abs2: return n.a.variable_count() > 0;
    case NodeKind::Pow:
    case NodeKind::Neg: return n.a.depends_on_conjugates();
    default: return n.a.depends_on_conjugates() || n.b.depends_on_conjugates();
  }
}

std::size_t Expr::variable_count() const {
  const Node& n = *node_;
  switch (n.kind) {
    case NodeKind::Const: return 0;
    case NodeKind::Var:
    case NodeKind::ConjVar: return n.index + 1;
    case NodeKind::Pow:
    case NodeKind::Abs2:
    case NodeKind::Conj:
    case NodeKind::Neg: return n.a.variable_count();
    default: return std::max(n.a.variable_count(), n.b.variable_count());
  }
}

namespace {

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  if (x < 0) return "(" + s + ")";
  return s;
}

}  // namespace

std::string Expr::to_string() const {
  const Node& n = *node_;
  switch (n.kind) {
    case NodeKind::Const:
      if (n.value.imag() == 0.0) return format_real(n.value.real());
      return "(" + format_real(n.value.real()) + " + " + format_real(n.value.imag()) + " * i)";
    case NodeKind::Var: return "z" + std::to_string(n.index + 1);
    case NodeKind::ConjVar: return "conj(z" + std::to_string(n.index + 1) + ")";
    case NodeKind::Add: return "(" + n.a.to_string() + " + " + n.b.to_string() + ")";
    case NodeKind::Sub: return "(" + n.a.to_string() + " - " + n.b.to_string() + ")";
    case NodeKind::Mul: return "(" + n.a.to_string() + " * " + n.b.to_string() + ")";
    case NodeKind::Div: return "(" + n.a.to_string() + " / " + n.b.to_string() + ")";
    case NodeKind::Pow: return "(" + n.a.to_string() + "^" + std::to_string(n.exponent) + ")";
    case NodeKind::Abs2: return "abs2(" + n.a.to_string() + ")";
    case NodeKind::Conj: return "conj(" + n.a.to_string() + ")";
    case NodeKind::Neg: return "(-" + n.a.to_string() + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ < src_.size()) error("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "expression syntax error at line " << line << ", column " << col << ": " << msg;
    fail(ErrorKind::Config, os.str());
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) error(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = e + term();
      else if (accept('-')) e = e - term();
      else return e;
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (accept('*')) {
        e = e * factor();
      } else if (accept('/')) {
        const std::size_t at = pos_;
        Expr d = factor();
        if (is_const(d, 0.0)) {
          pos_ = at;
          error("division by the constant zero");
        }
        e = e / d;
      } else {
        return e;
      }
    }
  }

  Expr factor() {
    Expr b = base();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) ++pos_;
      const std::size_t digits = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ == digits) error("expected an integer exponent");
      const int n = std::atoi(std::string(src_.substr(start, pos_ - start)).c_str());
      if (n == 0) {
        pos_ = start;
        error("exponent must be a nonzero integer");
      }
      return pow(b, n);
    }
    return b;
  }

  Expr base() {
    skip_ws();
    if (pos_ >= src_.size()) error("unexpected end of input");
    const char c = src_[pos_];
    if (c == '-') {
      ++pos_;
      return -base();
    }
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      const std::string_view word = src_.substr(start, pos_ - start);
      if (word == "i") return Expr::constant(cplx{0.0, 1.0});
      if (word == "conj" || word == "abs2") {
        expect('(');
        Expr e = expr();
        expect(')');
        return word == "conj" ? conj(e) : abs2(e);
      }
      if (word.size() >= 2 && word[0] == 'z') {
        std::size_t k = 0;
        for (std::size_t q = 1; q < word.size(); ++q) {
          if (!std::isdigit(static_cast<unsigned char>(word[q]))) {
            pos_ = start;
            error("bad variable name '" + std::string(word) + "'");
          }
          k = k * 10 + static_cast<std::size_t>(word[q] - '0');
        }
        if (k == 0) {
          pos_ = start;
          error("variables are numbered from z1");
        }
        return Expr::var(k - 1);
      }
      pos_ = start;
      error("unknown identifier '" + std::string(word) + "'");
    }
    error(std::string("unexpected '") + c + "'");
  }

  Expr number() {
    char* end = nullptr;
    const std::string tmp(src_.substr(pos_));
    const double v = std::strtod(tmp.c_str(), &end);
    const std::size_t used = static_cast<std::size_t>(end - tmp.c_str());
    if (used == 0) error("malformed number");
    pos_ += used;
    return Expr::constant(v);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view source) { return Parser(source).parse_all(); }

}  // namespace curvlab
