#include <doctest.h>

#include <string>

#include "curvlab/error.hpp"
#include "curvlab/expression.hpp"

using namespace curvlab;

namespace {

CVector point2(cplx a, cplx b) {
  CVector z(2);
  z << a, b;
  return z;
}

// Wirtinger derivatives by central differences in x and y.
cplx fd_wirtinger(const Expr& e, const CVector& z, std::size_t k, bool anti) {
  const double h = 1e-5;
  auto at = [&](cplx s) {
    CVector w = z;
    w(k) += s;
    return e.eval(w);
  };
  const cplx dx = (at(h) - at(-h)) / (2 * h);
  const cplx dy = (at(cplx(0, h)) - at(cplx(0, -h))) / (2 * h);
  const cplx I(0, 1);
  return anti ? 0.5 * (dx + I * dy) : 0.5 * (dx - I * dy);
}

}  // namespace

TEST_CASE("parser evaluates arithmetic with the imaginary unit") {
  const CVector z = point2(cplx(0.5, 0.25), cplx(-1, 2));
  CHECK(std::abs(parse_expression("1 + 2*i").eval(z) - cplx(1, 2)) < 1e-15);
  CHECK(std::abs(parse_expression("z1*z2 - 3").eval(z) - (z(0) * z(1) - 3.0)) < 1e-15);
  CHECK(std::abs(parse_expression("abs2(z2)").eval(z) - 5.0) < 1e-15);
  CHECK(std::abs(parse_expression("conj(z1)^2 / z2").eval(z) - std::pow(std::conj(z(0)), 2) / z(1)) < 1e-15);
  CHECK(std::abs(parse_expression("-(z1)^3").eval(z) + std::pow(z(0), 3)) < 1e-14);
  CHECK(std::abs(parse_expression("1e-1*z1").eval(z) - 0.1 * z(0)) < 1e-15);
}

TEST_CASE("parse errors name line and column") {
  try {
    parse_expression("z1 +\n  * z2");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("column 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_expression("z0"), Error);
  CHECK_THROWS_AS(parse_expression("sin(z1)"), Error);
  CHECK_THROWS_AS(parse_expression("(z1"), Error);
  CHECK_THROWS_AS(parse_expression(""), Error);
}

TEST_CASE("symbolic Wirtinger derivatives match finite differences") {
  const char* sources[] = {
      "z1*conj(z2) + abs2(z1)^2",
      "1/(1 - abs2(z1))^2",
      "(z1 + 2*i*conj(z1))^3 * z2",
      "conj(z1*z2) / (2 + abs2(z2))",
  };
  const CVector z = point2(cplx(0.3, -0.2), cplx(0.1, 0.4));
  for (const char* src : sources) {
    const Expr e = parse_expression(src);
    for (std::size_t k = 0; k < 2; ++k)
      for (bool anti : {false, true}) {
        const cplx exact = e.derivative(k, anti).eval(z);
        CHECK_MESSAGE(std::abs(exact - fd_wirtinger(e, z, k, anti)) < 1e-8, src);
      }
  }
}

TEST_CASE("holomorphy and variable count") {
  CHECK_FALSE(parse_expression("z1^2 + 3*z3").depends_on_conjugates());
  CHECK(parse_expression("z1^2 + 3*z3").variable_count() == 3);
  CHECK(parse_expression("abs2(z1)").depends_on_conjugates());
  CHECK(parse_expression("conj(z2)").depends_on_conjugates());
  CHECK(parse_expression("2 + i").variable_count() == 0);
}

TEST_CASE("canonical text parses back to the same function") {
  const Expr e = parse_expression("z1 - (z2 - 3)*conj(z1)/ (1+abs2(z2))^2");
  const Expr f = parse_expression(e.to_string());
  CHECK(f.to_string() == e.to_string());
  const CVector z = point2(cplx(0.7, 0.1), cplx(-0.3, 0.2));
  CHECK(std::abs(f.eval(z) - e.eval(z)) < 1e-15);
}

TEST_CASE("constants fold") {
  CHECK(parse_expression("2*3 + 1").kind() == NodeKind::Const);
  CHECK(parse_expression("z1 - z1").derivative(0, false).kind() == NodeKind::Const);
  CHECK(parse_expression("z1^2").derivative(0, true).kind() == NodeKind::Const);
}
