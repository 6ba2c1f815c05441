#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "wellprobe/error.hpp"
#include "wellprobe/expression.hpp"

using wellprobe::Error;
using wellprobe::ErrorCode;
using wellprobe::Expr;

TEST_CASE("parses and evaluates the potential grammar") {
  CHECK(Expr::parse("(x-1)^2")(0.0) == doctest::Approx(1.0));
  CHECK(Expr::parse("(x-1)^2")(1.5) == doctest::Approx(0.25));
  CHECK(Expr::parse("-x^2")(3.0) == doctest::Approx(-9.0));
  CHECK(Expr::parse("2^3^2")(0.0) == doctest::Approx(512.0));
  CHECK(Expr::parse("pow(x, 3) / 2")(2.0) == doctest::Approx(4.0));
  CHECK(Expr::parse("exp(x) + sin(pi*x) + cos(0)")(0.5) == doctest::Approx(std::exp(0.5) + 1.0 + 1.0));
  CHECK(Expr::parse("eps*sin(5*x)")(0.3, 0.1) == doctest::Approx(0.1 * std::sin(1.5)));
  CHECK(Expr::parse("1.5e-1 * x")(2.0) == doctest::Approx(0.3));
}

TEST_CASE("tracks variable dependence") {
  CHECK(Expr::parse("eps*x").depends_on_eps());
  CHECK_FALSE(Expr::parse("(x-1)^2").depends_on_eps());
  CHECK(Expr::parse("2*pi").is_constant());
}

TEST_CASE("rejects malformed input with a parse error") {
  for (const char* bad : {"", "x+", "(x-1", "foo(x)", "x $ 2", "pow(x)", "3..2"}) {
    CAPTURE(bad);
    try {
      (void)Expr::parse(bad);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
    }
  }
}

TEST_CASE("symbolic derivatives of the test potentials") {
  const Expr v = Expr::parse("(x-1)^2");
  CHECK(v.derivative()(0.0) == doctest::Approx(-2.0));
  CHECK(v.derivative()(1.5) == doctest::Approx(1.0));
  const Expr q = Expr::parse("eps*sin(5*x)");
  CHECK(q.derivative()(0.2, 0.1) == doctest::Approx(0.5 * std::cos(1.0)));
  CHECK(Expr::parse("pow(x, x)").derivative()(2.0) == doctest::Approx(4.0 * (std::log(2.0) + 1.0)));
}

namespace {

// Random expression generator over the grammar, kept away from singular
// operations so that central differences stay meaningful.
std::string random_expr(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 8 : 2);
  std::uniform_real_distribution<double> coef(0.5, 2.0);
  switch (pick(rng)) {
    case 0: return "x";
    case 1: return std::to_string(coef(rng));
    case 2: return "eps";
    case 3: return "(" + random_expr(rng, depth - 1) + "+" + random_expr(rng, depth - 1) + ")";
    case 4: return "(" + random_expr(rng, depth - 1) + "-" + random_expr(rng, depth - 1) + ")";
    case 5: return "(" + random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1) + ")";
    case 6: return "(" + random_expr(rng, depth - 1) + ")/(2+x*x)";
    case 7: return "sin(" + random_expr(rng, depth - 1) + ")";
    default: return "(1+x*x)^" + std::to_string(coef(rng));
  }
}

}  // namespace

TEST_CASE("property: symbolic derivative matches central differences") {
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> point(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string text = random_expr(rng, 4);
    const Expr f = Expr::parse(text);
    const Expr df = f.derivative();
    const double x = point(rng), eps = 0.3;
    const double step = 1e-5;
    const double fd = (f(x + step, eps) - f(x - step, eps)) / (2 * step);
    CAPTURE(text);
    CHECK(df(x, eps) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}
