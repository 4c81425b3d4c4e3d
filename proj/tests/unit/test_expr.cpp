#include "varorbit/expr.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using varorbit::Expr;
using varorbit::ExprError;

namespace {

double eval(const Expr& e, std::vector<double> x) { return e(x); }

}  // namespace

TEST_SUITE("expr") {
  TEST_CASE("arithmetic and precedence") {
    const auto e = Expr::parse("1 + 2*3 - 4/2", {});
    CHECK(eval(e, {}) == doctest::Approx(5.0));
    CHECK(eval(Expr::parse("-2^2", {}), {}) == doctest::Approx(-4.0));
    CHECK(eval(Expr::parse("2^-1", {}), {}) == doctest::Approx(0.5));
    CHECK(eval(Expr::parse("2^3^2", {}), {}) == doctest::Approx(512.0));
    CHECK(eval(Expr::parse("(1+2)*(3+4)", {}), {}) == doctest::Approx(21.0));
  }

  TEST_CASE("variables, parameters and constants") {
    const auto e = Expr::parse("B/2*x - y*pi + e", {"x", "y"}, {{"B", 3.0}});
    CHECK(eval(e, {2.0, 1.0}) == doctest::Approx(3.0 - std::numbers::pi + std::numbers::e));
    CHECK(e.arity() == 2);
  }

  TEST_CASE("functions") {
    const auto e = Expr::parse("exp(r) + log(2) + sqrt(4) + sin(0) + cos(0) + tanh(0) + abs(-3)", {"r"});
    CHECK(eval(e, {0.0}) == doctest::Approx(1.0 + std::log(2.0) + 2.0 + 0.0 + 1.0 + 0.0 + 3.0));
  }

  TEST_CASE("symbolic derivatives match central differences") {
    const auto e = Expr::parse("exp(2*r)*cos(t) + r^3/(1+t^2) + tanh(r*t) + sqrt(1+r^2)", {"r", "t"});
    const std::vector<double> x{0.3, -0.7};
    for (int i = 0; i < 2; ++i) {
      const auto d = e.derivative(i);
      std::vector<double> xp = x, xm = x;
      const double h = 1e-6;
      xp[static_cast<std::size_t>(i)] += h;
      xm[static_cast<std::size_t>(i)] -= h;
      const double fd = (e(xp) - e(xm)) / (2 * h);
      CHECK(d(x) == doctest::Approx(fd).epsilon(1e-7));
    }
  }

  TEST_CASE("simplification") {
    CHECK(Expr::parse("0*x + 0", {"x"}).is_zero());
    CHECK(Expr::parse("x", {"x"}).derivative(0).is_constant());
    CHECK(Expr::parse("2*B", {}, {{"B", 1.5}}).is_constant());
    CHECK(Expr::parse("1 + x^2", {"x", "y"}).derivative(1).is_zero());
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(Expr::parse("1 +", {}), ExprError);
    CHECK_THROWS_AS(Expr::parse("foo(1)", {}), ExprError);
    CHECK_THROWS_AS(Expr::parse("z", {"x"}), ExprError);
    CHECK_THROWS_AS(Expr::parse("(1", {}), ExprError);
    CHECK_THROWS_AS(Expr::parse("1 2", {}), ExprError);
  }
}
