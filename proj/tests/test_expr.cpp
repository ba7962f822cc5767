#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "wsc/expr.hpp"

using namespace wsc;

TEST_CASE("polynomials evaluate and differentiate exactly") {
  Expr f = parse_expr("x1^2 + 0.5*x2 - 3", 2);
  CHECK(f.is_polynomial());
  CHECK(f.poly_degree() == 2);
  Vec3 x(0.4, -1.2, 0);
  CHECK(f.eval(x) == doctest::Approx(0.16 - 0.6 - 3).epsilon(1e-14));
  Vec3 g = f.grad(x);
  CHECK(g[0] == doctest::Approx(0.8));
  CHECK(g[1] == doctest::Approx(0.5));
}

TEST_CASE("trig of linear forms, gradients against finite differences") {
  Expr f = parse_expr("cos(pi*x1 + 2*x2)", 2);
  CHECK(!f.is_polynomial());
  std::vector<Vec3> pts{{0.2, 0.1, 0}, {0.7, -0.4, 0}};
  for (auto& x : pts) {
    auto fn = [&](const Vec3& p) { return std::cos(M_PI * p[0] + 2 * p[1]); };
    CHECK(f.eval(x) == doctest::Approx(fn(x)).epsilon(1e-13));
    Vec3 g = f.grad(x);
    Vec3 fd = oracle::fd_gradient(fn, x, 2);
    CHECK((g - fd).head(2).norm() < 1e-7);
  }
  CHECK_THROWS_AS(parse_expr("cos(x1^2)", 2), SyntaxError);
}

TEST_CASE("cone distance functions carry unit gradients off the apex") {
  Expr f = parse_expr("cone(0.5, 0.25)", 2);
  Vec3 x(0.9, 0.65, 0);
  double want = std::hypot(0.4, 0.4);
  CHECK(f.eval(x) == doctest::Approx(want).epsilon(1e-14));
  Vec3 g = f.grad(x);
  CHECK(g.head(2).norm() == doctest::Approx(1.0).epsilon(1e-13));
  Vec3 apex(0.5, 0.25, 0);
  CHECK(f.grad(apex).norm() == 0.0);  // subgradient convention at the apex
}

TEST_CASE("syntax errors are reported") {
  CHECK_THROWS_AS(parse_expr("x4", 3), SyntaxError);
  CHECK_THROWS_AS(parse_expr("x2", 1), SyntaxError);
  CHECK_THROWS_AS(parse_expr("1 +", 1), SyntaxError);
  CHECK_THROWS_AS(parse_expr("foo(x1)", 1), SyntaxError);
  CHECK_THROWS_AS(parse_expr("x1 / x1", 1), SyntaxError);
}

TEST_CASE("pi constant and division by constants") {
  Expr f = parse_expr("sin(pi*x1)/2", 1);
  CHECK(f.eval(Vec3(0.5, 0, 0)) == doctest::Approx(0.5).epsilon(1e-14));
}
