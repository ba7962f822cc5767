#pragma once

#include <map>
#include <memory>
#include <string>

#include "wsc/geometry.hpp"

namespace wsc {

struct SyntaxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Multivariate polynomial over x1..x3, exponents capped small.
struct Poly {
  // key: packed exponents (i,j,k), value: coefficient
  std::map<std::array<int, 3>, double> c;

  static Poly constant(double v);
  static Poly coord(int axis);
  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly pow(int k) const;
  int degree() const;
  double eval(const Vec3& x) const;
};

// Closed-form scalar expression: polynomials, cos/sin of linear forms,
// and cone(|x - p|) terms, each with an exact gradient.
class Expr {
 public:
  Expr() = default;

  double eval(const Vec3& x) const;
  Vec3 grad(const Vec3& x) const;

  bool is_polynomial() const;
  int poly_degree() const;            // -1 when not polynomial
  const Poly& as_poly() const;        // throws when not polynomial
  const std::string& text() const { return text_; }

  struct Node;
  std::shared_ptr<const Node> root;

 private:
  std::string text_;
  friend Expr parse_expr(const std::string&, int ambient_dim);
};

// Parses the closed grammar: numbers, pi, x1..x{n}, + - * / ^int,
// cos(linear), sin(linear), cone(p1,..,pn) = |x - p|.
Expr parse_expr(const std::string& text, int ambient_dim);

}  // namespace wsc
