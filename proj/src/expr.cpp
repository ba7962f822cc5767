#include "wsc/expr.hpp"

#include <cctype>
#include <cmath>
#include <optional>

namespace wsc {

Poly Poly::constant(double v) {
  Poly p;
  if (v != 0) p.c[{0, 0, 0}] = v;
  return p;
}
Poly Poly::coord(int axis) {
  Poly p;
  std::array<int, 3> e{0, 0, 0};
  e[axis] = 1;
  p.c[e] = 1.0;
  return p;
}
Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  for (auto& [e, v] : o.c) {
    r.c[e] += v;
    if (r.c[e] == 0) r.c.erase(e);
  }
  return r;
}
Poly Poly::operator-(const Poly& o) const {
  Poly neg;
  for (auto& [e, v] : o.c) neg.c[e] = -v;
  return *this + neg;
}
Poly Poly::operator*(const Poly& o) const {
  Poly r;
  for (auto& [e1, v1] : c)
    for (auto& [e2, v2] : o.c) {
      std::array<int, 3> e{e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]};
      if (e[0] + e[1] + e[2] > 16) throw SyntaxError("polynomial degree too large");
      r.c[e] += v1 * v2;
    }
  for (auto it = r.c.begin(); it != r.c.end();)
    it = (it->second == 0) ? r.c.erase(it) : std::next(it);
  return r;
}
Poly Poly::pow(int k) const {
  Poly r = Poly::constant(1.0);
  for (int i = 0; i < k; ++i) r = r * (*this);
  return r;
}
int Poly::degree() const {
  int d = 0;
  for (auto& [e, v] : c) d = std::max(d, e[0] + e[1] + e[2]);
  return d;
}
double Poly::eval(const Vec3& x) const {
  double s = 0;
  for (auto& [e, v] : c)
    s += v * std::pow(x[0], e[0]) * std::pow(x[1], e[1]) * std::pow(x[2], e[2]);
  return s;
}

struct Expr::Node {
  enum class Kind { Const, Coord, Add, Sub, Mul, Pow, Cos, Sin, Cone } kind;
  double value = 0;          // Const
  int axis = 0;              // Coord
  int exponent = 1;          // Pow
  Vec3 apex = Vec3::Zero();  // Cone
  int ambient = 1;
  std::shared_ptr<const Node> a, b;

  double eval(const Vec3& x) const {
    switch (kind) {
      case Kind::Const: return value;
      case Kind::Coord: return x[axis];
      case Kind::Add: return a->eval(x) + b->eval(x);
      case Kind::Sub: return a->eval(x) - b->eval(x);
      case Kind::Mul: return a->eval(x) * b->eval(x);
      case Kind::Pow: return std::pow(a->eval(x), exponent);
      case Kind::Cos: return std::cos(a->eval(x));
      case Kind::Sin: return std::sin(a->eval(x));
      case Kind::Cone: return (x - apex).head(ambient).norm();
    }
    return 0;
  }
  Vec3 grad(const Vec3& x) const {
    switch (kind) {
      case Kind::Const: return Vec3::Zero();
      case Kind::Coord: {
        Vec3 g = Vec3::Zero();
        g[axis] = 1;
        return g;
      }
      case Kind::Add: return a->grad(x) + b->grad(x);
      case Kind::Sub: return a->grad(x) - b->grad(x);
      case Kind::Mul: return a->eval(x) * b->grad(x) + b->eval(x) * a->grad(x);
      case Kind::Pow: {
        double base = a->eval(x);
        return exponent * std::pow(base, exponent - 1) * a->grad(x);
      }
      case Kind::Cos: return -std::sin(a->eval(x)) * a->grad(x);
      case Kind::Sin: return std::cos(a->eval(x)) * a->grad(x);
      case Kind::Cone: {
        Vec3 d = Vec3::Zero();
        d.head(ambient) = (x - apex).head(ambient);
        double r = d.norm();
        return r > 1e-14 ? Vec3(d / r) : Vec3::Zero();
      }
    }
    return Vec3::Zero();
  }
  std::optional<Poly> poly() const {
    switch (kind) {
      case Kind::Const: return Poly::constant(value);
      case Kind::Coord: return Poly::coord(axis);
      case Kind::Add: {
        auto pa = a->poly(), pb = b->poly();
        if (pa && pb) return *pa + *pb;
        return std::nullopt;
      }
      case Kind::Sub: {
        auto pa = a->poly(), pb = b->poly();
        if (pa && pb) return *pa - *pb;
        return std::nullopt;
      }
      case Kind::Mul: {
        auto pa = a->poly(), pb = b->poly();
        if (pa && pb) return *pa * *pb;
        return std::nullopt;
      }
      case Kind::Pow: {
        auto pa = a->poly();
        if (pa && exponent >= 0) return pa->pow(exponent);
        return std::nullopt;
      }
      default: return std::nullopt;
    }
  }
  bool linear() const {
    auto p = poly();
    return p && p->degree() <= 1;
  }
};

double Expr::eval(const Vec3& x) const {
  double v = root->eval(x);
  if (!std::isfinite(v)) throw EvalError("expression evaluated to a non-finite value");
  return v;
}
Vec3 Expr::grad(const Vec3& x) const { return root->grad(x); }
bool Expr::is_polynomial() const { return root && root->poly().has_value(); }
int Expr::poly_degree() const {
  auto p = root->poly();
  return p ? p->degree() : -1;
}
const Poly& Expr::as_poly() const {
  static thread_local Poly cache;
  auto p = root->poly();
  if (!p) throw EvalError("expression is not polynomial");
  cache = *p;
  return cache;
}

namespace {

struct Parser {
  const std::string& s;
  size_t i = 0;
  int n;

  void skip() {
    while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
  }
  bool eat(char c) {
    skip();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) throw SyntaxError(std::string("expected '") + c + "' in expression");
  }
  bool peek_ident(const char* id) {
    skip();
    size_t len = std::strlen(id);
    return s.compare(i, len, id) == 0;
  }
  bool eat_ident(const char* id) {
    if (peek_ident(id)) {
      i += std::strlen(id);
      return true;
    }
    return false;
  }

  using NodePtr = std::shared_ptr<const Expr::Node>;
  NodePtr make(Expr::Node n_) { return std::make_shared<Expr::Node>(std::move(n_)); }
  NodePtr constant(double v) {
    Expr::Node nd;
    nd.kind = Expr::Node::Kind::Const;
    nd.value = v;
    nd.ambient = n;
    return make(nd);
  }
  NodePtr binary(Expr::Node::Kind k, NodePtr a, NodePtr b) {
    Expr::Node nd;
    nd.kind = k;
    nd.a = a;
    nd.b = b;
    nd.ambient = n;
    return make(nd);
  }

  NodePtr parse() {
    auto e = sum();
    skip();
    if (i != s.size()) throw SyntaxError("trailing characters in expression: " + s.substr(i));
    return e;
  }
  NodePtr sum() {
    skip();
    bool neg = eat('-');
    auto a = term();
    if (neg) a = binary(Expr::Node::Kind::Sub, constant(0.0), a);
    for (;;) {
      if (eat('+'))
        a = binary(Expr::Node::Kind::Add, a, term());
      else if (eat('-'))
        a = binary(Expr::Node::Kind::Sub, a, term());
      else
        return a;
    }
  }
  NodePtr term() {
    auto a = factor();
    for (;;) {
      skip();
      if (eat('*'))
        a = binary(Expr::Node::Kind::Mul, a, factor());
      else if (eat('/')) {
        auto b = factor();
        if (b->kind != Expr::Node::Kind::Const || b->value == 0)
          throw SyntaxError("division only by nonzero constants");
        a = binary(Expr::Node::Kind::Mul, a, constant(1.0 / b->value));
      } else
        return a;
    }
  }
  NodePtr factor() {
    auto a = base();
    skip();
    if (eat('^')) {
      skip();
      size_t j = i;
      while (j < s.size() && std::isdigit((unsigned char)s[j])) ++j;
      if (j == i) throw SyntaxError("'^' requires an integer exponent");
      int k = std::stoi(s.substr(i, j - i));
      i = j;
      Expr::Node nd;
      nd.kind = Expr::Node::Kind::Pow;
      nd.exponent = k;
      nd.a = a;
      nd.ambient = n;
      return make(nd);
    }
    return a;
  }
  NodePtr base() {
    skip();
    if (eat('(')) {
      auto e = sum();
      expect(')');
      return e;
    }
    if (eat_ident("cos") || (i >= 3 && false)) return trig(Expr::Node::Kind::Cos);
    if (eat_ident("sin")) return trig(Expr::Node::Kind::Sin);
    if (eat_ident("cone")) return cone();
    if (eat_ident("pi")) return constant(M_PI);
    if (i < s.size() && s[i] == 'x') {
      ++i;
      if (i >= s.size() || !std::isdigit((unsigned char)s[i]))
        throw SyntaxError("expected coordinate index after 'x'");
      int axis = s[i] - '1';
      ++i;
      if (axis < 0 || axis >= n)
        throw SyntaxError("coordinate index out of range for ambient dimension");
      Expr::Node nd;
      nd.kind = Expr::Node::Kind::Coord;
      nd.axis = axis;
      nd.ambient = n;
      return make(nd);
    }
    // number
    size_t j = i;
    while (j < s.size() && (std::isdigit((unsigned char)s[j]) || s[j] == '.' ||
                            s[j] == 'e' || s[j] == 'E' ||
                            ((s[j] == '+' || s[j] == '-') && j > i &&
                             (s[j - 1] == 'e' || s[j - 1] == 'E'))))
      ++j;
    if (j == i) throw SyntaxError("unexpected character in expression: " + s.substr(i, 1));
    double v = std::stod(s.substr(i, j - i));
    i = j;
    return constant(v);
  }
  NodePtr trig(Expr::Node::Kind k) {
    expect('(');
    auto arg = sum();
    expect(')');
    if (!arg->linear())
      throw SyntaxError("cos/sin accept only linear forms of the coordinates");
    Expr::Node nd;
    nd.kind = k;
    nd.a = arg;
    nd.ambient = n;
    return make(nd);
  }
  NodePtr cone() {
    expect('(');
    Expr::Node nd;
    nd.kind = Expr::Node::Kind::Cone;
    nd.ambient = n;
    for (int a = 0; a < n; ++a) {
      if (a > 0) expect(',');
      skip();
      size_t j = i;
      while (j < s.size() && (std::isdigit((unsigned char)s[j]) || s[j] == '.' ||
                              s[j] == '-' || s[j] == '+' || s[j] == 'e'))
        ++j;
      nd.apex[a] = std::stod(s.substr(i, j - i));
      i = j;
    }
    expect(')');
    return make(nd);
  }
};

}  // namespace

Expr parse_expr(const std::string& text, int ambient_dim) {
  Parser p{text, 0, ambient_dim};
  Expr e;
  e.root = p.parse();
  e.text_ = text;
  return e;
}

}  // namespace wsc
