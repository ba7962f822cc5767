#include "wsc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace wsc {

namespace detail {
void simplex_quadrature(const Stratum&, int, const Box&, std::vector<QuadNode>&);
}

// ---------------------------------------------------------------- cantor

namespace {

// Truncated Cantor-type construction on [a,b]; mass queries and first two
// moments of any subinterval are exact for the generation-G measure.
struct CantorTree {
  CantorVariant variant;
  int G;
  double a, b, total;               // total mass of the truncated measure
  std::vector<double> len;          // node length per level
  std::vector<double> node_mass;    // mass per node per level
  std::vector<double> var_abs;      // second central moment factor per node

  CantorTree(CantorVariant v, int gens, double a_, double b_) : variant(v), G(gens), a(a_), b(b_) {
    len.resize(G + 1);
    node_mass.resize(G + 1);
    var_abs.resize(G + 1);
    len[0] = b - a;
    if (variant == CantorVariant::Ternary) {
      for (int g = 1; g <= G; ++g) len[g] = len[g - 1] / 3.0;
      total = 1.0;  // probability measure
      for (int g = 0; g <= G; ++g) node_mass[g] = std::pow(0.5, g);
    } else {
      for (int g = 1; g <= G; ++g)
        len[g] = (len[g - 1] - (b - a) * std::pow(0.25, g)) / 2.0;
      // Lebesgue restricted to the generation-G set: node mass = retained length
      node_mass[G] = len[G];
      for (int g = G - 1; g >= 0; --g) node_mass[g] = 2.0 * node_mass[g + 1];
      total = node_mass[0];
    }
    var_abs[G] = len[G] * len[G] / 12.0;
    for (int g = G - 1; g >= 0; --g) {
      double off = (len[g] - len[g + 1]) / 2.0;  // child center offset
      var_abs[g] = off * off + var_abs[g + 1];
    }
  }

  struct Moments {
    double m0 = 0, m1 = 0, m2 = 0;
    Moments& operator+=(const Moments& o) {
      m0 += o.m0;
      m1 += o.m1;
      m2 += o.m2;
      return *this;
    }
  };

  static Moments uniform_moments(double lo, double hi, double dens) {
    Moments m;
    m.m0 = dens * (hi - lo);
    m.m1 = dens * (hi * hi - lo * lo) / 2;
    m.m2 = dens * (hi * hi * hi - lo * lo * lo) / 3;
    return m;
  }

  Moments node_full(int g, double A) const {
    Moments m;
    double c = A + len[g] / 2;
    m.m0 = node_mass[g];
    m.m1 = m.m0 * c;
    m.m2 = m.m0 * (c * c) + m.m0 * var_abs[g] / 1.0;
    return m;
  }

  Moments query(int g, double A, double q0, double q1) const {
    double B = A + len[g];
    if (q1 <= A || q0 >= B) return {};
    if (q0 <= A && q1 >= B) return node_full(g, A);
    if (g == G) {
      double lo = std::max(q0, A), hi = std::min(q1, B);
      return uniform_moments(lo, hi, node_mass[G] / len[G]);
    }
    Moments m = query(g + 1, A, q0, q1);
    m += query(g + 1, B - len[g + 1], q0, q1);
    return m;
  }

  Moments moments(double q0, double q1) const { return query(0, a, q0, q1); }

  // Emit disjoint pieces covering [q0,q1] with exact moments, descending
  // until nodes are small relative to the query or are leaves.
  void pieces(int g, double A, double q0, double q1, double target,
              std::vector<std::pair<std::array<double, 2>, Moments>>& out) const {
    double B = A + len[g];
    if (q1 <= A || q0 >= B) return;
    bool inside = q0 <= A && q1 >= B;
    if (g == G || (inside && len[g] <= target)) {
      double lo = std::max(q0, A), hi = std::min(q1, B);
      Moments m = inside && g < G ? node_full(g, A)
                                  : (g == G ? uniform_moments(lo, hi, node_mass[G] / len[G])
                                            : node_full(g, A));
      if (m.m0 > 0) out.push_back({{lo, hi}, m});
      return;
    }
    pieces(g + 1, A, q0, q1, target, out);
    pieces(g + 1, B - len[g + 1], q0, q1, target, out);
  }
};

// 3-point rule on [lo,hi] matching (m0,m1,m2); falls back to the midpoint
// when the interval degenerates.
void moment_rule(double lo, double hi, const CantorTree::Moments& m, int axis,
                 const Vec3& base, double scale, std::vector<QuadNode>& out) {
  if (m.m0 <= 0) return;
  double mid = (lo + hi) / 2;
  if (hi - lo < 1e-14 * std::max(1.0, std::abs(hi))) {
    Vec3 x = base;
    x[axis] = m.m1 / m.m0;
    out.push_back({x, scale * m.m0});
    return;
  }
  Eigen::Matrix3d A;
  A << 1, 1, 1, lo, mid, hi, lo * lo, mid * mid, hi * hi;
  Eigen::Vector3d rhs(m.m0, m.m1, m.m2);
  Eigen::Vector3d w = A.fullPivLu().solve(rhs);
  double nodes[3] = {lo, mid, hi};
  for (int i = 0; i < 3; ++i) {
    if (w[i] == 0) continue;
    Vec3 x = base;
    x[axis] = nodes[i];
    out.push_back({x, scale * w[i]});
  }
}

void cantor_quadrature_1d(const Stratum& s, const Box& cell,
                          std::vector<QuadNode>& out) {
  CantorTree tree(s.variant, s.generations, s.iv_a, s.iv_b);
  double q0 = cell.lo[s.axis], q1 = cell.hi[s.axis];
  std::vector<std::pair<std::array<double, 2>, CantorTree::Moments>> pcs;
  tree.pieces(0, s.iv_a, q0, q1, (q1 - q0) / 4.0, pcs);
  double dens = s.weight * s.density.eval(Vec3::Zero());  // constant density
  Vec3 base = Vec3::Zero();
  for (auto& [iv, m] : pcs) {
    // check positivity; descend further if the 3x3 solve went negative
    Eigen::Matrix3d A;
    double mid = (iv[0] + iv[1]) / 2;
    A << 1, 1, 1, iv[0], mid, iv[1], iv[0] * iv[0], mid * mid, iv[1] * iv[1];
    Eigen::Vector3d w = A.fullPivLu().solve(Eigen::Vector3d(m.m0, m.m1, m.m2));
    if (iv[1] - iv[0] > 1e-13 && w.minCoeff() < -1e-13 * std::max(m.m0, 1e-30)) {
      std::vector<std::pair<std::array<double, 2>, CantorTree::Moments>> sub;
      tree.pieces(0, s.iv_a, iv[0], iv[1], (iv[1] - iv[0]) / 8.0, sub);
      if (sub.size() > 1) {
        for (auto& [siv, sm] : sub)
          moment_rule(siv[0], siv[1], sm, s.axis, base, dens, out);
        continue;
      }
    }
    moment_rule(iv[0], iv[1], m, s.axis, base, dens, out);
  }
}

double cantor_mass_1d(const Stratum& s, double q0, double q1) {
  CantorTree tree(s.variant, s.generations, s.iv_a, s.iv_b);
  double dens = s.weight * s.density.eval(Vec3::Zero());
  return dens * tree.moments(q0, q1).m0;
}

// ------------------------------------------------------------- ac boxes

// per-axis integral of ell(x) * x^e over [p,q], ell linear with ell(p or q)=1
double corner_axis_integral(double p, double q, int side, int e) {
  if (q <= p) return 0;
  double alpha, beta;  // ell = alpha x + beta
  if (side == 0) {
    alpha = -1.0 / (q - p);
    beta = q / (q - p);
  } else {
    alpha = 1.0 / (q - p);
    beta = -p / (q - p);
  }
  auto ipow = [](double x, int k) { return std::pow(x, k); };
  return alpha * (ipow(q, e + 2) - ipow(p, e + 2)) / (e + 2) +
         beta * (ipow(q, e + 1) - ipow(p, e + 1)) / (e + 1);
}

double plain_axis_integral(double p, double q, int e) {
  if (q <= p) return 0;
  return (std::pow(q, e + 1) - std::pow(p, e + 1)) / (e + 1);
}

// corner rule on box piece: weights \int phi_corner * rho, exact for
// polynomial rho; integrates functions multilinear over the piece exactly.
void box_quadrature(const Stratum& s, const std::vector<int>& axes, const Box& cell,
                    std::vector<QuadNode>& out) {
  Box piece;
  for (int a : axes) {
    piece.lo[a] = std::max(s.box.lo[a], cell.lo[a]);
    piece.hi[a] = std::min(s.box.hi[a], cell.hi[a]);
    if (piece.hi[a] <= piece.lo[a]) return;
  }
  const Poly& rho = s.density.as_poly();
  int k = (int)axes.size();
  for (int corner = 0; corner < (1 << k); ++corner) {
    double w = 0;
    for (auto& [e, coef] : rho.c) {
      double term = coef;
      for (int ai = 0; ai < k; ++ai) {
        int a = axes[ai];
        term *= corner_axis_integral(piece.lo[a], piece.hi[a], (corner >> ai) & 1, e[a]);
      }
      // exponents on axes outside this factor must be zero by construction
      w += term;
    }
    if (w == 0) continue;
    Vec3 x = Vec3::Zero();
    for (int ai = 0; ai < k; ++ai) {
      int a = axes[ai];
      x[a] = ((corner >> ai) & 1) ? piece.hi[a] : piece.lo[a];
    }
    out.push_back({x, s.weight * w});
  }
}

double box_mass(const Stratum& s, const std::vector<int>& axes, const Box& cell) {
  Box piece;
  for (int a : axes) {
    piece.lo[a] = std::max(s.box.lo[a], cell.lo[a]);
    piece.hi[a] = std::min(s.box.hi[a], cell.hi[a]);
    if (piece.hi[a] <= piece.lo[a]) return 0;
  }
  const Poly& rho = s.density.as_poly();
  double total = 0;
  for (auto& [e, coef] : rho.c) {
    double term = coef;
    for (int a : axes) term *= plain_axis_integral(piece.lo[a], piece.hi[a], e[a]);
    total += term;
  }
  return s.weight * total;
}

std::vector<int> box_axes(const Stratum& s, int n) {
  // axes where the box has extent; product factors carry their own subset
  std::vector<int> axes;
  for (int a = 0; a < n; ++a)
    if (s.box.hi[a] > s.box.lo[a]) axes.push_back(a);
  return axes;
}

}  // namespace

// -------------------------------------------------------------- dispatch

Box Stratum::support_box(int n) const {
  Box b;
  switch (kind) {
    case StratumKind::AcDensity: return box;
    case StratumKind::Simplex: {
      b.lo = vertices[0];
      b.hi = vertices[0];
      for (auto& v : vertices) {
        b.lo = b.lo.cwiseMin(v);
        b.hi = b.hi.cwiseMax(v);
      }
      return b;
    }
    case StratumKind::Cantor: {
      b.lo[axis] = iv_a;
      b.hi[axis] = iv_b;
      return b;
    }
    case StratumKind::PointMass: {
      b.lo = point;
      b.hi = point;
      return b;
    }
    case StratumKind::Product: {
      b.lo = Vec3::Zero();
      b.hi = Vec3::Zero();
      for (auto& f : factors) {
        Box fb = f.support_box(n);
        b.lo += fb.lo;  // factor boxes live on disjoint axes
        b.hi += fb.hi;
      }
      return b;
    }
  }
  return b;
}

void stratum_quadrature(const Stratum& s, int n, const Box& cell,
                        std::vector<QuadNode>& out) {
  switch (s.kind) {
    case StratumKind::AcDensity:
      box_quadrature(s, box_axes(s, n), cell, out);
      return;
    case StratumKind::Simplex:
      detail::simplex_quadrature(s, n, cell, out);
      return;
    case StratumKind::Cantor:
      cantor_quadrature_1d(s, cell, out);
      return;
    case StratumKind::PointMass: {
      bool in = true;
      for (int a = 0; a < n; ++a)
        if (s.point[a] < cell.lo[a] || s.point[a] >= cell.hi[a]) in = false;
      if (in) out.push_back({s.point, s.weight * s.density.eval(s.point), true});
      return;
    }
    case StratumKind::Product: {
      std::vector<std::vector<QuadNode>> parts;
      for (auto& f : s.factors) {
        parts.emplace_back();
        stratum_quadrature(f, n, cell, parts.back());
        if (parts.back().empty()) return;
      }
      std::vector<QuadNode> acc{{Vec3::Zero(), s.weight}};
      for (auto& part : parts) {
        std::vector<QuadNode> nxt;
        nxt.reserve(acc.size() * part.size());
        for (auto& a : acc)
          for (auto& p : part) nxt.push_back({a.x + p.x, a.w * p.w});
        acc.swap(nxt);
      }
      for (auto& qn : acc)
        if (qn.w != 0) {
          qn.atom = (s.dim == 0);
          out.push_back(qn);
        }
      return;
    }
  }
}

double stratum_mass(const Stratum& s, int n, const Box& box) {
  switch (s.kind) {
    case StratumKind::AcDensity:
      return box_mass(s, box_axes(s, n), box);
    case StratumKind::Cantor:
      return cantor_mass_1d(s, box.lo[s.axis], box.hi[s.axis]);
    case StratumKind::PointMass: {
      for (int a = 0; a < n; ++a)
        if (s.point[a] < box.lo[a] || s.point[a] >= box.hi[a]) return 0;
      return s.weight * s.density.eval(s.point);
    }
    case StratumKind::Product: {
      double m = s.weight;
      for (auto& f : s.factors) m *= stratum_mass(f, n, box);
      return m;
    }
    case StratumKind::Simplex: {
      // quadrature rules here are exact for the admissible densities
      std::vector<QuadNode> q;
      detail::simplex_quadrature(s, n, box, q);
      double m = 0;
      for (auto& qn : q) m += qn.w;
      return m;
    }
  }
  return 0;
}

double cell_mass(const MeasureSpec& spec, const Box& box) {
  Box b = box.intersect(spec.bbox, spec.n);
  // keep the caller's box when it already sits inside the bbox
  for (int a = 0; a < spec.n; ++a) {
    b.lo[a] = std::max(box.lo[a], spec.bbox.lo[a] - 1e-9);
    b.hi[a] = std::min(box.hi[a], spec.bbox.hi[a] + 1e-9);
    if (b.hi[a] <= b.lo[a]) return 0;
  }
  double m = 0;
  for (auto& s : spec.strata) m += stratum_mass(s, spec.n, b);
  return m;
}

std::vector<QuadNode> measure_quadrature(const MeasureSpec& spec, const Box& cell) {
  std::vector<QuadNode> out;
  for (auto& s : spec.strata) stratum_quadrature(s, spec.n, cell, out);
  return out;
}

double MeasureSpec::total_mass() const {
  Box b = bbox;
  for (int a = 0; a < n; ++a) {
    b.lo[a] -= 1.0;
    b.hi[a] += 1.0;
  }
  return cell_mass(*this, b);
}

double cantor_truncation_bound(const MeasureSpec& spec) {
  double bound = 0;
  std::function<void(const Stratum&)> visit = [&](const Stratum& s) {
    if (s.kind == StratumKind::Cantor) {
      CantorTree tree(s.variant, s.generations, s.iv_a, s.iv_b);
      double leaf = tree.node_mass[s.generations];
      double excess = 0;
      if (s.variant == CantorVariant::SmithVolterraCantor)
        excess = (s.iv_b - s.iv_a) * std::pow(0.5, s.generations + 1);
      bound = std::max(bound, std::max(2 * leaf, excess));
    }
    for (auto& f : s.factors) visit(f);
  };
  for (auto& s : spec.strata) visit(s);
  return bound;
}

// ------------------------------------------------------------ validation

static double simplex_kvolume(const Stratum& s, int n) {
  int k = s.dim;
  if (k == 0) return 1.0;
  Eigen::MatrixXd E(n, k);
  for (int j = 0; j < k; ++j) E.col(j) = (s.vertices[j + 1] - s.vertices[0]).head(n);
  Eigen::MatrixXd gram = E.transpose() * E;
  double det = gram.determinant();
  double fact = 1;
  for (int j = 2; j <= k; ++j) fact *= j;
  return det > 0 ? std::sqrt(det) / fact : 0.0;
}

static void validate_stratum(const Stratum& s, int n) {
  switch (s.kind) {
    case StratumKind::Simplex: {
      if ((int)s.vertices.size() != s.dim + 1)
        throw ValidationError("simplex needs dim+1 vertices");
      if (s.dim < 0 || s.dim > n) throw ValidationError("simplex dimension out of range");
      if (s.dim > 0 && simplex_kvolume(s, n) < 1e-14)
        throw ValidationError("degenerate simplex: vertices are affinely dependent");
      if (!s.density.is_polynomial() || s.density.poly_degree() > 2)
        throw ValidationError("density must be a polynomial of degree <= 2");
      if (s.dim == 3 && s.density.poly_degree() > 0)
        throw ValidationError("dim-3 simplices support constant densities only");
      break;
    }
    case StratumKind::AcDensity: {
      if (!s.density.is_polynomial() || s.density.poly_degree() > 2)
        throw ValidationError("density must be a polynomial of degree <= 2");
      bool any = false;
      for (int a = 0; a < n; ++a) {
        if (s.box.hi[a] > s.box.lo[a]) any = true;
        if (s.box.hi[a] < s.box.lo[a]) throw ValidationError("ac_density box is inverted");
      }
      if (!any) throw ValidationError("ac_density box is empty");
      break;
    }
    case StratumKind::Cantor: {
      if (s.generations < 1) throw ValidationError("cantor generations must be >= 1");
      if (s.generations > 48) throw ValidationError("cantor generations too large");
      if (s.iv_b <= s.iv_a) throw ValidationError("cantor interval is empty");
      if (s.axis < 0 || s.axis >= n) throw ValidationError("cantor axis out of range");
      if (!s.density.is_polynomial() || s.density.poly_degree() > 0)
        throw ValidationError("cantor strata support constant densities only");
      break;
    }
    case StratumKind::PointMass: {
      if (s.weight * s.density.eval(s.point) <= 0)
        throw ValidationError("point mass must be positive");
      break;
    }
    case StratumKind::Product: {
      for (auto& f : s.factors) validate_stratum(f, n);
      break;
    }
  }
  // nonnegative density spot check over the support
  Box sb = s.support_box(n);
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= (n > 1 ? 4 : 0); ++j)
      for (int k = 0; k <= (n > 2 ? 4 : 0); ++k) {
        Vec3 x = sb.lo;
        x[0] += (sb.hi[0] - sb.lo[0]) * i / 4.0;
        if (n > 1) x[1] += (sb.hi[1] - sb.lo[1]) * j / 4.0;
        if (n > 2) x[2] += (sb.hi[2] - sb.lo[2]) * k / 4.0;
        if (s.kind != StratumKind::Product && s.density.eval(x) < -1e-12)
          throw ValidationError("density is negative on the stratum support");
      }
}

void validate(const MeasureSpec& spec) {
  if (spec.n < 1 || spec.n > 3) throw ValidationError("ambient_dim must be 1, 2 or 3");
  if (spec.strata.empty()) throw ValidationError("measure needs at least one stratum");
  for (auto& s : spec.strata) {
    validate_stratum(s, spec.n);
    Box sb = s.support_box(spec.n);
    for (int a = 0; a < spec.n; ++a)
      if (sb.lo[a] < spec.bbox.lo[a] - 1e-9 || sb.hi[a] > spec.bbox.hi[a] + 1e-9)
        throw ValidationError("stratum support exceeds the declared bbox");
  }
  double m = spec.total_mass();
  if (!(m > 0) || !std::isfinite(m))
    throw ValidationError("total mass must be positive and finite");
}

// --------------------------------------------------------------- product

static void shift_axes(Stratum& s, int offset, int n_new) {
  auto shift_vec = [&](Vec3& v) {
    Vec3 w = Vec3::Zero();
    for (int a = 0; a < 3 - offset; ++a) w[a + offset] = v[a];
    v = w;
  };
  switch (s.kind) {
    case StratumKind::AcDensity:
      shift_vec(s.box.lo);
      shift_vec(s.box.hi);
      break;
    case StratumKind::Simplex:
      for (auto& v : s.vertices) shift_vec(v);
      break;
    case StratumKind::Cantor:
      s.axis += offset;
      break;
    case StratumKind::PointMass:
      shift_vec(s.point);
      break;
    case StratumKind::Product:
      for (auto& f : s.factors) shift_axes(f, offset, n_new);
      return;
  }
  // densities: rebuild the polynomial with shifted coordinates
  if (s.density.is_polynomial()) {
    Poly p = s.density.as_poly();
    Poly q;
    for (auto& [e, c] : p.c) {
      std::array<int, 3> e2{0, 0, 0};
      for (int a = 0; a < 3; ++a)
        if (e[a] != 0) {
          if (a + offset >= 3) throw DimensionError("density axis shift out of range");
          e2[a + offset] = e[a];
        }
      q.c[e2] += c;
    }
    std::ostringstream oss;
    bool first = true;
    for (auto& [e, c] : q.c) {
      if (!first) oss << " + ";
      first = false;
      oss << c;
      for (int a = 0; a < 3; ++a)
        for (int r = 0; r < e[a]; ++r) oss << "*x" << (a + 1);
    }
    if (first) oss << "0";
    s.density = parse_expr(oss.str(), n_new);
  }
}

MeasureSpec product_measure(const MeasureSpec& a, const MeasureSpec& b) {
  if (a.n + b.n > 3)
    throw DimensionError("product ambient dimension exceeds 3");
  MeasureSpec p;
  p.n = a.n + b.n;
  p.bbox.lo = a.bbox.lo;
  p.bbox.hi = a.bbox.hi;
  for (int ax = 0; ax < b.n; ++ax) {
    p.bbox.lo[a.n + ax] = b.bbox.lo[ax];
    p.bbox.hi[a.n + ax] = b.bbox.hi[ax];
  }
  auto primitive_factors = [](const Stratum& s) {
    std::vector<Stratum> fs;
    if (s.kind == StratumKind::Product) {
      fs = s.factors;
      if (!fs.empty()) fs.front().weight *= s.weight;
    } else {
      fs.push_back(s);
    }
    return fs;
  };
  for (auto& sa : a.strata)
    for (auto& sb : b.strata) {
      Stratum prod;
      prod.kind = StratumKind::Product;
      prod.dim = sa.dim + sb.dim;
      prod.density = parse_expr("1", p.n);
      prod.factors = primitive_factors(sa);
      for (auto f : primitive_factors(sb)) {
        shift_axes(f, a.n, p.n);
        prod.factors.push_back(std::move(f));
      }
      p.strata.push_back(std::move(prod));
    }
  p.provenance = std::make_pair(std::string("left"), std::string("right"));
  validate(p);
  return p;
}

// ---------------------------------------------------------------- labels

static bool stratum_ac(const Stratum& s, int n) {
  switch (s.kind) {
    case StratumKind::AcDensity: return true;
    case StratumKind::Simplex: return s.dim == n;
    case StratumKind::Cantor: return s.variant == CantorVariant::SmithVolterraCantor && n == 1;
    case StratumKind::PointMass: return false;
    case StratumKind::Product: {
      int dimsum = 0;
      for (auto& f : s.factors) {
        // each factor is judged against its own ambient dimension
        int fn = 0;
        switch (f.kind) {
          case StratumKind::AcDensity: {
            for (int a = 0; a < n; ++a)
              if (f.box.hi[a] > f.box.lo[a]) ++fn;
            if (!f.density.is_polynomial()) return false;
            dimsum += fn;
            break;
          }
          case StratumKind::Cantor: {
            fn = 1;
            if (f.variant != CantorVariant::SmithVolterraCantor) return false;
            dimsum += 1;
            break;
          }
          case StratumKind::Simplex: {
            return false;  // embedded simplex factors are singular in products
          }
          case StratumKind::PointMass: return false;
          case StratumKind::Product: return false;
        }
      }
      return dimsum == n;
    }
  }
  return false;
}

std::vector<LebesgueLabel> lebesgue_labels(const MeasureSpec& spec) {
  std::vector<LebesgueLabel> out;
  for (auto& s : spec.strata) {
    bool ac = stratum_ac(s, spec.n);
    std::string why;
    switch (s.kind) {
      case StratumKind::AcDensity: why = "density against Lebesgue measure"; break;
      case StratumKind::Simplex:
        why = s.dim == spec.n ? "full-dimensional simplex" : "Hausdorff measure of lower dimension";
        break;
      case StratumKind::Cantor:
        why = s.variant == CantorVariant::SmithVolterraCantor
                  ? "Lebesgue restricted to a fat Cantor set"
                  : "self-similar measure on a null set";
        break;
      case StratumKind::PointMass: why = "atom"; break;
      case StratumKind::Product:
        why = ac ? "product of absolutely continuous factors of full total dimension"
                 : "product with a singular or lower-dimensional factor";
        break;
    }
    out.push_back({ac ? LebesgueTag::AbsolutelyContinuous : LebesgueTag::Singular, why});
  }
  return out;
}

// --------------------------------------------------------------- motions

MeasureSpec axis_permuted(const MeasureSpec& spec, const std::array<int, 3>& perm,
                          const Vec3& shift) {
  MeasureSpec out = spec;
  auto map_vec = [&](const Vec3& v) {
    Vec3 w = Vec3::Zero();
    for (int a = 0; a < spec.n; ++a) w[perm[a]] = v[a];
    for (int a = 0; a < spec.n; ++a) w[a] += shift[a];
    return w;
  };
  auto map_box = [&](const Box& b) {
    Box r;
    Vec3 lo = map_vec(b.lo), hi = map_vec(b.hi);
    r.lo = lo.cwiseMin(hi);
    r.hi = lo.cwiseMax(hi);
    return r;
  };
  std::function<void(Stratum&)> fix = [&](Stratum& s) {
    switch (s.kind) {
      case StratumKind::AcDensity: {
        s.box = map_box(s.box);
        Poly p = s.density.as_poly(), q;
        for (auto& [e, c] : p.c) {
          std::array<int, 3> e2{0, 0, 0};
          for (int a = 0; a < 3; ++a) e2[a < spec.n ? perm[a] : a] += e[a];
          q.c[e2] += c;  // note: permutation only; translation handled below
        }
        // translated density: substitute x -> x - shift axis by axis
        Poly shifted;
        for (auto& [e, c] : q.c) {
          // expand prod (x_a - t_a)^{e_a}
          std::vector<std::pair<std::array<int, 3>, double>> terms{{{0, 0, 0}, c}};
          for (int a = 0; a < 3; ++a) {
            double t = a < spec.n ? shift[a] : 0.0;
            for (int r = 0; r < e[a]; ++r) {
              std::vector<std::pair<std::array<int, 3>, double>> nxt;
              for (auto& [ee, cc] : terms) {
                auto e1 = ee;
                e1[a] += 1;
                nxt.push_back({e1, cc});
                nxt.push_back({ee, -t * cc});
              }
              terms.swap(nxt);
            }
          }
          for (auto& [ee, cc] : terms) shifted.c[ee] += cc;
        }
        std::ostringstream oss;
        bool first = true;
        for (auto& [e, c] : shifted.c) {
          if (c == 0) continue;
          if (!first) oss << " + ";
          first = false;
          oss << "(" << c << ")";
          for (int a = 0; a < 3; ++a)
            for (int r = 0; r < e[a]; ++r) oss << "*x" << (a + 1);
        }
        if (first) oss << "0";
        s.density = parse_expr(oss.str(), spec.n);
        break;
      }
      case StratumKind::Simplex:
        for (auto& v : s.vertices) v = map_vec(v);
        break;
      case StratumKind::Cantor: {
        s.axis = perm[s.axis];
        s.iv_a += shift[s.axis];
        s.iv_b += shift[s.axis];
        break;
      }
      case StratumKind::PointMass:
        s.point = map_vec(s.point);
        break;
      case StratumKind::Product:
        for (auto& f : s.factors) fix(f);
        break;
    }
  };
  for (auto& s : out.strata) fix(s);
  out.bbox = map_box(spec.bbox);
  return out;
}

// ----------------------------------------------------------------- parse

namespace {

struct ConfigSection {
  std::string name;
  std::map<std::string, std::string> kv;
};

std::vector<ConfigSection> split_sections(const std::string& text) {
  std::vector<ConfigSection> sections;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto notspace = line.find_first_not_of(" \t\r");
    if (notspace == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(notspace, last - notspace + 1);
    if (line.front() == '[') {
      std::string name = line;
      name.erase(std::remove(name.begin(), name.end(), '['), name.end());
      name.erase(std::remove(name.begin(), name.end(), ']'), name.end());
      sections.push_back({name, {}});
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SyntaxError("line " + std::to_string(lineno) + ": expected key = value");
    if (sections.empty())
      throw SyntaxError("line " + std::to_string(lineno) + ": key outside a section");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(val);
    if (key.empty() || val.empty())
      throw SyntaxError("line " + std::to_string(lineno) + ": empty key or value");
    sections.back().kv[key] = val;
  }
  return sections;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

std::vector<double> parse_num_list(const std::string& s) {
  std::vector<double> out;
  std::string t;
  for (char c : s)
    if (c != '[' && c != ']') t += c;
  std::istringstream in(t);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::vector<double>> parse_vec_list(const std::string& s) {
  // [[a,b],[c,d],...]
  std::vector<std::vector<double>> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '[') {
      ++depth;
      if (depth == 2) cur.clear();
      continue;
    }
    if (c == ']') {
      if (depth == 2) out.push_back(parse_num_list(cur));
      --depth;
      continue;
    }
    if (depth == 2) cur += c;
  }
  if (out.empty()) out.push_back(parse_num_list(s));
  return out;
}

}  // namespace

MeasureSpec parse_measure_spec(const std::string& text) {
  auto sections = split_sections(text);
  MeasureSpec spec;
  bool have_domain = false;
  for (auto& sec : sections) {
    if (sec.name == "domain") {
      have_domain = true;
      if (!sec.kv.count("ambient_dim")) throw SyntaxError("[domain] needs ambient_dim");
      spec.n = (int)std::stod(sec.kv.at("ambient_dim"));
      if (spec.n < 1 || spec.n > 3) throw ValidationError("ambient_dim must be 1, 2 or 3");
      if (!sec.kv.count("bbox")) throw SyntaxError("[domain] needs bbox");
      auto rows = parse_vec_list(sec.kv.at("bbox"));
      if (rows.size() != 2 || (int)rows[0].size() < spec.n)
        throw SyntaxError("bbox must be [[lo...],[hi...]]");
      for (int a = 0; a < spec.n; ++a) {
        spec.bbox.lo[a] = rows[0][a];
        spec.bbox.hi[a] = rows[1][a];
      }
    } else if (sec.name == "stratum") {
      if (!have_domain) throw SyntaxError("[[stratum]] before [domain]");
      Stratum s;
      auto get = [&](const char* k) -> std::string {
        auto it = sec.kv.find(k);
        if (it == sec.kv.end()) throw SyntaxError(std::string("stratum missing key ") + k);
        return it->second;
      };
      std::string kind = unquote(get("kind"));
      s.density = parse_expr(sec.kv.count("density") ? unquote(sec.kv.at("density")) : "1",
                             spec.n);
      if (kind == "simplex") {
        s.kind = StratumKind::Simplex;
        s.dim = (int)std::stod(get("dim"));
        auto rows = parse_vec_list(get("vertices"));
        for (auto& r : rows) {
          Vec3 v = Vec3::Zero();
          for (int a = 0; a < spec.n && a < (int)r.size(); ++a) v[a] = r[a];
          s.vertices.push_back(v);
        }
      } else if (kind == "ac_density") {
        s.kind = StratumKind::AcDensity;
        s.dim = spec.n;
        if (sec.kv.count("bbox")) {
          auto rows = parse_vec_list(sec.kv.at("bbox"));
          for (int a = 0; a < spec.n; ++a) {
            s.box.lo[a] = rows[0][a];
            s.box.hi[a] = rows[1][a];
          }
        } else {
          s.box = spec.bbox;
        }
      } else if (kind == "cantor") {
        s.kind = StratumKind::Cantor;
        s.dim = 0;
        std::string variant = unquote(get("variant"));
        if (variant == "ternary")
          s.variant = CantorVariant::Ternary;
        else if (variant == "svc")
          s.variant = CantorVariant::SmithVolterraCantor;
        else
          throw SyntaxError("cantor variant must be \"ternary\" or \"svc\"");
        if (s.variant == CantorVariant::SmithVolterraCantor) s.dim = 1;
        s.generations = sec.kv.count("generations")
                            ? (int)std::stod(sec.kv.at("generations"))
                            : 30;
        s.axis = sec.kv.count("axis") ? (int)std::stod(sec.kv.at("axis")) - 1 : 0;
        auto iv = parse_num_list(sec.kv.count("interval") ? sec.kv.at("interval") : "[0,1]");
        s.iv_a = iv[0];
        s.iv_b = iv[1];
      } else if (kind == "point_mass") {
        s.kind = StratumKind::PointMass;
        s.dim = 0;
        auto pt = parse_num_list(get("point"));
        for (int a = 0; a < spec.n && a < (int)pt.size(); ++a) s.point[a] = pt[a];
      } else {
        throw SyntaxError("unknown stratum kind: " + kind);
      }
      spec.strata.push_back(std::move(s));
    } else {
      throw SyntaxError("unknown section [" + sec.name + "]");
    }
  }
  if (!have_domain) throw SyntaxError("config needs a [domain] section");
  validate(spec);
  return spec;
}

}  // namespace wsc
