#include "wsc/measure.hpp"

#include <cmath>

// Exact integration of polynomial densities over simplex pieces clipped to
// axis-aligned boxes: parameter-space clipping for k < n, tetrahedron
// clipping for k = 3, positive quadrature rules of sufficient degree.

namespace wsc {
namespace detail {

// ---- Gauss rules (Golub-Welsch on [0,1] with weight (1-x)^alpha) ----

struct Rule1D {
  std::vector<double> x, w;
};

Rule1D gauss_jacobi01(int npts, int alpha) {
  // weight (1-x)^alpha on [0,1]; standard Jacobi(alpha,0) recurrence mapped
  // from [-1,1].
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(npts, npts);
  double a = alpha, b = 0;
  for (int k = 0; k < npts; ++k) {
    double kk = k;
    double denom = (2 * kk + a + b) * (2 * kk + a + b + 2);
    double alph = (b * b - a * a) / (denom == 0 ? 1 : denom);
    J(k, k) = alph;
    if (k + 1 < npts) {
      double k1 = kk + 1;
      double num = 4 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
      double den = (2 * k1 + a + b - 1) * std::pow(2 * k1 + a + b, 2) * (2 * k1 + a + b + 1);
      double beta = std::sqrt(num / den);
      J(k, k + 1) = beta;
      J(k + 1, k) = beta;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  double mu0 = std::pow(2.0, a + b + 1) / (a + b + 1);  // int_{-1}^1 (1-x)^a
  Rule1D r;
  for (int k = 0; k < npts; ++k) {
    double t = es.eigenvalues()(k);                  // node on [-1,1]
    double wt = mu0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    // map to [0,1] with weight (1-x)^alpha: x = (t+1)/2, dx scale 1/2,
    // (1-x)^a = ((1-t)/2)^a
    r.x.push_back((t + 1) / 2);
    r.w.push_back(wt / std::pow(2.0, a + 1));
  }
  return r;
}

const Rule1D& gl4() {
  static Rule1D r = gauss_jacobi01(4, 0);
  return r;
}

// ---- segment pieces ----

bool clip_segment_param(const Vec3& p0, const Vec3& p1, int n, const Box& cell,
                        double& t0, double& t1) {
  t0 = 0;
  t1 = 1;
  for (int a = 0; a < n; ++a) {
    double d = p1[a] - p0[a];
    if (std::abs(d) < 1e-15) {
      if (p0[a] < cell.lo[a] - 1e-14 || p0[a] > cell.hi[a] + 1e-14) return false;
    } else {
      double ta = (cell.lo[a] - p0[a]) / d, tb = (cell.hi[a] - p0[a]) / d;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
  }
  return t1 - t0 > 1e-14;
}

void segment_quadrature(const Stratum& s, int n, const Box& cell,
                        std::vector<QuadNode>& out) {
  double t0, t1;
  if (!clip_segment_param(s.vertices[0], s.vertices[1], n, cell, t0, t1)) return;
  Vec3 d = s.vertices[1] - s.vertices[0];
  double len = d.head(n).norm();
  const Rule1D& r = gl4();
  for (size_t q = 0; q < r.x.size(); ++q) {
    double t = t0 + (t1 - t0) * r.x[q];
    Vec3 x = s.vertices[0] + t * d;
    double w = r.w[q] * (t1 - t0) * len * s.weight * s.density.eval(x);
    if (w != 0) out.push_back({x, w});
  }
}

// ---- triangle pieces: clip in parameter space ----

using Pt2 = Eigen::Vector2d;

std::vector<Pt2> clip_poly_halfplane(const std::vector<Pt2>& poly, const Pt2& nrm,
                                     double c) {
  // keep nrm.p <= c
  std::vector<Pt2> out;
  size_t m = poly.size();
  for (size_t i = 0; i < m; ++i) {
    const Pt2& A = poly[i];
    const Pt2& B = poly[(i + 1) % m];
    double da = nrm.dot(A) - c, db = nrm.dot(B) - c;
    bool ina = da <= 1e-14, inb = db <= 1e-14;
    if (ina) out.push_back(A);
    if (ina != inb) {
      double t = da / (da - db);
      out.push_back(A + t * (B - A));
    }
  }
  return out;
}

// Dunavant degree-4 rule, 6 points, positive weights (area coordinates).
struct TriRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;  // sums to 1
};
const TriRule& dunavant6() {
  static TriRule r = [] {
    TriRule t;
    auto orbit = [&](double a, double b, double w) {
      t.bary.push_back({a, b, 1 - a - b});
      t.bary.push_back({b, 1 - a - b, a});
      t.bary.push_back({1 - a - b, a, b});
      t.w.insert(t.w.end(), 3, w);
    };
    orbit(0.108103018168070, 0.445948490915965, 0.223381589678011 / 1.0);
    orbit(0.816847572980459, 0.091576213509771, 0.109951743655322 / 1.0);
    double s = 0;
    for (double w : t.w) s += w;
    for (double& w : t.w) w /= s;
    return t;
  }();
  return r;
}

void triangle_quadrature(const Stratum& s, int n, const Box& cell,
                         std::vector<QuadNode>& out) {
  const Vec3& V0 = s.vertices[0];
  Vec3 e1 = s.vertices[1] - V0, e2 = s.vertices[2] - V0;
  double jac;  // area of parameter unit cell image
  if (n == 2)
    jac = std::abs(e1[0] * e2[1] - e1[1] * e2[0]);
  else
    jac = e1.cross(e2).norm();
  std::vector<Pt2> poly{{0, 0}, {1, 0}, {0, 1}};
  for (int a = 0; a < n; ++a) {
    Pt2 nrm(e1[a], e2[a]);
    if (nrm.norm() < 1e-15) {
      if (V0[a] < cell.lo[a] - 1e-14 || V0[a] > cell.hi[a] + 1e-14) return;
      continue;
    }
    poly = clip_poly_halfplane(poly, nrm, cell.hi[a] - V0[a]);
    if (poly.size() < 3) return;
    poly = clip_poly_halfplane(poly, -nrm, -(cell.lo[a] - V0[a]));
    if (poly.size() < 3) return;
  }
  const TriRule& r = dunavant6();
  for (size_t i = 1; i + 1 < poly.size(); ++i) {
    Pt2 A = poly[0], B = poly[i], C = poly[i + 1];
    double pa = 0.5 * std::abs((B - A).x() * (C - A).y() - (B - A).y() * (C - A).x());
    if (pa < 1e-16) continue;
    for (size_t q = 0; q < r.w.size(); ++q) {
      Pt2 uv = r.bary[q][0] * A + r.bary[q][1] * B + r.bary[q][2] * C;
      Vec3 x = V0 + uv.x() * e1 + uv.y() * e2;
      double w = r.w[q] * pa * jac * s.weight * s.density.eval(x);
      if (w != 0) out.push_back({x, w});
    }
  }
}

// ---- tetrahedron pieces: clip in ambient space ----

struct Tet {
  std::array<Vec3, 4> v;
  double volume() const {
    Eigen::Matrix3d M;
    M.col(0) = v[1] - v[0];
    M.col(1) = v[2] - v[0];
    M.col(2) = v[3] - v[0];
    return std::abs(M.determinant()) / 6.0;
  }
};

// keep x[axis]*sign <= c
void clip_tet(const Tet& t, int axis, double sign, double c, std::vector<Tet>& out) {
  std::array<double, 4> d;
  int nin = 0;
  for (int i = 0; i < 4; ++i) {
    d[i] = sign * t.v[i][axis] - c;
    if (d[i] <= 1e-14) ++nin;
  }
  if (nin == 0) return;
  if (nin == 4) {
    out.push_back(t);
    return;
  }
  // collect polytope vertices: inside vertices + edge crossings
  std::vector<Vec3> verts;
  for (int i = 0; i < 4; ++i)
    if (d[i] <= 1e-14) verts.push_back(t.v[i]);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      bool ii = d[i] <= 1e-14, jj = d[j] <= 1e-14;
      if (ii != jj) {
        double s = d[i] / (d[i] - d[j]);
        verts.push_back(t.v[i] + s * (t.v[j] - t.v[i]));
      }
    }
  // The inside part is a convex polytope on 4..6 vertices. Cone from the
  // centroid over the hull facets; facets are found as maximal coplanar
  // vertex sets with all remaining vertices on one side, each triangulated
  // once by an angular fan to avoid double-covering quad facets.
  Vec3 cen = Vec3::Zero();
  for (auto& v : verts) cen += v;
  cen /= double(verts.size());
  size_t m = verts.size();
  double scale = 0;
  for (auto& v : verts) scale = std::max(scale, (v - cen).norm());
  std::vector<Vec3> used_normals;
  for (size_t a = 0; a < m; ++a)
    for (size_t b = a + 1; b < m; ++b)
      for (size_t cdx = b + 1; cdx < m; ++cdx) {
        Vec3 nrm = (verts[b] - verts[a]).cross(verts[cdx] - verts[a]);
        double nn = nrm.norm();
        if (nn < 1e-14 * scale * scale) continue;
        nrm /= nn;
        if (nrm.dot(verts[a] - cen) < 0) nrm = -nrm;  // outward
        double off = nrm.dot(verts[a]);
        bool seen = false;
        for (auto& u : used_normals)
          if ((u - nrm).norm() < 1e-9) seen = true;
        if (seen) continue;
        bool face = true;
        for (size_t k = 0; k < m && face; ++k)
          if (nrm.dot(verts[k]) - off > 1e-12 * std::max(scale, 1.0)) face = false;
        if (!face) continue;
        used_normals.push_back(nrm);
        // gather coplanar vertices and fan them in angular order
        std::vector<Vec3> ring;
        for (size_t k = 0; k < m; ++k)
          if (std::abs(nrm.dot(verts[k]) - off) <= 1e-12 * std::max(scale, 1.0))
            ring.push_back(verts[k]);
        if (ring.size() < 3) continue;
        Vec3 fc = Vec3::Zero();
        for (auto& v : ring) fc += v;
        fc /= double(ring.size());
        Vec3 t1 = (ring[0] - fc).normalized();
        Vec3 t2 = nrm.cross(t1);
        std::sort(ring.begin(), ring.end(), [&](const Vec3& p, const Vec3& q) {
          return std::atan2(t2.dot(p - fc), t1.dot(p - fc)) <
                 std::atan2(t2.dot(q - fc), t1.dot(q - fc));
        });
        for (size_t i = 1; i + 1 < ring.size(); ++i) {
          Tet nt{{cen, ring[0], ring[i], ring[i + 1]}};
          if (nt.volume() > 1e-18) out.push_back(nt);
        }
      }
}

// conical-product Gauss rule on a tetrahedron, degree 5, positive.
struct TetRule {
  std::vector<std::array<double, 3>> uvw;  // barycentric-free params
  std::vector<double> w;                   // sums to 1 on unit tet volume
};
const TetRule& tet_rule() {
  static TetRule r = [] {
    TetRule t;
    Rule1D r1 = gauss_jacobi01(3, 2), r2 = gauss_jacobi01(3, 1), r3 = gauss_jacobi01(3, 0);
    double vol = 1.0 / 6.0;
    for (size_t i = 0; i < 3; ++i)
      for (size_t j = 0; j < 3; ++j)
        for (size_t k = 0; k < 3; ++k) {
          double x = r1.x[i];
          double y = r2.x[j] * (1 - x);
          double z = r3.x[k] * (1 - x) * (1 - y / std::max(1 - x, 1e-300));
          // z = r3 * (1-x-y)
          z = r3.x[k] * (1 - x - y);
          double w = r1.w[i] * r2.w[j] * r3.w[k];
          t.uvw.push_back({x, y, z});
          t.w.push_back(w);
        }
    double s = 0;
    for (double w : t.w) s += w;
    for (double& w : t.w) w *= (1.0 / s);
    (void)vol;
    return t;
  }();
  return r;
}

void tet_quadrature(const Stratum& s, int n, const Box& cell,
                    std::vector<QuadNode>& out) {
  (void)n;
  std::vector<Tet> pieces{Tet{{s.vertices[0], s.vertices[1], s.vertices[2], s.vertices[3]}}};
  for (int a = 0; a < 3; ++a)
    for (int side = 0; side < 2; ++side) {
      std::vector<Tet> nxt;
      for (auto& t : pieces)
        clip_tet(t, a, side == 0 ? 1.0 : -1.0,
                 side == 0 ? cell.hi[a] : -cell.lo[a], nxt);
      pieces.swap(nxt);
      if (pieces.empty()) return;
    }
  const TetRule& r = tet_rule();
  for (auto& t : pieces) {
    double vol = t.volume();
    if (vol < 1e-18) continue;
    for (size_t q = 0; q < r.w.size(); ++q) {
      auto [u, v, w3] = r.uvw[q];
      Vec3 x = t.v[0] + u * (t.v[1] - t.v[0]) + v * (t.v[2] - t.v[0]) +
               w3 * (t.v[3] - t.v[0]);
      double w = r.w[q] * vol * s.weight * s.density.eval(x);
      if (w != 0) out.push_back({x, w});
    }
  }
}

void simplex_quadrature(const Stratum& s, int n, const Box& cell,
                        std::vector<QuadNode>& out) {
  switch (s.dim) {
    case 0: {
      if (cell.contains(s.vertices[0], n))
        out.push_back({s.vertices[0], s.weight * s.density.eval(s.vertices[0])});
      return;
    }
    case 1: segment_quadrature(s, n, cell, out); return;
    case 2: triangle_quadrature(s, n, cell, out); return;
    case 3: tet_quadrature(s, n, cell, out); return;
    default: throw UnsupportedStratumError("simplex dimension out of range");
  }
}

}  // namespace detail
}  // namespace wsc
