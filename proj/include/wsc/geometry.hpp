#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

namespace wsc {

// Ambient dimension is at most 3; unused coordinates stay zero.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& x, int n, double tol = 1e-12) const {
    for (int a = 0; a < n; ++a)
      if (x[a] < lo[a] - tol || x[a] > hi[a] + tol) return false;
    return true;
  }
  Box intersect(const Box& o, int n) const {
    Box r;
    for (int a = 0; a < n; ++a) {
      r.lo[a] = std::max(lo[a], o.lo[a]);
      r.hi[a] = std::min(hi[a], o.hi[a]);
    }
    return r;
  }
  bool empty(int n) const {
    for (int a = 0; a < n; ++a)
      if (hi[a] <= lo[a]) return true;
    return false;
  }
  double volume(int n) const {
    double v = 1;
    for (int a = 0; a < n; ++a) v *= std::max(0.0, hi[a] - lo[a]);
    return v;
  }
};

// A linear subspace of R^n given by an orthonormal basis.
struct Subspace {
  int ambient = 1;
  int dim = 0;
  Mat3 basis = Mat3::Zero();  // first `dim` columns are valid

  static Subspace zero(int n) {
    Subspace s;
    s.ambient = n;
    return s;
  }
  static Subspace full(int n) {
    Subspace s;
    s.ambient = n;
    s.dim = n;
    s.basis = Mat3::Identity();
    return s;
  }
  static Subspace span(int n, const std::vector<Vec3>& gens, double tol = 1e-10);

  Eigen::MatrixXd cols() const { return basis.block(0, 0, ambient, dim); }
  Vec3 project(const Vec3& v) const {
    Vec3 r = Vec3::Zero();
    for (int j = 0; j < dim; ++j) r += basis.col(j).dot(v) * basis.col(j);
    return r;
  }
  Subspace complement() const;
};

// Hausdorff distance between the closed unit balls of two subspaces.
double grassmann_distance(const Subspace& a, const Subspace& b);

// Distance from each basis vector of `a` to its projection onto `b`,
// maximised over the basis (containment residual; 0 iff a <= b).
double containment_residual(const Subspace& a, const Subspace& b);

}  // namespace wsc
