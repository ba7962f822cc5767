#include "wsc/geometry.hpp"

namespace wsc {

Subspace Subspace::span(int n, const std::vector<Vec3>& gens, double tol) {
  Subspace s;
  s.ambient = n;
  if (gens.empty()) return s;
  Eigen::MatrixXd A(n, gens.size());
  for (size_t j = 0; j < gens.size(); ++j) A.col(j) = gens[j].head(n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int k = 0;
  for (int j = 0; j < svd.singularValues().size(); ++j)
    if (svd.singularValues()(j) > tol * std::max(smax, 1.0)) ++k;
  s.dim = k;
  s.basis.setZero();
  s.basis.block(0, 0, n, k) = svd.matrixU().leftCols(k);
  return s;
}

Subspace Subspace::complement() const {
  Subspace c;
  c.ambient = ambient;
  c.dim = ambient - dim;
  if (c.dim == 0) return c;
  // complete the basis to an orthonormal frame of R^n
  Eigen::MatrixXd B = cols();
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(ambient, ambient) - B * B.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU);
  c.basis.setZero();
  c.basis.block(0, 0, ambient, c.dim) = svd.matrixU().leftCols(c.dim);
  return c;
}

namespace {
double one_sided(const Subspace& from, const Subspace& onto) {
  // sup over the unit ball of `from` of the distance to the unit ball of
  // `onto`. For |b| <= 1 the nearest ball point is the orthogonal
  // projection, so this is the largest singular value of (I - P_onto) B.
  if (from.dim == 0) return 0.0;
  Eigen::MatrixXd B = from.cols();
  Eigen::MatrixXd Q = onto.cols();
  Eigen::MatrixXd R = B - Q * (Q.transpose() * B);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}
}  // namespace

double grassmann_distance(const Subspace& a, const Subspace& b) {
  return std::max(one_sided(a, b), one_sided(b, a));
}

double containment_residual(const Subspace& a, const Subspace& b) {
  double r = 0;
  for (int j = 0; j < a.dim; ++j) {
    Vec3 v = a.basis.col(j);
    r = std::max(r, (v - b.project(v)).head(a.ambient).norm());
  }
  return r;
}

}  // namespace wsc
