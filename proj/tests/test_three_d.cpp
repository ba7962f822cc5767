#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "wsc/sobolev.hpp"

using namespace wsc;

namespace {

MeasureSpec leb3() {
  return parse_measure_spec(
      "[domain]\nambient_dim = 3\nbbox = [[0,0,0],[1,1,1]]\n"
      "[[stratum]]\nkind = \"ac_density\"\ndensity = \"1\"\n");
}

MeasureSpec tetra() {
  return parse_measure_spec(
      "[domain]\nambient_dim = 3\nbbox = [[0,0,0],[1,1,1]]\n"
      "[[stratum]]\nkind = \"simplex\"\ndim = 3\n"
      "vertices = [[0.1,0.1,0.1],[0.9,0.1,0.1],[0.1,0.9,0.1],[0.1,0.1,0.9]]\n"
      "density = \"1\"\n");
}

MeasureSpec segment3d() {
  return parse_measure_spec(
      "[domain]\nambient_dim = 3\nbbox = [[0,0,0],[1,1,1]]\n"
      "[[stratum]]\nkind = \"simplex\"\ndim = 1\n"
      "vertices = [[0.1,0.2,0.3],[0.9,0.6,0.5]]\ndensity = \"1\"\n");
}

MeasureSpec triangle3d() {
  return parse_measure_spec(
      "[domain]\nambient_dim = 3\nbbox = [[0,0,0],[1,1,1]]\n"
      "[[stratum]]\nkind = \"simplex\"\ndim = 2\n"
      "vertices = [[0.1,0.1,0.2],[0.9,0.2,0.3],[0.3,0.8,0.7]]\ndensity = \"1\"\n");
}

}  // namespace

TEST_CASE("tetrahedron mass: exact volume and clipped additivity") {
  MeasureSpec spec = tetra();
  double vol = 0.8 * 0.8 * 0.8 / 6.0;
  CHECK(spec.total_mass() == doctest::Approx(vol).epsilon(1e-12));
  // additivity across random axis splits of the bbox
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> uni(0.15, 0.85);
  for (int t = 0; t < 12; ++t) {
    int axis = t % 3;
    double cut = uni(rng);
    Box left, right;
    left.lo = Vec3(0, 0, 0);
    left.hi = Vec3(1, 1, 1);
    right = left;
    left.hi[axis] = cut;
    right.lo[axis] = cut;
    double m = cell_mass(spec, left) + cell_mass(spec, right);
    CHECK(m == doctest::Approx(vol).epsilon(1e-11));
  }
}

TEST_CASE("triangle in 3d: area and centroid against closed form") {
  MeasureSpec spec = triangle3d();
  Vec3 a(0.1, 0.1, 0.2), b(0.9, 0.2, 0.3), c(0.3, 0.8, 0.7);
  double area = 0.5 * (b - a).cross(c - a).norm();
  CHECK(spec.total_mass() == doctest::Approx(area).epsilon(1e-12));
  // quadrature first moment = area * centroid
  Box all;
  all.lo = Vec3(-1, -1, -1);
  all.hi = Vec3(2, 2, 2);
  auto q = measure_quadrature(spec, all);
  Vec3 m1 = Vec3::Zero();
  double m0 = 0;
  for (auto& n : q) {
    m0 += n.w;
    m1 += n.w * n.x;
  }
  Vec3 centroid = (a + b + c) / 3;
  CHECK(m0 == doctest::Approx(area).epsilon(1e-12));
  CHECK((m1 / m0 - centroid).norm() < 1e-12);
}

TEST_CASE("full 3d density: forms behave like the classical space") {
  MeasureSpec spec = leb3();
  GridSpace space = build_space(spec, 1.0 / 8);
  SymmetricForm M = assemble_mass(space);
  SymmetricForm G = assemble_stiffness(space);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(space.ndofs());
  CHECK(ones.dot(M.matrix * ones) == doctest::Approx(1.0).epsilon(1e-9));
  Eigen::VectorXd cx = project_function(space, parse_expr("x3", 3));
  CHECK(cx.dot(G.matrix * cx) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(ones.dot(G.matrix * ones)) < 1e-10);
}

TEST_CASE("3d tangent sweep: full fibers for the cube, line fibers for a segment") {
  SweepSchedule sched;
  sched.scales = {1.0 / 4, 1.0 / 8};
  TangentSweepResult cube = compute_tangent_field(leb3(), sched);
  for (int c = 0; c < cube.finest->ncells(); ++c) CHECK(cube.tangent.dim(c) == 3);

  SweepSchedule sseg;
  sseg.scales = {1.0 / 8, 1.0 / 16};
  MeasureSpec seg = segment3d();
  TangentSweepResult sw = compute_tangent_field(seg, sseg);
  Vec3 dir = (Vec3(0.9, 0.6, 0.5) - Vec3(0.1, 0.2, 0.3)).normalized();
  Subspace want = Subspace::span(3, {dir});
  double good = 0, tot = 0;
  for (int c = 0; c < sw.finest->ncells(); ++c) {
    if (!sw.null_field.stable[c]) continue;
    tot += sw.finest->cellmass(c);
    if (sw.tangent.dim(c) == 1 &&
        grassmann_distance(sw.tangent.fibers[c], want) <= 5e-2)
      good += sw.finest->cellmass(c);
  }
  CHECK(tot > 0);
  CHECK(good / tot >= 0.9);
}

TEST_CASE("triple product lebesgue x lebesgue x cantor tensorises") {
  MeasureSpec leb1 = parse_measure_spec(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"ac_density\"\ndensity = \"1\"\n");
  MeasureSpec cant = parse_measure_spec(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"cantor\"\nvariant = \"ternary\"\ngenerations = 10\n"
      "axis = 1\ninterval = [0,1]\n");
  MeasureSpec prod = product_measure(product_measure(leb1, leb1), cant);
  CHECK(prod.n == 3);
  CHECK(prod.total_mass() == doctest::Approx(1.0).epsilon(1e-11));
  // mass factorisation on a box
  Box bx;
  bx.lo = Vec3(0, 0.25, 0);
  bx.hi = Vec3(0.5, 1.0, 1.0 / 3);
  CHECK(cell_mass(prod, bx) == doctest::Approx(0.5 * 0.75 * 0.5).epsilon(1e-11));
  // fibers: x-y plane tangent, cantor axis null
  SweepSchedule sched;
  sched.scales = {1.0 / 9, 1.0 / 27};
  TangentSweepResult sw = compute_tangent_field(prod, sched);
  Subspace want = Subspace::span(3, {Vec3(1, 0, 0), Vec3(0, 1, 0)});
  double good = 0, tot = 0;
  for (int c = 0; c < sw.finest->ncells(); ++c) {
    if (!sw.null_field.stable[c]) continue;
    tot += sw.finest->cellmass(c);
    if (sw.tangent.dim(c) == 2 &&
        grassmann_distance(sw.tangent.fibers[c], want) <= 0.1)
      good += sw.finest->cellmass(c);
  }
  CHECK(tot > 0);
  CHECK(good / tot >= 0.9);
}

TEST_CASE("heat flow along an embedded segment matches the 1d spectral oracle") {
  // unit-density segment of length L: the flow reduces to the 1d interval,
  // first Neumann mode decays like exp(-(pi/L)^2 t)
  MeasureSpec spec = parse_measure_spec(
      "[domain]\nambient_dim = 2\nbbox = [[0,0],[1,1]]\n"
      "[[stratum]]\nkind = \"simplex\"\ndim = 1\n"
      "vertices = [[0.05,0.45],[0.95,0.45]]\ndensity = \"1\"\n");
  double L = 0.9;
  SweepSchedule sched;
  sched.scales = {1.0 / 64, 1.0 / 128, 1.0 / 256};
  TangentSweepResult sw = compute_tangent_field(spec, sched);
  const GridSpace& space = *sw.finest;
  SymmetricForm M = assemble_mass(space);
  SparseMat GT = assemble_relaxed_stiffness(space, sw.tangent);
  // f0 = cos(pi (x - 0.05)/L) expressed as a linear-form cosine
  std::ostringstream f0s;
  f0s << "cos(" << M_PI / L << "*x1 - " << M_PI * 0.05 / L << ")";
  Eigen::VectorXd f0 = project_function(space, parse_expr(f0s.str(), 2));
  double t_final = 0.05;
  HeatTrace trace;
  Eigen::VectorXd fT = heat_flow(space, M.matrix, GT, f0, t_final, 64, &trace);
  double lam = std::pow(M_PI / L, 2);
  Eigen::VectorXd want = std::exp(-lam * t_final) * f0;
  double num = (fT - want).transpose() * (M.matrix * (fT - want));
  double den = want.transpose() * (M.matrix * want);
  CHECK(std::sqrt(num / std::max(den, 1e-300)) <= 5e-2);
  for (size_t s = 1; s < trace.energy.size(); ++s)
    CHECK(trace.energy[s] <= trace.energy[s - 1] + 1e-14);
}
