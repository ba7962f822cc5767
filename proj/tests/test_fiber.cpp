#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "wsc/fiber.hpp"

using namespace wsc;

namespace {

MeasureSpec leb1() {
  return parse_measure_spec(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"ac_density\"\ndensity = \"1\"\n");
}
MeasureSpec leb2() {
  return parse_measure_spec(
      "[domain]\nambient_dim = 2\nbbox = [[0,0],[1,1]]\n"
      "[[stratum]]\nkind = \"ac_density\"\ndensity = \"1\"\n");
}
MeasureSpec ternary(int g) {
  return parse_measure_spec(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"cantor\"\nvariant = \"ternary\"\ngenerations = " +
      std::to_string(g) + "\naxis = 1\ninterval = [0,1]\n");
}
MeasureSpec svc(int g) {
  return parse_measure_spec(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"cantor\"\nvariant = \"svc\"\ngenerations = " +
      std::to_string(g) + "\naxis = 1\ninterval = [0,1]\n");
}
MeasureSpec segment(double deg) {
  double c = std::cos(deg * M_PI / 180), s = std::sin(deg * M_PI / 180);
  std::ostringstream oss;
  oss << "[domain]\nambient_dim = 2\nbbox = [[0,0],[1,1]]\n"
      << "[[stratum]]\nkind = \"simplex\"\ndim = 1\nvertices = [[0.05,0.05],["
      << 0.05 + 0.9 * c << "," << 0.05 + 0.9 * s << "]]\ndensity = \"1\"\n";
  return parse_measure_spec(oss.str());
}

struct Built {
  GridSpace space;
  SymmetricForm M, G;
};
Built build(const MeasureSpec& spec, double h) {
  GridSpace s = build_space(spec, h);
  SymmetricForm M = assemble_mass(s);
  SymmetricForm G = assemble_stiffness(s);
  return {std::move(s), std::move(M), std::move(G)};
}

double mass_frac_with_dim(const GridSpace& space, const DistributionField& W, int d) {
  double m = 0, tot = 0;
  for (int c = 0; c < space.ncells(); ++c) {
    tot += space.cellmass(c);
    if (W.dim(c) == d) m += space.cellmass(c);
  }
  return m / tot;
}

}  // namespace

TEST_CASE("uniform 1d spectrum: sigma ladder matches the Neumann oracle") {
  auto b = build(leb1(), 1.0 / 64);
  auto pairs = null_gradient_spectrum(b.space, b.M.matrix, b.G.matrix, 40);
  REQUIRE(pairs.size() == 40);
  for (size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i].sigma >= pairs[i - 1].sigma);
  // the largest sigma of the pencil corresponds to the first Neumann mode:
  // sigma = 1/lambda_1 = 1/pi^2. Pull all pairs and check the top.
  auto all = null_gradient_spectrum(b.space, b.M.matrix, b.G.matrix, b.space.ndofs());
  double sigma_top = 0;
  for (auto& p : all) sigma_top = std::max(sigma_top, p.sigma);
  CHECK(sigma_top == doctest::Approx(1.0 / oracle::neumann_lambda(1)).epsilon(2e-3));
  // eigenvectors are G-orthonormal
  for (size_t i = 0; i < 5; ++i) {
    double g = pairs[i].coeffs.dot(b.G.matrix * pairs[i].coeffs);
    CHECK(g == doctest::Approx(1.0).epsilon(1e-8));
    double m = pairs[i].coeffs.dot(b.M.matrix * pairs[i].coeffs);
    CHECK(m == doctest::Approx(pairs[i].sigma).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("point-mass-only measure deflates completely") {
  MeasureSpec pm = parse_measure_spec(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"point_mass\"\npoint = [0.4]\ndensity = \"1\"\n");
  auto b = build(pm, 0.25);
  auto pairs = null_gradient_spectrum(b.space, b.M.matrix, b.G.matrix, 4);
  CHECK(pairs.empty());
}

TEST_CASE("ternary cantor produces a macroscopic sigma <= eps band") {
  auto b = build(ternary(14), 1.0 / 27);
  double eps = (1.0 / 27) / 3.0;
  int count = 0;
  for (int comp = 0; comp < b.space.ncomponents(); ++comp)
    count += (int)component_spectrum(b.space, b.M.matrix, b.G.matrix, comp, eps, 400).size();
  // two-branch step functions exist below eps: at least one per component
  CHECK(count >= b.space.ncomponents());
}

TEST_CASE("W field: uniform measures have no null directions") {
  for (double h : {1.0 / 16, 1.0 / 32}) {
    auto b1 = build(leb1(), h);
    DistributionField W1 = compute_W_field(b1.space, b1.M.matrix, b1.G.matrix, h / 3, 0.05);
    CHECK(mass_frac_with_dim(b1.space, W1, 0) == doctest::Approx(1.0));
    auto b2 = build(leb2(), h);
    DistributionField W2 = compute_W_field(b2.space, b2.M.matrix, b2.G.matrix, h / 3, 0.05);
    CHECK(mass_frac_with_dim(b2.space, W2, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("W field: cantor measures saturate, segment is transverse") {
  for (int m : {3, 4}) {
    double h = std::pow(3.0, -m);
    auto b = build(ternary(14), h);
    DistributionField W = compute_W_field(b.space, b.M.matrix, b.G.matrix, h / 3, 0.05);
    CHECK(mass_frac_with_dim(b.space, W, 1) == doctest::Approx(1.0));
  }
  for (int m : {6, 7, 8}) {
    double h = std::pow(2.0, -m);
    auto b = build(svc(20), h);
    DistributionField W = compute_W_field(b.space, b.M.matrix, b.G.matrix, h / 3, 0.05);
    CHECK(mass_frac_with_dim(b.space, W, 1) >= 0.95);
  }
  auto b = build(segment(0), 1.0 / 32);
  DistributionField W = compute_W_field(b.space, b.M.matrix, b.G.matrix, (1.0 / 32) / 3, 0.05);
  for (int c = 0; c < b.space.ncells(); ++c) {
    REQUIRE(W.dim(c) == 1);
    CHECK(std::abs(W.fibers[c].basis(1, 0)) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("tangent sweep: full fibers on the square, stable") {
  SweepSchedule sched;
  sched.scales = {1.0 / 8, 1.0 / 16, 1.0 / 32};
  TangentSweepResult sweep = compute_tangent_field(leb2(), sched);
  const GridSpace& space = *sweep.finest;
  CHECK(sweep.null_field.unstable_mass_fraction == doctest::Approx(0.0));
  for (int c = 0; c < space.ncells(); ++c) {
    CHECK(sweep.tangent.dim(c) == 2);
    CHECK(sweep.null_field.stable[c] == 1);
  }
}

TEST_CASE("tangent sweep: segment fibers align with the direction") {
  for (double deg : {0.0, 30.0, 90.0}) {
    SweepSchedule sched;
    sched.scales = {1.0 / 16, 1.0 / 32, 1.0 / 64};
    TangentSweepResult sweep = compute_tangent_field(segment(deg), sched);
    const GridSpace& space = *sweep.finest;
    Vec3 dir(std::cos(deg * M_PI / 180), std::sin(deg * M_PI / 180), 0);
    Subspace want = Subspace::span(2, {dir});
    double good = 0, tot = 0;
    for (int c = 0; c < space.ncells(); ++c) {
      if (!sweep.null_field.stable[c]) continue;
      tot += space.cellmass(c);
      if (sweep.tangent.dim(c) == 1 &&
          grassmann_distance(sweep.tangent.fibers[c], want) <= 1e-2)
        good += space.cellmass(c);
    }
    CHECK(good / tot >= 0.95);
  }
}

TEST_CASE("tangent sweep: fat cantor collapses to dimension zero") {
  SweepSchedule sched;
  sched.scales = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  TangentSweepResult sweep = compute_tangent_field(svc(20), sched);
  const GridSpace& space = *sweep.finest;
  double good = 0, tot = 0;
  for (int c = 0; c < space.ncells(); ++c) {
    if (!sweep.null_field.stable[c]) continue;
    tot += space.cellmass(c);
    if (sweep.tangent.dim(c) == 0) good += space.cellmass(c);
  }
  CHECK(good / tot >= 0.90);
}

TEST_CASE("complement involution and dimension split") {
  SweepSchedule sched;
  sched.scales = {1.0 / 16, 1.0 / 32};
  TangentSweepResult sweep = compute_tangent_field(segment(30), sched);
  DistributionField back = orthogonal_complement(sweep.tangent);
  const GridSpace& space = *sweep.finest;
  for (int c = 0; c < space.ncells(); ++c) {
    CHECK(sweep.tangent.dim(c) + sweep.null_field.dim(c) == 2);
    CHECK(grassmann_distance(back.fibers[c], sweep.null_field.fibers[c]) <= 1e-10);
  }
}

TEST_CASE("AM registry values") {
  auto bsvc = build(svc(12), 1.0 / 16);
  DistributionField V = am_distribution(svc(12), bsvc.space);
  for (int c = 0; c < bsvc.space.ncells(); ++c) CHECK(V.dim(c) == 1);

  auto bt = build(ternary(12), 1.0 / 9);
  DistributionField Vt = am_distribution(ternary(12), bt.space);
  for (int c = 0; c < bt.space.ncells(); ++c) CHECK(Vt.dim(c) == 0);

  auto bseg = build(segment(30), 1.0 / 16);
  DistributionField Vs = am_distribution(segment(30), bseg.space);
  Vec3 dir(std::cos(M_PI / 6), std::sin(M_PI / 6), 0);
  for (int c = 0; c < bseg.space.ncells(); ++c) {
    REQUIRE(Vs.dim(c) == 1);
    CHECK(std::abs(Vs.fibers[c].basis.col(0).dot(dir)) == doctest::Approx(1.0).epsilon(1e-10));
  }

  auto bl = build(leb2(), 0.25);
  DistributionField Vl = am_distribution(leb2(), bl.space);
  for (int c = 0; c < bl.space.ncells(); ++c) CHECK(Vl.dim(c) == 2);
}

TEST_CASE("grassmann distance: exact values and sampling oracle") {
  Subspace e1 = Subspace::span(2, {Vec3(1, 0, 0)});
  Subspace e2 = Subspace::span(2, {Vec3(0, 1, 0)});
  Subspace zero = Subspace::zero(2);
  CHECK(grassmann_distance(e1, e1) == doctest::Approx(0.0));
  CHECK(grassmann_distance(zero, e1) == doctest::Approx(1.0));
  double d12 = grassmann_distance(e1, e2);
  CHECK(d12 == doctest::Approx(oracle::grassmann_sampling(e1, e2, 100000, 42)).epsilon(1e-3));
  Subspace diag = Subspace::span(2, {Vec3(1, 1, 0)});
  double dd = grassmann_distance(e1, diag);
  CHECK(dd == doctest::Approx(oracle::grassmann_sampling(e1, diag, 100000, 7)).epsilon(2e-3));
  CHECK(grassmann_distance(e1, diag) == doctest::Approx(grassmann_distance(diag, e1)));
  CHECK(d12 <= 2.0);
  // subspace vs containing space
  Subspace full = Subspace::full(2);
  CHECK(grassmann_distance(e1, full) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("projection: idempotent, 1-Lipschitz, exact values") {
  Subspace diag = Subspace::span(2, {Vec3(1, 1, 0)});
  DistributionField F;
  F.fibers = {Subspace::span(2, {Vec3(1, 0, 0)}), Subspace::span(2, {Vec3(0, 1, 0)}), diag};
  std::vector<Vec3> w{Vec3(1, 0, 0), Vec3(1, 0, 0), Vec3(1, 0, 0)};
  auto p = project_vector_field(F, w);
  CHECK((p[0] - Vec3(1, 0, 0)).norm() < 1e-14);
  CHECK(p[1].norm() < 1e-14);
  CHECK((p[2] - Vec3(0.5, 0.5, 0)).norm() < 1e-14);
  auto pp = project_vector_field(F, p);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> uni(-2, 2);
  for (size_t c = 0; c < w.size(); ++c) {
    CHECK((pp[c] - p[c]).norm() < 1e-14);
    for (int t = 0; t < 25; ++t) {
      Vec3 v(uni(rng), uni(rng), 0);
      CHECK(F.fibers[c].project(v).norm() <= v.norm() + 1e-14);
    }
  }
}

TEST_CASE("rotation equivariance under axis permutation") {
  SweepSchedule sched;
  sched.scales = {1.0 / 16, 1.0 / 32};
  MeasureSpec seg = segment(0);
  std::array<int, 3> perm{1, 0, 2};
  MeasureSpec rot = axis_permuted(seg, perm, Vec3::Zero());
  TangentSweepResult s0 = compute_tangent_field(seg, sched);
  TangentSweepResult s1 = compute_tangent_field(rot, sched);
  const GridSpace& sp0 = *s0.finest;
  double worst = 0, checked = 0;
  for (int c = 0; c < sp0.ncells(); ++c) {
    if (!s0.null_field.stable[c]) continue;
    Vec3 x = sp0.cell_center(c);
    Vec3 rx(x[1], x[0], 0);
    int rc = s1.finest->cell_at(rx);
    if (rc < 0 || !s1.null_field.stable[rc]) continue;
    // rotate the fiber: swap coordinates of the basis
    const Subspace& T0 = s0.tangent.fibers[c];
    std::vector<Vec3> gens;
    for (int j = 0; j < T0.dim; ++j) {
      Vec3 v = T0.basis.col(j);
      gens.push_back(Vec3(v[1], v[0], 0));
    }
    Subspace rotated = gens.empty() ? Subspace::zero(2) : Subspace::span(2, gens);
    worst = std::max(worst, grassmann_distance(s1.tangent.fibers[rc], rotated));
    checked += 1;
  }
  CHECK(checked > 0);
  CHECK(worst <= 1e-6);
}
