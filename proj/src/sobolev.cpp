#include "wsc/sobolev.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

namespace wsc {

SparseMat assemble_relaxed_stiffness(const GridSpace& space,
                                     const DistributionField& T) {
  int n = space.n(), K = space.corners();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve((size_t)space.ncells() * K * K);
  for (int c = 0; c < space.ncells(); ++c) {
    Eigen::MatrixXd B = T.fibers[c].cols();  // n x dim
    Eigen::MatrixXd P = B * B.transpose();   // projector onto T(c)
    // sum_q w (P dphi)' (P dphi) = sum_q w dphi' P dphi
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd phi;
    Eigen::MatrixXd dphi;
    const auto& quad = space.quad(c);
    Box cell;
    Vec3 xc = space.cell_center(c);
    for (int a = 0; a < n; ++a) {
      cell.lo[a] = xc[a] - space.h() / 2;
      cell.hi[a] = xc[a] + space.h() / 2;
    }
    for (auto& qn : quad) {
      Vec3 t;
      for (int a = 0; a < n; ++a) t[a] = (qn.x[a] - cell.lo[a]) / space.h();
      // reuse the local shape gradient through cellG would lose P; recompute
      Eigen::MatrixXd dp(n, K);
      for (int k = 0; k < K; ++k)
        for (int a = 0; a < n; ++a) {
          double d = ((k >> a) & 1) ? 1.0 / space.h() : -1.0 / space.h();
          for (int b = 0; b < n; ++b) {
            if (b == a) continue;
            d *= ((k >> b) & 1) ? t[b] : (1 - t[b]);
          }
          dp(a, k) = d;
        }
      L.noalias() += qn.w * dp.transpose() * P * dp;
    }
    const auto& ids = space.cell_dofs(c);
    for (int a = 0; a < K; ++a)
      for (int b = 0; b < K; ++b)
        if (L(a, b) != 0) trip.emplace_back(ids[a], ids[b], L(a, b));
  }
  SparseMat GT(space.ndofs(), space.ndofs());
  GT.setFromTriplets(trip.begin(), trip.end());
  return GT;
}

SobolevSolution minimal_relaxed_gradient(const GridSpace& space, const SparseMat& M,
                                         const SparseMat& G,
                                         const Eigen::VectorXd& f_coeffs, double eps,
                                         double svd_tol) {
  DistributionField W = compute_W_field(space, M, G, eps, svd_tol);
  SobolevSolution sol;
  sol.route = MwugRoute::Relaxation;
  sol.coeffs = f_coeffs;
  sol.min_gradient.resize(space.ncells());
  sol.mwug.resize(space.ncells());
  DistributionField T = orthogonal_complement(W);
  for (int c = 0; c < space.ncells(); ++c) {
    Vec3 g = sample_gradient(space, f_coeffs, c);
    Vec3 gs = g - W.fibers[c].project(g);
    sol.min_gradient[c] = gs;
    sol.mwug[c] = gs.head(space.n()).norm();
  }
  SparseMat GT = assemble_relaxed_stiffness(space, T);
  sol.energy = 0.5 * f_coeffs.dot(GT * f_coeffs);
  return sol;
}

SobolevSolution mwug_via_projection(const GridSpace& space, const DistributionField& T,
                                    const DistributionField& V, const Expr& f) {
  SobolevSolution sol;
  sol.route = MwugRoute::Projection;
  sol.coeffs = project_function(space, f);
  sol.min_gradient.resize(space.ncells());
  sol.mwug.resize(space.ncells());
  double energy = 0;
  for (int c = 0; c < space.ncells(); ++c) {
    Vec3 x = cell_centroid(space, c);
    Vec3 am = V.fibers[c].project(f.grad(x));  // Alberti-Marchese gradient
    Vec3 gs = T.fibers[c].project(am);
    sol.min_gradient[c] = gs;
    sol.mwug[c] = gs.head(space.n()).norm();
    energy += 0.5 * space.cellmass(c) * sol.mwug[c] * sol.mwug[c];
  }
  sol.energy = energy;
  return sol;
}

double cheeger_energy(const GridSpace& space, const SparseMat& M, const SparseMat& G,
                      const Eigen::VectorXd& f_coeffs, double eps) {
  return minimal_relaxed_gradient(space, M, G, f_coeffs, eps).energy;
}

namespace {

std::vector<char> boundary_dofs(const GridSpace& space) {
  std::vector<char> bd(space.ndofs(), 0);
  const Box& bb = space.spec().bbox;
  double h = space.h();
  for (int d = 0; d < space.ndofs(); ++d) {
    Vec3 x = space.dof_coord(d);
    for (int a = 0; a < space.n(); ++a)
      if (x[a] - h <= bb.lo[a] + 1e-12 || x[a] + h >= bb.hi[a] - 1e-12) bd[d] = 1;
  }
  return bd;
}

Eigen::VectorXd pairing_vector(const GridSpace& space, const std::vector<Vec3>& w) {
  Eigen::VectorXd B = Eigen::VectorXd::Zero(space.ndofs());
  for (int c = 0; c < space.ncells(); ++c) {
    const auto& ids = space.cell_dofs(c);
    Eigen::VectorXd local =
        space.cellB(c).transpose() * w[c].head(space.n());  // corners
    for (size_t k = 0; k < ids.size(); ++k) B[ids[k]] += local[k];
  }
  return B;
}

// node-level pairing for closed-form fields: exact for the quadrature rules
Eigen::VectorXd pairing_vector_eval(const GridSpace& space,
                                    const std::function<Vec3(const Vec3&)>& w_eval) {
  int n = space.n(), K = space.corners();
  Eigen::VectorXd B = Eigen::VectorXd::Zero(space.ndofs());
  for (int c = 0; c < space.ncells(); ++c) {
    const auto& ids = space.cell_dofs(c);
    Vec3 xc = space.cell_center(c);
    for (auto& qn : space.quad(c)) {
      if (qn.atom) continue;
      Vec3 wx = w_eval(qn.x);
      Vec3 t;
      for (int a = 0; a < n; ++a) t[a] = (qn.x[a] - (xc[a] - space.h() / 2)) / space.h();
      for (int k = 0; k < K; ++k) {
        double dot = 0;
        for (int a = 0; a < n; ++a) {
          double d = ((k >> a) & 1) ? 1.0 / space.h() : -1.0 / space.h();
          for (int b = 0; b < n; ++b) {
            if (b == a) continue;
            d *= ((k >> b) & 1) ? t[b] : (1 - t[b]);
          }
          dot += d * wx[a];
        }
        B[ids[k]] += qn.w * dot;
      }
    }
  }
  return B;
}

}  // namespace

DivergencePair check_divergence(const GridSpace& space, const SparseMat& M,
                                const std::vector<Vec3>& w, double tol,
                                double refine_tol,
                                const std::function<Vec3(const Vec3&)>* w_eval) {
  DivergencePair out;
  out.field = w;
  Eigen::VectorXd B = w_eval ? pairing_vector_eval(space, *w_eval)
                             : pairing_vector(space, w);

  // least squares on the mu-active dofs; dofs whose basis functions carry
  // only quadrature dust are pruned (they hold no L2(mu) data), and the
  // dual norm is floored at the same level
  double dof_floor = 1e-9 * space.total_mass();
  std::vector<int> keep;
  for (int i = 0; i < space.ndofs(); ++i)
    if (space.dof_mass(i) >= dof_floor) keep.push_back(i);
  std::vector<int> where(space.ndofs(), -1);
  for (size_t i = 0; i < keep.size(); ++i) where[keep[i]] = (int)i;
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < M.outerSize(); ++j)
    for (SparseMat::InnerIterator it(M, j); it; ++it)
      if (where[it.row()] >= 0 && where[j] >= 0)
        trip.emplace_back(where[it.row()], where[j], it.value());
  SparseMat Mr((int)keep.size(), (int)keep.size());
  Mr.setFromTriplets(trip.begin(), trip.end());
  double ridge = 1e-11 * space.total_mass() / std::max(1, (int)keep.size());
  for (int i = 0; i < Mr.rows(); ++i) Mr.coeffRef(i, i) += ridge;
  Eigen::SimplicialLDLT<SparseMat> ldlt(Mr);
  if (ldlt.info() != Eigen::Success) throw SolverError("mass matrix factorisation failed");
  Eigen::VectorXd Br((int)keep.size());
  for (size_t i = 0; i < keep.size(); ++i) Br[i] = B[keep[i]];
  Eigen::VectorXd dr = ldlt.solve(-Br);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(space.ndofs());
  for (size_t i = 0; i < keep.size(); ++i) d[keep[i]] = dr[i];
  out.divergence = d;

  std::vector<char> bd = boundary_dofs(space);
  double wnorm = 0;
  for (int c = 0; c < space.ncells(); ++c)
    wnorm += space.cellmass(c) * w[c].squaredNorm();
  wnorm = std::sqrt(wnorm);
  // dual-norm residual deflating the near-kernel of M: solve (M+d)y = r and
  // measure y in the M norm; unmatched pairings on pruned dofs count at the
  // dust floor
  auto dual_residual = [](const SparseMat& Mred, const Eigen::VectorXd& rred,
                          double total_mass) {
    // deflated dual norm: solve against M + delta and measure in M, so test
    // functions with honest L2(mu) norm dominate and quadrature dust at the
    // kernel scale is damped
    double dn = 1e-6 * total_mass / std::max<int>(1, (int)Mred.rows());
    SparseMat Mn = Mred;
    for (int i = 0; i < Mn.rows(); ++i) Mn.coeffRef(i, i) += dn;
    Eigen::SimplicialLDLT<SparseMat> solver(Mn);
    if (solver.info() != Eigen::Success)
      throw SolverError("dual-norm factorisation failed");
    Eigen::VectorXd y = solver.solve(rred);
    double v = y.dot(Mred * y);
    return std::sqrt(std::max(0.0, v));
  };
  {
    Eigen::VectorXd rr = Br + Mr * dr;  // note: Mr includes the ridge
    for (size_t i = 0; i < keep.size(); ++i)
      if (bd[keep[i]]) rr[i] = 0;
    double res = dual_residual(Mr, rr, space.total_mass());
    out.residual = res / std::max(wnorm, 1e-300);
  }

  // refinement test: the same pair (w, d) against the h/2 grid
  {
    GridSpace fine = build_space(space.spec(), space.h() / 2);
    std::vector<Vec3> wf(fine.ncells());
    for (int c = 0; c < fine.ncells(); ++c) {
      if (w_eval) {
        wf[c] = (*w_eval)(cell_centroid(fine, c));
      } else {
        int parent = space.cell_at(cell_centroid(fine, c));
        wf[c] = parent >= 0 ? w[parent] : Vec3::Zero();
      }
    }
    Eigen::VectorXd Bf = w_eval ? pairing_vector_eval(fine, *w_eval)
                                : pairing_vector(fine, wf);
    // interpolate d: evaluate the coarse interpolant at fine dofs
    Eigen::VectorXd df = Eigen::VectorXd::Zero(fine.ndofs());
    for (int dof = 0; dof < fine.ndofs(); ++dof) {
      Vec3 x = fine.dof_coord(dof);
      int pc = space.cell_at(x);
      if (pc < 0) {
        // extrapolate from the nearest active coarse cell; the multilinear
        // form extends affinely past the cell
        double best = std::numeric_limits<double>::infinity();
        Vec3 probe = x;
        for (int c = 0; c < space.ncells(); ++c) {
          double dist = (space.cell_center(c) - x).head(space.n()).squaredNorm();
          if (dist < best) {
            best = dist;
            pc = c;
          }
        }
        (void)probe;
      }
      if (pc < 0) continue;
      Vec3 xc = space.cell_center(pc);
      const auto& ids = space.cell_dofs(pc);
      double val = 0;
      for (int k = 0; k < space.corners(); ++k) {
        double p = 1;
        for (int a = 0; a < space.n(); ++a) {
          double t = (x[a] - (xc[a] - space.h() / 2)) / space.h();
          p *= ((k >> a) & 1) ? t : (1 - t);
        }
        val += p * d[ids[k]];
      }
      df[dof] = val;
    }
    SymmetricForm Mf = assemble_mass(fine);
    Eigen::VectorXd rf = Bf + Mf.matrix * df;
    std::vector<char> bdf = boundary_dofs(fine);
    double fine_floor = 1e-9 * fine.total_mass();
    std::vector<int> keepf;
    for (int i = 0; i < fine.ndofs(); ++i)
      if (fine.dof_mass(i) >= fine_floor) keepf.push_back(i);
    std::vector<int> wheref(fine.ndofs(), -1);
    for (size_t i = 0; i < keepf.size(); ++i) wheref[keepf[i]] = (int)i;
    std::vector<Eigen::Triplet<double>> tripf;
    for (int j = 0; j < Mf.matrix.outerSize(); ++j)
      for (SparseMat::InnerIterator it(Mf.matrix, j); it; ++it)
        if (wheref[it.row()] >= 0 && wheref[j] >= 0)
          tripf.emplace_back(wheref[it.row()], wheref[j], it.value());
    SparseMat Mfr((int)keepf.size(), (int)keepf.size());
    Mfr.setFromTriplets(tripf.begin(), tripf.end());
    double ridgef = 1e-11 * fine.total_mass() / std::max(1, (int)keepf.size());
    for (int i = 0; i < Mfr.rows(); ++i) Mfr.coeffRef(i, i) += ridgef;
    double dnf = 1e-6 * fine.total_mass() / std::max<int>(1, (int)keepf.size());
    SparseMat Mnf = Mfr;
    for (int i = 0; i < Mnf.rows(); ++i) Mnf.coeffRef(i, i) += dnf;
    Eigen::SimplicialLDLT<SparseMat> ldltf(Mnf);
    if (ldltf.info() != Eigen::Success)
      throw SolverError("fine mass factorisation failed");
    Eigen::VectorXd rfr((int)keepf.size());
    for (size_t i = 0; i < keepf.size(); ++i)
      rfr[i] = bdf[keepf[i]] ? 0.0 : rf[keepf[i]];
    Eigen::VectorXd yf = ldltf.solve(rfr);
    double resf = std::sqrt(std::max(0.0, yf.dot(Mfr * yf)));
    out.refinement_residual = resf / std::max(wnorm, 1e-300);
  }

  out.accepted = out.residual <= tol && out.refinement_residual <= refine_tol;
  return out;
}

Eigen::VectorXd laplacian(const GridSpace& space, const SparseMat& M,
                          const SparseMat& GT, const Eigen::VectorXd& f_coeffs) {
  double ridge = 1e-11 * space.total_mass() / std::max(1, space.ndofs());
  SparseMat Mr = M;
  for (int i = 0; i < Mr.rows(); ++i) Mr.coeffRef(i, i) += ridge;
  Eigen::SimplicialLDLT<SparseMat> ldlt(Mr);
  if (ldlt.info() != Eigen::Success) throw SolverError("mass matrix factorisation failed");
  return ldlt.solve(-(GT * f_coeffs));
}

Eigen::VectorXd heat_flow(const GridSpace& space, const SparseMat& M,
                          const SparseMat& GT, const Eigen::VectorXd& f0,
                          double t_final, int steps, HeatTrace* trace) {
  if (steps < 1 || !(t_final > 0)) throw ValidationError("heat flow needs steps >= 1, t > 0");
  double dt = t_final / steps;
  SparseMat A = M + dt * GT;
  double ridge = 1e-12 * space.total_mass() / std::max(1, space.ndofs());
  for (int i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += ridge;
  Eigen::SimplicialLDLT<SparseMat> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw SolverError("heat step factorisation failed");
  Eigen::VectorXd f = f0;
  auto record = [&](double t) {
    if (!trace) return;
    trace->time.push_back(t);
    trace->mass.push_back((M * f).sum());
    double e = f.dot(GT * f);
    trace->energy.push_back(e);
    trace->w12_sq.push_back(f.dot(M * f) + e);
  };
  (void)space;
  record(0.0);
  for (int s = 1; s <= steps; ++s) {
    f = ldlt.solve(M * f);
    record(s * dt);
  }
  return f;
}

std::vector<double> lip_field(const GridSpace& space, const Expr& f) {
  std::vector<double> out(space.ncells());
  for (int c = 0; c < space.ncells(); ++c)
    out[c] = f.grad(cell_centroid(space, c)).head(space.n()).norm();
  return out;
}

}  // namespace wsc
