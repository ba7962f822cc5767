#pragma once

#include "wsc/fiber.hpp"

namespace wsc {

enum class MwugRoute { Projection, Relaxation };

struct SobolevSolution {
  Eigen::VectorXd coeffs;
  std::vector<Vec3> min_gradient;  // per cell
  std::vector<double> mwug;        // per cell, |g*|
  double energy = 0;               // 1/2 int |g*|^2 dmu (intra-cell quadrature)
  MwugRoute route = MwugRoute::Relaxation;
};

// Stiffness restricted to a tangent field: entries use pr_T grad phi.
SparseMat assemble_relaxed_stiffness(const GridSpace& space,
                                     const DistributionField& T);

// Relaxation route: remove the null-gradient component found at this scale.
SobolevSolution minimal_relaxed_gradient(const GridSpace& space, const SparseMat& M,
                                         const SparseMat& G,
                                         const Eigen::VectorXd& f_coeffs, double eps,
                                         double svd_tol = 0.05);

// Projection route for closed-form Lipschitz functions:
// g* = pr_T(pr_V(grad f)) evaluated at the cell mass centroid.
SobolevSolution mwug_via_projection(const GridSpace& space, const DistributionField& T,
                                    const DistributionField& V, const Expr& f);

double cheeger_energy(const GridSpace& space, const SparseMat& M, const SparseMat& G,
                      const Eigen::VectorXd& f_coeffs, double eps);

struct DivergencePair {
  std::vector<Vec3> field;       // per-cell w
  Eigen::VectorXd divergence;    // dof coefficients d with M d = -B w
  double residual = 0;           // same-grid dual-norm residual (interior dofs)
  double refinement_residual = 0;  // residual of d against the h/2 grid
  bool accepted = false;
};

// Solves M d = -B w and accepts when both the same-grid residual and the
// half-scale refinement residual stay below tolerance. Interior-tested:
// dofs whose support touches the bbox boundary are excluded. When the field
// has a closed form, pass `w_eval` so the refinement grid sees it exactly;
// otherwise fine cells inherit their parent's value.
DivergencePair check_divergence(const GridSpace& space, const SparseMat& M,
                                const std::vector<Vec3>& w, double tol,
                                double refine_tol = 0.05,
                                const std::function<Vec3(const Vec3&)>* w_eval = nullptr);

// M h = -G_T f on the mu-active dofs.
Eigen::VectorXd laplacian(const GridSpace& space, const SparseMat& M,
                          const SparseMat& GT, const Eigen::VectorXd& f_coeffs);

struct HeatTrace {
  std::vector<double> time, mass, energy, w12_sq;
};

Eigen::VectorXd heat_flow(const GridSpace& space, const SparseMat& M,
                          const SparseMat& GT, const Eigen::VectorXd& f0,
                          double t_final, int steps, HeatTrace* trace = nullptr);

// lip(f) for the admissible closed forms: |grad f| at the cell centroid.
std::vector<double> lip_field(const GridSpace& space, const Expr& f);

}  // namespace wsc
