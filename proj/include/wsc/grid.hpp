#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <unordered_map>

#include "wsc/measure.hpp"

namespace wsc {

using SparseMat = Eigen::SparseMatrix<double>;

// Scale-h discretisation of L^2(mu) by multilinear elements on a uniform
// grid. The measure is translated by h/pi per axis before meshing so that
// supports never sit on grid hyperplanes; all reported coordinates are in
// the original frame.
class GridSpace {
 public:
  const MeasureSpec& spec() const { return spec_; }
  double h() const { return h_; }
  int n() const { return spec_.n; }
  int ncells() const { return (int)cell_mass_.size(); }
  int ndofs() const { return ndof_; }
  int corners() const { return 1 << spec_.n; }
  double total_mass() const { return total_mass_; }
  double mass_floor() const { return mass_floor_; }
  Vec3 jitter() const { return jitter_; }

  double cellmass(int c) const { return cell_mass_[c]; }
  Vec3 cell_center(int c) const;                  // original coordinates
  const std::vector<QuadNode>& quad(int c) const { return quad_[c]; }
  const std::vector<int>& cell_dofs(int c) const { return ids_[c]; }
  Vec3 dof_coord(int d) const;                    // original coordinates

  // per-cell integrals of the local shape functions against mu
  const Eigen::MatrixXd& cellM(int c) const { return Mc_[c]; }
  const Eigen::MatrixXd& cellG(int c) const { return Gc_[c]; }
  const Eigen::MatrixXd& cellB(int c) const { return Bc_[c]; }  // n x corners

  // dof lookup and cell lookup by lattice position
  int cell_at(const Vec3& x_original) const;       // -1 when inactive

  double dof_mass(int d) const { return dof_mass_[d]; }

  // connected components of the active cells (face adjacency)
  const std::vector<int>& cell_component(int c) const;
  int component_of(int c) const { return comp_[c]; }
  int ncomponents() const { return ncomp_; }
  const std::vector<int>& component_cells(int comp) const { return comp_cells_[comp]; }
  std::vector<int> component_dofs(int comp) const;

  friend GridSpace build_space(const MeasureSpec& spec, double h);

 private:
  MeasureSpec spec_;
  double h_ = 0;
  Vec3 origin_ = Vec3::Zero();  // jittered-frame origin of cell (0,0,0)
  Vec3 jitter_ = Vec3::Zero();
  std::array<int64_t, 3> ncell_ax_{1, 1, 1};
  std::array<int64_t, 3> ndof_ax_{2, 2, 2};
  int ndof_ = 0;
  double total_mass_ = 0;
  double mass_floor_ = 0;

  std::vector<int64_t> cell_flat_;  // active cell -> flat lattice id
  std::unordered_map<int64_t, int> cell_index_;
  std::vector<double> cell_mass_;
  std::vector<std::vector<QuadNode>> quad_;
  std::vector<std::vector<int>> ids_;
  std::vector<Eigen::MatrixXd> Mc_, Gc_, Bc_;
  std::vector<int64_t> dof_flat_;
  std::unordered_map<int64_t, int> dof_index_;
  std::vector<double> dof_mass_;

  std::vector<int> comp_;
  int ncomp_ = 0;
  std::vector<std::vector<int>> comp_cells_;
};

GridSpace build_space(const MeasureSpec& spec, double h);

// Vertex interpolation of a closed-form expression at the dofs.
Eigen::VectorXd project_function(const GridSpace& space, const Expr& f);

// Mass-weighted average over the cell quadrature of the interpolant's
// gradient.
Vec3 sample_gradient(const GridSpace& space, const Eigen::VectorXd& coeffs, int cell);

// mu-weighted centroid of a cell; lies in the closure of the support.
Vec3 cell_centroid(const GridSpace& space, int cell);

enum class FormRole { Mass, Stiffness, RelaxedStiffness };
struct SymmetricForm {
  FormRole role;
  SparseMat matrix;
};

SymmetricForm assemble_mass(const GridSpace& space);
SymmetricForm assemble_stiffness(const GridSpace& space);

}  // namespace wsc
