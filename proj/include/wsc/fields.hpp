#pragma once

#include "wsc/grid.hpp"

namespace wsc {

// A measurable assignment of a linear subspace of R^n to each active cell.
struct DistributionField {
  const GridSpace* space = nullptr;
  std::vector<Subspace> fibers;           // one per active cell
  std::vector<Vec3> diagnostics;          // per cell: top coherence scores
  std::vector<char> stable;               // multiscale stability flag
  double unstable_mass_fraction = 0;

  int dim(int cell) const { return fibers[cell].dim; }
};

DistributionField orthogonal_complement(const DistributionField& f);

// Cellwise orthogonal projection of a vector field onto the distribution.
std::vector<Vec3> project_vector_field(const DistributionField& f,
                                       const std::vector<Vec3>& w);

}  // namespace wsc
