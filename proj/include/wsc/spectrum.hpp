#pragma once

#include "wsc/grid.hpp"

namespace wsc {

// Generalized Rayleigh pairs sigma = (c'Mc)/(c'Gc) of the (Mass, Stiffness)
// pencil, smallest first, with G-orthonormal vectors. Directions in the
// kernel of G (constants on connected components and other mu-flat
// functions) are deflated.
struct EigPair {
  double sigma = 0;
  Eigen::VectorXd coeffs;  // over all dofs, zero off the component
  int component = 0;
};

// All pairs with sigma <= sigma_cap on one component, capped at max_pairs.
// dofs: the component's dof set. Dense solver below `dense_limit` unknowns,
// shift-free Lanczos on the regularised pencil above it.
std::vector<EigPair> component_spectrum(const GridSpace& space, const SparseMat& M,
                                        const SparseMat& G, int component,
                                        double sigma_cap, int max_pairs);

// k smallest pairs over all components.
std::vector<EigPair> null_gradient_spectrum(const GridSpace& space, const SparseMat& M,
                                            const SparseMat& G, int k);

}  // namespace wsc
