#pragma once

#include <functional>
#include <memory>

#include "wsc/fields.hpp"
#include "wsc/spectrum.hpp"

namespace wsc {

struct SweepSchedule {
  std::vector<double> scales;  // strictly decreasing h values
  std::function<double(double)> eps_rule = [](double h) { return h / 3.0; };
  double svd_tol = 0.05;
  int eig_count = 400;        // max eigenpairs per component and scale
  int stability_window = 2;

  void validate() const;
};

// Null-gradient distribution W at a single scale: spans of the coherent
// content of the sigma <= eps eigenspace, aggregated per component-window
// patch and thresholded against the smooth-gradient scale.
DistributionField compute_W_field(const GridSpace& space, const SparseMat& M,
                                  const SparseMat& G, double eps, double svd_tol,
                                  int eig_count = 400);

struct TangentSweepResult {
  std::shared_ptr<GridSpace> finest;      // space at the last scale
  DistributionField tangent;              // T = complement(W), stabilised
  DistributionField null_field;           // the stabilised W itself
  std::vector<std::vector<int>> dims_by_scale;  // per scale, per finest cell
  std::vector<double> scales;
};

TangentSweepResult compute_tangent_field(const MeasureSpec& spec,
                                         const SweepSchedule& schedule);

// Analytic Alberti-Marchese registry: per-cell span union of the per-stratum
// values, mass weighted.
DistributionField am_distribution(const MeasureSpec& spec, const GridSpace& space);

// Registry value of a single stratum, and the union at a point (strata whose
// padded support box contains x).
Subspace am_registry_value(const Stratum& s, int n);
Subspace am_value_at(const MeasureSpec& spec, const Vec3& x, double pad);

}  // namespace wsc
