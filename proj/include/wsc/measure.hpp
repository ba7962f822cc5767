#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wsc/errors.hpp"
#include "wsc/expr.hpp"
#include "wsc/geometry.hpp"

namespace wsc {

enum class StratumKind { AcDensity, Simplex, Cantor, PointMass, Product };
enum class CantorVariant { Ternary, SmithVolterraCantor };

// One building block of a stratified Radon measure.
struct Stratum {
  StratumKind kind = StratumKind::AcDensity;
  int dim = 0;  // intrinsic dimension k

  std::vector<Vec3> vertices;  // simplex: k+1 affinely independent points
  Box box;                     // ac density support

  CantorVariant variant = CantorVariant::Ternary;
  int generations = 30;
  int axis = 0;  // ambient axis carrying the cantor interval
  double iv_a = 0.0, iv_b = 1.0;

  Vec3 point = Vec3::Zero();  // point mass location
  double weight = 1.0;        // point mass / overall scale factor

  Expr density;  // nonnegative, polynomial of degree <= 2

  // Product strata hold their primitive factors (axes already embedded).
  std::vector<Stratum> factors;

  Box support_box(int n) const;
};

struct MeasureSpec {
  int n = 1;
  std::vector<Stratum> strata;
  Box bbox;
  std::optional<std::pair<std::string, std::string>> provenance;

  double total_mass() const;
};

struct QuadNode {
  Vec3 x = Vec3::Zero();
  double w = 0;
  bool atom = false;  // zero-dimensional piece: carries mass, no gradient
};

enum class LebesgueTag { AbsolutelyContinuous, Singular };
struct LebesgueLabel {
  LebesgueTag tag;
  std::string rationale;
};

// Exact mass of `box` under the stratum / full measure.
double stratum_mass(const Stratum& s, int n, const Box& box);
double cell_mass(const MeasureSpec& spec, const Box& box);

// Quadrature for mu restricted to `cell`: weights sum to the exact cell
// mass; rules are exact against functions that are multilinear on the cell
// times the stratum density.
void stratum_quadrature(const Stratum& s, int n, const Box& cell,
                        std::vector<QuadNode>& out);
std::vector<QuadNode> measure_quadrature(const MeasureSpec& spec, const Box& cell);

MeasureSpec parse_measure_spec(const std::string& text);
MeasureSpec product_measure(const MeasureSpec& a, const MeasureSpec& b);
std::vector<LebesgueLabel> lebesgue_labels(const MeasureSpec& spec);

// Cantor truncation error bound: mass that can move across any cell border
// due to cutting the construction at `generations`.
double cantor_truncation_bound(const MeasureSpec& spec);

// Rigid-motion helper used by equivariance tests: permutes axes and
// translates all stratum geometry.
MeasureSpec axis_permuted(const MeasureSpec& spec, const std::array<int, 3>& perm,
                          const Vec3& shift);

void validate(const MeasureSpec& spec);

}  // namespace wsc
