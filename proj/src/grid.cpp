#include "wsc/grid.hpp"

#include <cmath>
#include <queue>

namespace wsc {

namespace {

// local shape values and gradients at a point of the reference cell
void shape_at(int n, double h, const Vec3& t, Eigen::VectorXd& phi, Eigen::MatrixXd& dphi) {
  int K = 1 << n;
  phi.resize(K);
  dphi.resize(n, K);
  for (int c = 0; c < K; ++c) {
    double p = 1;
    for (int a = 0; a < n; ++a) {
      double ta = t[a];
      p *= ((c >> a) & 1) ? ta : (1 - ta);
    }
    phi[c] = p;
    for (int a = 0; a < n; ++a) {
      double d = ((c >> a) & 1) ? 1.0 / h : -1.0 / h;
      for (int b = 0; b < n; ++b) {
        if (b == a) continue;
        double tb = t[b];
        d *= ((c >> b) & 1) ? tb : (1 - tb);
      }
      dphi(a, c) = d;
    }
  }
}

}  // namespace

Vec3 GridSpace::cell_center(int c) const {
  int64_t f = cell_flat_[c];
  Vec3 x = Vec3::Zero();
  for (int a = 0; a < spec_.n; ++a) {
    int64_t idx = f % ncell_ax_[a];
    f /= ncell_ax_[a];
    x[a] = origin_[a] + (idx + 0.5) * h_ - jitter_[a];
  }
  return x;
}

Vec3 GridSpace::dof_coord(int d) const {
  int64_t f = dof_flat_[d];
  Vec3 x = Vec3::Zero();
  for (int a = 0; a < spec_.n; ++a) {
    int64_t idx = f % ndof_ax_[a];
    f /= ndof_ax_[a];
    x[a] = origin_[a] + idx * h_ - jitter_[a];
  }
  return x;
}

int GridSpace::cell_at(const Vec3& x_original) const {
  int64_t flat = 0, mult = 1;
  for (int a = 0; a < spec_.n; ++a) {
    double local = x_original[a] + jitter_[a] - origin_[a];
    int64_t idx = (int64_t)std::floor(local / h_);
    if (idx < 0 || idx >= ncell_ax_[a]) return -1;
    flat += idx * mult;
    mult *= ncell_ax_[a];
  }
  auto it = cell_index_.find(flat);
  return it == cell_index_.end() ? -1 : it->second;
}

std::vector<int> GridSpace::component_dofs(int comp) const {
  std::vector<int> dofs;
  std::vector<char> seen(ndof_, 0);
  for (int c : comp_cells_[comp])
    for (int d : ids_[c])
      if (!seen[d]) {
        seen[d] = 1;
        dofs.push_back(d);
      }
  std::sort(dofs.begin(), dofs.end());
  return dofs;
}

namespace {
// Lower-dimensional simplices and atoms can sit exactly on grid
// hyperplanes, which would make cell ownership ambiguous; those specs are
// meshed on a grid shifted by h/pi per axis.
bool needs_jitter_stratum(const Stratum& s, int n) {
  switch (s.kind) {
    case StratumKind::Simplex: return s.dim < n;
    case StratumKind::PointMass: return true;
    case StratumKind::Product: {
      for (auto& f : s.factors)
        if (f.kind == StratumKind::Simplex || f.kind == StratumKind::PointMass)
          return true;
      return false;
    }
    default: return false;
  }
}
bool needs_jitter(const MeasureSpec& spec) {
  for (auto& s : spec.strata)
    if (needs_jitter_stratum(s, spec.n)) return true;
  return false;
}
}  // namespace

GridSpace build_space(const MeasureSpec& spec, double h) {
  if (!(h > 0)) throw ValidationError("h must be positive");
  GridSpace g;
  g.spec_ = spec;
  g.h_ = h;
  int n = spec.n;
  double jit = needs_jitter(spec) ? h / M_PI : 0.0;
  for (int a = 0; a < n; ++a) {
    double extent = spec.bbox.hi[a] - spec.bbox.lo[a];
    int64_t nc = (int64_t)std::ceil(extent / h - 1e-12) + 2;
    if (nc > 4096 + 2) throw ResourceError("grid exceeds 4096 cells per axis");
    g.ncell_ax_[a] = nc;
    g.ndof_ax_[a] = nc + 1;
    g.jitter_[a] = jit;
    g.origin_[a] = spec.bbox.lo[a];  // grid runs from bbox.lo - jitter
  }
  // total cells may overflow in 3d; guard
  double cells_total = 1;
  for (int a = 0; a < n; ++a) cells_total *= (double)g.ncell_ax_[a];
  if (cells_total > 64e6) throw ResourceError("grid too large");

  // enumerate candidate cells per stratum support, then evaluate quadrature
  std::vector<int64_t> candidates;
  {
    std::vector<char> mark;
    std::unordered_map<int64_t, char> seen;
    for (auto& s : spec.strata) {
      Box sb = s.support_box(n);
      std::array<int64_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
      for (int a = 0; a < n; ++a) {
        // jittered frame coordinate of the support: original + jitter
        double a0 = sb.lo[a] + g.jitter_[a] - g.origin_[a];
        double a1 = sb.hi[a] + g.jitter_[a] - g.origin_[a];
        lo[a] = std::max<int64_t>(0, (int64_t)std::floor(a0 / h) - 1);
        hi[a] = std::min<int64_t>(g.ncell_ax_[a] - 1, (int64_t)std::floor(a1 / h) + 1);
      }
      for (int64_t k = (n > 2 ? lo[2] : 0); k <= (n > 2 ? hi[2] : 0); ++k)
        for (int64_t j = (n > 1 ? lo[1] : 0); j <= (n > 1 ? hi[1] : 0); ++j)
          for (int64_t i = lo[0]; i <= hi[0]; ++i) {
            int64_t flat = i + g.ncell_ax_[0] * (j + g.ncell_ax_[1] * k);
            if (!seen.count(flat)) {
              seen[flat] = 1;
              candidates.push_back(flat);
            }
          }
    }
  }
  std::sort(candidates.begin(), candidates.end());

  // translated measure: stratum quadrature queried in the jittered frame by
  // shifting the query cell back to original coordinates
  double total = spec.total_mass();
  g.mass_floor_ = 1e-14 * total;
  int K = 1 << n;
  double active_mass = 0;
  for (int64_t flat : candidates) {
    int64_t f = flat;
    Box cell;
    for (int a = 0; a < n; ++a) {
      int64_t idx = f % g.ncell_ax_[a];
      f /= g.ncell_ax_[a];
      cell.lo[a] = g.origin_[a] + idx * h - g.jitter_[a];
      cell.hi[a] = cell.lo[a] + h;
    }
    std::vector<QuadNode> q = measure_quadrature(spec, cell);
    double m = 0;
    for (auto& qn : q) m += qn.w;
    if (m <= g.mass_floor_) continue;
    int ci = (int)g.cell_flat_.size();
    g.cell_flat_.push_back(flat);
    g.cell_index_[flat] = ci;
    g.cell_mass_.push_back(m);
    active_mass += m;

    // local matrices
    Eigen::MatrixXd Mc = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd Gc = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(n, K);
    Eigen::VectorXd phi;
    Eigen::MatrixXd dphi;
    for (auto& qn : q) {
      Vec3 t;
      for (int a = 0; a < n; ++a) t[a] = (qn.x[a] - cell.lo[a]) / h;
      shape_at(n, h, t, phi, dphi);
      Mc.noalias() += qn.w * phi * phi.transpose();
      if (!qn.atom) {
        Gc.noalias() += qn.w * dphi.transpose() * dphi;
        Bc.noalias() += qn.w * dphi;
      }
    }
    g.quad_.push_back(std::move(q));
    g.Mc_.push_back(std::move(Mc));
    g.Gc_.push_back(std::move(Gc));
    g.Bc_.push_back(std::move(Bc));
  }
  if (g.cell_flat_.empty()) throw EmptySupportError("measure has no active cells at this scale");
  if (active_mass < (1 - 1e-6) * total)
    throw EmptySupportError("active cells cover too little mass; check bbox and h");
  g.total_mass_ = active_mass;

  // dofs
  for (size_t ci = 0; ci < g.cell_flat_.size(); ++ci) {
    int64_t f = g.cell_flat_[ci];
    std::array<int64_t, 3> idx{0, 0, 0};
    int64_t ff = f;
    for (int a = 0; a < n; ++a) {
      idx[a] = ff % g.ncell_ax_[a];
      ff /= g.ncell_ax_[a];
    }
    std::vector<int> ids(K);
    for (int c = 0; c < K; ++c) {
      int64_t dflat = 0, mult = 1;
      for (int a = 0; a < n; ++a) {
        dflat += (idx[a] + ((c >> a) & 1)) * mult;
        mult *= g.ndof_ax_[a];
      }
      auto it = g.dof_index_.find(dflat);
      if (it == g.dof_index_.end()) {
        int d = (int)g.dof_flat_.size();
        g.dof_index_[dflat] = d;
        g.dof_flat_.push_back(dflat);
        ids[c] = d;
      } else {
        ids[c] = it->second;
      }
    }
    g.ids_.push_back(std::move(ids));
  }
  g.ndof_ = (int)g.dof_flat_.size();
  g.dof_mass_.assign(g.ndof_, 0.0);
  for (int c = 0; c < g.ncells(); ++c)
    for (int k = 0; k < K; ++k) g.dof_mass_[g.ids_[c][k]] += g.Mc_[c](k, k);

  // connected components over face adjacency
  g.comp_.assign(g.ncells(), -1);
  int ncomp = 0;
  for (int c0 = 0; c0 < g.ncells(); ++c0) {
    if (g.comp_[c0] >= 0) continue;
    std::queue<int> bfs;
    bfs.push(c0);
    g.comp_[c0] = ncomp;
    while (!bfs.empty()) {
      int c = bfs.front();
      bfs.pop();
      int64_t f = g.cell_flat_[c];
      std::array<int64_t, 3> idx{0, 0, 0};
      int64_t ff = f;
      for (int a = 0; a < n; ++a) {
        idx[a] = ff % g.ncell_ax_[a];
        ff /= g.ncell_ax_[a];
      }
      for (int a = 0; a < n; ++a)
        for (int s = -1; s <= 1; s += 2) {
          auto nb = idx;
          nb[a] += s;
          if (nb[a] < 0 || nb[a] >= g.ncell_ax_[a]) continue;
          int64_t nf = 0, mult = 1;
          for (int b = 0; b < n; ++b) {
            nf += nb[b] * mult;
            mult *= g.ncell_ax_[b];
          }
          auto it = g.cell_index_.find(nf);
          if (it == g.cell_index_.end()) continue;
          if (g.comp_[it->second] < 0) {
            g.comp_[it->second] = ncomp;
            bfs.push(it->second);
          }
        }
    }
    ++ncomp;
  }
  g.ncomp_ = ncomp;
  g.comp_cells_.assign(ncomp, {});
  for (int c = 0; c < g.ncells(); ++c) g.comp_cells_[g.comp_[c]].push_back(c);
  return g;
}

Vec3 cell_centroid(const GridSpace& space, int cell) {
  Vec3 x = Vec3::Zero();
  double m = 0;
  for (auto& qn : space.quad(cell)) {
    x += qn.w * qn.x;
    m += qn.w;
  }
  return m > 0 ? Vec3(x / m) : space.cell_center(cell);
}

Eigen::VectorXd project_function(const GridSpace& space, const Expr& f) {
  Eigen::VectorXd v(space.ndofs());
  for (int d = 0; d < space.ndofs(); ++d) {
    double val = f.eval(space.dof_coord(d));
    if (!std::isfinite(val)) throw EvalError("function not finite at a dof");
    v[d] = val;
  }
  return v;
}

Vec3 sample_gradient(const GridSpace& space, const Eigen::VectorXd& coeffs, int cell) {
  if (cell < 0 || cell >= space.ncells()) throw InactiveCellError("cell is not active");
  const auto& ids = space.cell_dofs(cell);
  Eigen::VectorXd vals(ids.size());
  for (size_t k = 0; k < ids.size(); ++k) vals[k] = coeffs[ids[k]];
  Vec3 r = Vec3::Zero();
  r.head(space.n()) = space.cellB(cell) * vals / space.cellmass(cell);
  return r;
}

namespace {
SymmetricForm assemble(const GridSpace& space, FormRole role) {
  std::vector<Eigen::Triplet<double>> trip;
  int K = space.corners();
  trip.reserve((size_t)space.ncells() * K * K);
  for (int c = 0; c < space.ncells(); ++c) {
    const Eigen::MatrixXd& L =
        role == FormRole::Mass ? space.cellM(c) : space.cellG(c);
    const auto& ids = space.cell_dofs(c);
    for (int a = 0; a < K; ++a)
      for (int b = 0; b < K; ++b)
        if (L(a, b) != 0) trip.emplace_back(ids[a], ids[b], L(a, b));
  }
  SymmetricForm f;
  f.role = role;
  f.matrix.resize(space.ndofs(), space.ndofs());
  f.matrix.setFromTriplets(trip.begin(), trip.end());
  return f;
}
}  // namespace

SymmetricForm assemble_mass(const GridSpace& space) { return assemble(space, FormRole::Mass); }
SymmetricForm assemble_stiffness(const GridSpace& space) {
  return assemble(space, FormRole::Stiffness);
}

}  // namespace wsc
