#include "wsc/fiber.hpp"

#include <cmath>
#include <map>

namespace wsc {

void SweepSchedule::validate() const {
  if (scales.empty()) throw ValidationError("schedule needs at least one scale");
  for (size_t i = 1; i < scales.size(); ++i)
    if (!(scales[i] < scales[i - 1]))
      throw ValidationError("schedule scales must be strictly decreasing");
  double prev = std::numeric_limits<double>::infinity();
  for (double h : scales) {
    double e = eps_rule(h);
    if (!(e < prev)) throw ValidationError("eps rule must be strictly decreasing");
    prev = e;
  }
}

namespace {

// patch key: (component, window indices)
struct PieceTable {
  std::vector<int> piece_of_cell;
  std::vector<double> mass;
  int count = 0;
};

PieceTable build_pieces(const GridSpace& space, double eps) {
  int n = space.n();
  double h = space.h();
  // window edge tied to the slowest admitted oscillation (wavelength
  // 2*pi*sqrt(eps)); two periods per window
  double target = std::max(4 * h, 8 * std::sqrt(std::max(eps, 0.0)));
  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
  for (int c = 0; c < space.ncells(); ++c) {
    Vec3 x = space.cell_center(c);
    if (c == 0) {
      lo = x;
      hi = x;
    }
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  std::array<int, 3> nwin{1, 1, 1};
  Vec3 wlen = Vec3::Ones();
  for (int a = 0; a < n; ++a) {
    double ext = hi[a] - lo[a] + h;
    nwin[a] = std::max(1, (int)std::llround(ext / target));
    wlen[a] = ext / nwin[a];
  }
  std::map<std::array<int, 4>, int> ids;
  PieceTable t;
  t.piece_of_cell.resize(space.ncells());
  for (int c = 0; c < space.ncells(); ++c) {
    Vec3 x = space.cell_center(c);
    std::array<int, 4> key{space.component_of(c), 0, 0, 0};
    for (int a = 0; a < n; ++a) {
      int w = std::min(nwin[a] - 1, (int)((x[a] - lo[a] + h / 2) / wlen[a]));
      key[a + 1] = w;
    }
    auto [it, fresh] = ids.try_emplace(key, t.count);
    if (fresh) {
      ++t.count;
      t.mass.push_back(0.0);
    }
    t.piece_of_cell[c] = it->second;
    t.mass[it->second] += space.cellmass(c);
  }
  return t;
}

}  // namespace

DistributionField compute_W_field(const GridSpace& space, const SparseMat& M,
                                  const SparseMat& G, double eps, double svd_tol,
                                  int eig_count) {
  const int n = space.n();
  const int K = space.corners();
  PieceTable pieces = build_pieces(space, eps);
  const double coh_min = std::min(0.9, 10.0 * svd_tol);

  // coherent covariance per piece, weighted by per-mode coherence^{2q}
  const double q_exp = 3.0;
  std::vector<Mat3> D(pieces.count, Mat3::Zero());

  for (int comp = 0; comp < space.ncomponents(); ++comp) {
    auto pairs = component_spectrum(space, M, G, comp, eps, eig_count);
    if (pairs.empty()) continue;
    const auto& cells = space.component_cells(comp);

    // cluster nearly degenerate eigenvalues; the eigensolver basis within a
    // band it cannot resolve is arbitrary, so coherent content is measured
    // on cluster spans (tolerance at the solver's band-resolution scale)
    std::vector<std::pair<int, int>> clusters;
    {
      int i = 0;
      while (i < (int)pairs.size()) {
        int j = i + 1;
        while (j < (int)pairs.size() &&
               pairs[j].sigma - pairs[j - 1].sigma <=
                   1e-10 + 2e-2 * std::max(pairs[j - 1].sigma, 0.0))
          ++j;
        clusters.push_back({i, j});
        i = j;
      }
    }

    // per-cell corner values of every qualifying mode
    for (auto [i0, i1] : clusters) {
      int kc = i1 - i0;
      // per piece: col (kc x n) and gram (kc x kc)
      std::map<int, Eigen::MatrixXd> cols, grams;
      Eigen::MatrixXd vals(kc, K);
      for (int c : cells) {
        int p = pieces.piece_of_cell[c];
        const auto& ids = space.cell_dofs(c);
        for (int m = 0; m < kc; ++m)
          for (int k = 0; k < K; ++k) vals(m, k) = pairs[i0 + m].coeffs[ids[k]];
        auto [itc, fresh] = cols.try_emplace(p, Eigen::MatrixXd::Zero(kc, n));
        if (fresh) grams.emplace(p, Eigen::MatrixXd::Zero(kc, kc));
        itc->second.noalias() += vals * space.cellB(c).transpose();
        grams.at(p).noalias() += vals * space.cellG(c) * vals.transpose();
      }
      for (auto& [p, B] : cols) {
        double mP = pieces.mass[p];
        if (mP <= 0) continue;
        const Eigen::MatrixXd& Pg = grams.at(p);
        // X = B' Pg^+ B / mP: direction-resolved squared coherence of the
        // best-aligned member of the cluster span within this piece
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(Pg);
        double wmax = eg.eigenvalues().size()
                          ? eg.eigenvalues()(eg.eigenvalues().size() - 1)
                          : 0.0;
        if (wmax <= 0) continue;
        Eigen::MatrixXd Z(0, n);
        {
          std::vector<int> keep;
          for (int i = 0; i < eg.eigenvalues().size(); ++i)
            if (eg.eigenvalues()(i) > 1e-11 * wmax) keep.push_back(i);
          Z.resize((int)keep.size(), n);
          for (size_t r = 0; r < keep.size(); ++r)
            Z.row(r) = eg.eigenvectors().col(keep[r]).transpose() * B /
                       std::sqrt(eg.eigenvalues()(keep[r]));
        }
        Eigen::MatrixXd X = Z.transpose() * Z / mP;  // n x n, eigs in [0,1]
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(X);
        for (int j = 0; j < n; ++j) {
          double lam = std::clamp(ex.eigenvalues()(j), 0.0, 1.0);
          if (lam <= 0) continue;
          Vec3 u = Vec3::Zero();
          u.head(n) = ex.eigenvectors().col(j);
          D[p] += std::pow(lam, q_exp + 1.0) * u * u.transpose();
        }
      }
    }
  }

  // exact-null refinement: modes with sigma at solver-noise level have
  // gradient samples lying exactly in the null directions (for a thin
  // measure, functions vanishing on the support have no tangential
  // derivative), so their per-piece covariance pins the accepted basis to
  // machine precision; a tilted basis would make the projected energy
  // degenerate under relaxation
  std::vector<Mat3> exactC(pieces.count, Mat3::Zero());
  for (int comp = 0; comp < space.ncomponents(); ++comp) {
    auto pairs = component_spectrum(space, M, G, comp,
                                    1e-9 * std::max(eps, 1e-30), eig_count);
    for (auto& pr : pairs) {
      for (int c : space.component_cells(comp)) {
        const auto& ids = space.cell_dofs(c);
        Eigen::VectorXd vals(K);
        for (int k = 0; k < K; ++k) vals[k] = pr.coeffs[ids[k]];
        Vec3 col = Vec3::Zero();
        col.head(n) = space.cellB(c) * vals;
        exactC[pieces.piece_of_cell[c]] += col * col.transpose();
      }
    }
  }

  DistributionField field;
  field.space = &space;
  field.fibers.resize(space.ncells());
  field.diagnostics.assign(space.ncells(), Vec3::Zero());
  field.stable.assign(space.ncells(), 1);
  std::vector<Subspace> piece_W(pieces.count);
  std::vector<Vec3> piece_diag(pieces.count, Vec3::Zero());
  for (int p = 0; p < pieces.count; ++p) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(D[p]);
    std::vector<Vec3> gens;
    for (int j = 2; j >= 0; --j) {
      double score = std::pow(std::max(0.0, es.eigenvalues()(j)), 1.0 / (2 * (q_exp + 1)));
      int slot = 2 - j;
      if (slot < 3) piece_diag[p][slot] = score;
      if (score >= coh_min && (int)gens.size() < n) {
        Vec3 u = es.eigenvectors().col(j);
        if (u.tail(3 - n).norm() < 1e-9) gens.push_back(u);
      }
    }
    piece_W[p] = gens.empty() ? Subspace::zero(n) : Subspace::span(n, gens);
    // snap to the exact-null span when it matches the accepted dimension
    if (piece_W[p].dim > 0) {
      Eigen::SelfAdjointEigenSolver<Mat3> ex(exactC[p]);
      double top = std::max(ex.eigenvalues().maxCoeff(), 0.0);
      std::vector<Vec3> exact_gens;
      for (int j = 0; j < 3; ++j)
        if (ex.eigenvalues()(j) > 1e-16 * std::max(top, 1e-300) && top > 0) {
          Vec3 u = ex.eigenvectors().col(j);
          if (u.tail(3 - n).norm() < 1e-9) exact_gens.push_back(u);
        }
      if ((int)exact_gens.size() == piece_W[p].dim) {
        Subspace snapped = Subspace::span(n, exact_gens);
        if (grassmann_distance(snapped, piece_W[p]) < 0.2)
          piece_W[p] = snapped;
      }
    }
  }
  for (int c = 0; c < space.ncells(); ++c) {
    field.fibers[c] = piece_W[pieces.piece_of_cell[c]];
    field.diagnostics[c] = piece_diag[pieces.piece_of_cell[c]];
  }
  return field;
}

TangentSweepResult compute_tangent_field(const MeasureSpec& spec,
                                         const SweepSchedule& schedule) {
  schedule.validate();
  struct ScaleData {
    std::shared_ptr<GridSpace> space;
    DistributionField W;
  };
  std::vector<ScaleData> levels;
  for (double h : schedule.scales) {
    auto space = std::make_shared<GridSpace>(build_space(spec, h));
    SymmetricForm M = assemble_mass(*space);
    SymmetricForm G = assemble_stiffness(*space);
    DistributionField W = compute_W_field(*space, M.matrix, G.matrix,
                                          schedule.eps_rule(h), schedule.svd_tol,
                                          schedule.eig_count);
    levels.push_back({space, std::move(W)});
  }

  TangentSweepResult out;
  out.scales = schedule.scales;
  const GridSpace& fine = *levels.back().space;
  int nc = fine.ncells();
  int ns = (int)levels.size();
  out.dims_by_scale.assign(ns, std::vector<int>(nc, -1));
  std::vector<std::vector<int>> cell_at_scale(ns, std::vector<int>(nc, -1));
  for (int c = 0; c < nc; ++c) {
    Vec3 x = cell_centroid(fine, c);
    for (int s = 0; s < ns; ++s) {
      int cs = levels[s].space->cell_at(x);
      cell_at_scale[s][c] = cs;
      out.dims_by_scale[s][c] = cs >= 0 ? levels[s].W.dim(cs) : -1;
    }
  }

  DistributionField W;
  W.fibers.resize(nc);
  W.diagnostics.assign(nc, Vec3::Zero());
  W.stable.assign(nc, 0);
  double unstable_mass = 0;
  int win = std::min(schedule.stability_window, ns);
  for (int c = 0; c < nc; ++c) {
    int chosen = -1;
    for (int s = 0; s + win <= ns; ++s) {
      int d0 = out.dims_by_scale[s][c];
      if (d0 < 0) continue;
      bool ok = true;
      for (int r = 1; r < win; ++r)
        if (out.dims_by_scale[s + r][c] != d0) ok = false;
      if (ok) {
        chosen = s + win - 1;  // finest confirming scale of the window
        break;
      }
    }
    if (chosen < 0) {
      W.fibers[c] = Subspace::zero(fine.n());
      W.stable[c] = 0;
      unstable_mass += fine.cellmass(c);
    } else {
      int cs = cell_at_scale[chosen][c];
      W.fibers[c] = levels[chosen].W.fibers[cs];
      W.diagnostics[c] = levels[chosen].W.diagnostics[cs];
      W.stable[c] = 1;
    }
  }
  W.unstable_mass_fraction = unstable_mass / fine.total_mass();

  out.finest = levels.back().space;
  W.space = out.finest.get();
  out.tangent = orthogonal_complement(W);
  out.null_field = std::move(W);
  return out;
}

Subspace am_registry_value(const Stratum& s, int n) {
  switch (s.kind) {
    case StratumKind::AcDensity: {
      // span of the axes the box actually extends along (factors of a
      // product live on a subset of the ambient axes)
      std::vector<Vec3> gens;
      for (int a = 0; a < n; ++a)
        if (s.box.hi[a] > s.box.lo[a]) {
          Vec3 e = Vec3::Zero();
          e[a] = 1;
          gens.push_back(e);
        }
      return gens.empty() ? Subspace::zero(n) : Subspace::span(n, gens);
    }
    case StratumKind::Simplex: {
      if (s.dim == 0) return Subspace::zero(n);
      std::vector<Vec3> gens;
      for (int j = 1; j <= s.dim; ++j) gens.push_back(s.vertices[j] - s.vertices[0]);
      return Subspace::span(n, gens);
    }
    case StratumKind::Cantor: {
      if (s.variant == CantorVariant::SmithVolterraCantor) {
        Subspace sp = Subspace::zero(n);
        sp.dim = 1;
        sp.basis.col(0).setZero();
        sp.basis(s.axis, 0) = 1;
        return sp;
      }
      return Subspace::zero(n);
    }
    case StratumKind::PointMass: return Subspace::zero(n);
    case StratumKind::Product: {
      std::vector<Vec3> gens;
      for (auto& f : s.factors) {
        Subspace fs = am_registry_value(f, n);
        for (int j = 0; j < fs.dim; ++j) gens.push_back(fs.basis.col(j));
      }
      return Subspace::span(n, gens);
    }
  }
  return Subspace::zero(n);
}

Subspace am_value_at(const MeasureSpec& spec, const Vec3& x, double pad) {
  int n = spec.n;
  std::vector<Vec3> gens;
  for (auto& s : spec.strata) {
    Box sb = s.support_box(n);
    bool inside = true;
    for (int a = 0; a < n; ++a)
      if (x[a] < sb.lo[a] - pad || x[a] > sb.hi[a] + pad) inside = false;
    if (!inside) continue;
    Subspace v = am_registry_value(s, n);
    for (int j = 0; j < v.dim; ++j) gens.push_back(v.basis.col(j));
  }
  return gens.empty() ? Subspace::zero(n) : Subspace::span(n, gens);
}

DistributionField am_distribution(const MeasureSpec& spec, const GridSpace& space) {
  int n = space.n();
  DistributionField field;
  field.space = &space;
  field.fibers.resize(space.ncells());
  field.diagnostics.assign(space.ncells(), Vec3::Zero());
  field.stable.assign(space.ncells(), 1);
  // per-cell union of the registry values of the strata carrying mass there
  for (int c = 0; c < space.ncells(); ++c) {
    Box cell;
    Vec3 x = space.cell_center(c);
    for (int a = 0; a < n; ++a) {
      cell.lo[a] = x[a] - space.h() / 2;
      cell.hi[a] = x[a] + space.h() / 2;
    }
    std::vector<Vec3> gens;
    double floor = 1e-12 * space.cellmass(c);
    for (auto& s : spec.strata) {
      if (stratum_mass(s, n, cell) <= floor) continue;
      Subspace v = am_registry_value(s, n);
      for (int j = 0; j < v.dim; ++j) gens.push_back(v.basis.col(j));
    }
    field.fibers[c] = gens.empty() ? Subspace::zero(n) : Subspace::span(n, gens);
  }
  return field;
}

}  // namespace wsc
