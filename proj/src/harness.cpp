#include "wsc/harness.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace wsc {

namespace {

// mass carried by singular strata inside each active cell
std::vector<double> singular_mass_by_cell(const MeasureSpec& spec,
                                          const GridSpace& space) {
  auto labels = lebesgue_labels(spec);
  std::vector<double> out(space.ncells(), 0.0);
  for (size_t si = 0; si < spec.strata.size(); ++si) {
    if (labels[si].tag != LebesgueTag::Singular) continue;
    for (int c = 0; c < space.ncells(); ++c) {
      Box cell;
      Vec3 x = space.cell_center(c);
      for (int a = 0; a < spec.n; ++a) {
        cell.lo[a] = x[a] - space.h() / 2;
        cell.hi[a] = x[a] + space.h() / 2;
      }
      out[c] += stratum_mass(spec.strata[si], spec.n, cell);
    }
  }
  return out;
}

}  // namespace

CheckRecord verify_T_leq_V(const MeasureSpec& spec, const SweepSchedule& schedule,
                           const HarnessThresholds& thr, const std::string& spec_id) {
  CheckRecord rec;
  rec.name = "T_leq_V";
  rec.spec_id = spec_id;
  rec.scales = schedule.scales;
  TangentSweepResult sweep = compute_tangent_field(spec, schedule);
  const GridSpace& space = *sweep.finest;
  DistributionField V = am_distribution(spec, space);
  rec.unstable_mass_fraction = sweep.null_field.unstable_mass_fraction;
  double good = 0, stable_mass = 0;
  int worst_cell = -1;
  double worst = 0;
  for (int c = 0; c < space.ncells(); ++c) {
    if (!sweep.null_field.stable[c]) continue;
    stable_mass += space.cellmass(c);
    double res = containment_residual(sweep.tangent.fibers[c], V.fibers[c]);
    if (res <= thr.containment_tol)
      good += space.cellmass(c);
    else if (res > worst) {
      worst = res;
      worst_cell = c;
    }
  }
  rec.measured = stable_mass > 0 ? good / stable_mass : 0;
  rec.threshold = thr.containment_mass;
  rec.pass = rec.measured >= rec.threshold;
  if (worst_cell >= 0) {
    std::ostringstream oss;
    oss << "worst residual " << worst << " at cell " << worst_cell;
    rec.detail = oss.str();
  }
  return rec;
}

CheckRecord verify_dim_drop(const MeasureSpec& spec, const SweepSchedule& schedule,
                            const HarnessThresholds& thr, const std::string& spec_id) {
  CheckRecord rec;
  rec.name = "dim_drop";
  rec.spec_id = spec_id;
  rec.scales = schedule.scales;
  auto labels = lebesgue_labels(spec);
  bool any_singular = false;
  for (auto& l : labels)
    if (l.tag == LebesgueTag::Singular) any_singular = true;
  if (!any_singular) {
    rec.inconclusive = true;
    rec.detail = "no singular stratum; check skipped";
    return rec;
  }
  TangentSweepResult sweep = compute_tangent_field(spec, schedule);
  const GridSpace& space = *sweep.finest;
  rec.unstable_mass_fraction = sweep.null_field.unstable_mass_fraction;
  if (rec.unstable_mass_fraction > thr.inconclusive_unstable) {
    rec.inconclusive = true;
    rec.detail = "unstable mass above 10%";
    return rec;
  }
  std::vector<double> smass = singular_mass_by_cell(spec, space);
  int n = space.n();
  // passing fraction per scale, for the monotone-trend guard
  std::vector<double> fracs;
  for (size_t s = 0; s < sweep.dims_by_scale.size(); ++s) {
    double tot = 0, drop = 0;
    for (int c = 0; c < space.ncells(); ++c) {
      if (smass[c] <= 0) continue;
      int dW = sweep.dims_by_scale[s][c];
      if (dW < 0) continue;
      tot += smass[c];
      if (n - dW < n) drop += smass[c];  // dim T = n - dim W
    }
    fracs.push_back(tot > 0 ? drop / tot : 0.0);
  }
  double tot = 0, drop = 0;
  for (int c = 0; c < space.ncells(); ++c) {
    if (smass[c] <= 0 || !sweep.null_field.stable[c]) continue;
    tot += smass[c];
    if (sweep.tangent.dim(c) < n) drop += smass[c];
  }
  rec.measured = tot > 0 ? drop / tot : 0;
  rec.threshold = thr.dim_drop_mass;
  bool monotone = true;
  size_t k = fracs.size();
  for (size_t s = (k >= 3 ? k - 3 : 0); s + 1 < k; ++s)
    if (fracs[s + 1] < fracs[s] - 1e-12) monotone = false;
  rec.pass = rec.measured >= rec.threshold && monotone;
  std::ostringstream oss;
  oss << "fractions by scale:";
  for (double f : fracs) oss << " " << f;
  rec.detail = oss.str();
  return rec;
}

std::vector<CheckRecord> verify_tensorization(const MeasureSpec& specA,
                                              const MeasureSpec& specB,
                                              const SweepSchedule& schedule,
                                              const std::vector<Expr>& f_family,
                                              const HarnessThresholds& thr,
                                              const std::string& spec_id) {
  std::vector<CheckRecord> out;
  MeasureSpec prod = product_measure(specA, specB);
  TangentSweepResult sp = compute_tangent_field(prod, schedule);
  TangentSweepResult sa = compute_tangent_field(specA, schedule);
  TangentSweepResult sb = compute_tangent_field(specB, schedule);
  const GridSpace& space = *sp.finest;
  int na = specA.n, n = prod.n;

  CheckRecord fib;
  fib.name = "tensor_fibers";
  fib.spec_id = spec_id;
  fib.scales = schedule.scales;
  fib.unstable_mass_fraction = sp.null_field.unstable_mass_fraction;
  double good = 0, tot = 0;
  for (int c = 0; c < space.ncells(); ++c) {
    if (!sp.null_field.stable[c]) continue;
    Vec3 x = space.cell_center(c);
    Vec3 xa = Vec3::Zero(), xb = Vec3::Zero();
    for (int a = 0; a < na; ++a) xa[a] = x[a];
    for (int a = na; a < n; ++a) xb[a - na] = x[a];
    int ca = sa.finest->cell_at(xa);
    int cb = sb.finest->cell_at(xb);
    if (ca < 0 || cb < 0 || !sa.null_field.stable[ca] || !sb.null_field.stable[cb])
      continue;
    tot += space.cellmass(c);
    std::vector<Vec3> gens;
    const Subspace& Ta = sa.tangent.fibers[ca];
    for (int j = 0; j < Ta.dim; ++j) {
      Vec3 v = Vec3::Zero();
      v.head(na) = Ta.basis.col(j).head(na);
      gens.push_back(v);
    }
    const Subspace& Tb = sb.tangent.fibers[cb];
    for (int j = 0; j < Tb.dim; ++j) {
      Vec3 v = Vec3::Zero();
      for (int a = 0; a < specB.n; ++a) v[na + a] = Tb.basis(a, j);
      gens.push_back(v);
    }
    Subspace direct = gens.empty() ? Subspace::zero(n) : Subspace::span(n, gens);
    if (grassmann_distance(sp.tangent.fibers[c], direct) <= thr.tensor_fiber_dgr)
      good += space.cellmass(c);
  }
  fib.measured = tot > 0 ? good / tot : 0;
  fib.threshold = thr.tensor_fiber_mass;
  fib.pass = fib.measured >= fib.threshold;
  out.push_back(fib);

  CheckRecord en;
  en.name = "tensor_energy";
  en.spec_id = spec_id;
  en.scales = schedule.scales;
  en.unstable_mass_fraction = fib.unstable_mass_fraction;
  DistributionField Vp = am_distribution(prod, space);
  double worst = 0;
  for (auto& f : f_family) {
    for (int c = 0; c < space.ncells(); ++c) {
      if (!sp.null_field.stable[c]) continue;
      Vec3 x = cell_centroid(space, c);
      Vec3 g = f.grad(x);
      Vec3 xa = Vec3::Zero(), xb = Vec3::Zero();
      for (int a = 0; a < na; ++a) xa[a] = x[a];
      for (int a = na; a < n; ++a) xb[a - na] = x[a];
      int ca = sa.finest->cell_at(xa);
      int cb = sb.finest->cell_at(xb);
      if (ca < 0 || cb < 0 || !sa.null_field.stable[ca] || !sb.null_field.stable[cb])
        continue;
      Vec3 ga = Vec3::Zero(), gb = Vec3::Zero();
      for (int a = 0; a < na; ++a) ga[a] = g[a];
      for (int a = 0; a < specB.n; ++a) gb[a] = g[na + a];
      double lhs = sp.tangent.fibers[c].project(g).squaredNorm();
      double rhs = sa.tangent.fibers[ca].project(ga).squaredNorm() +
                   sb.tangent.fibers[cb].project(gb).squaredNorm();
      double scale = std::max({lhs, rhs, 1e-6});
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  }
  en.measured = worst;
  en.threshold = thr.tensor_energy_rel;
  en.pass = worst <= thr.tensor_energy_rel;
  out.push_back(en);
  return out;
}

CheckRecord verify_lip_equality(const MeasureSpec& spec, const SweepSchedule& schedule,
                                const std::vector<Expr>& f_family,
                                const HarnessThresholds& thr, const std::string& spec_id) {
  CheckRecord rec;
  rec.name = "lip_equality";
  rec.spec_id = spec_id;
  rec.scales = schedule.scales;
  TangentSweepResult sweep = compute_tangent_field(spec, schedule);
  const GridSpace& space = *sweep.finest;
  rec.unstable_mass_fraction = sweep.null_field.unstable_mass_fraction;
  if (rec.unstable_mass_fraction > thr.inconclusive_unstable) {
    rec.inconclusive = true;
    rec.detail = "unstable mass above 10%";
    return rec;
  }
  int n = space.n();
  double stable_mass = 0, full_mass = 0;
  for (int c = 0; c < space.ncells(); ++c) {
    if (!sweep.null_field.stable[c]) continue;
    stable_mass += space.cellmass(c);
    if (sweep.tangent.dim(c) == n) full_mass += space.cellmass(c);
  }
  bool full_fibers = stable_mass > 0 && full_mass / stable_mass >= 0.99;

  DistributionField V = am_distribution(spec, space);
  bool lip_match = true;
  for (auto& f : f_family) {
    SobolevSolution proj = mwug_via_projection(space, sweep.tangent, V, f);
    std::vector<double> lip = lip_field(space, f);
    double ok = 0;
    for (int c = 0; c < space.ncells(); ++c) {
      if (!sweep.null_field.stable[c]) continue;
      if (std::abs(proj.mwug[c] - lip[c]) <= thr.lip_tol) ok += space.cellmass(c);
    }
    if (stable_mass <= 0 || ok / stable_mass < thr.lip_mass) lip_match = false;
  }
  rec.measured = full_fibers == lip_match ? 1 : 0;
  rec.threshold = 1;
  rec.pass = full_fibers == lip_match;
  std::ostringstream oss;
  oss << "full_fibers=" << full_fibers << " lip_match=" << lip_match;
  rec.detail = oss.str();
  return rec;
}

CheckRecord verify_divergence_tangency(const MeasureSpec& spec,
                                       const SweepSchedule& schedule, int trials,
                                       std::uint64_t seed, const HarnessThresholds& thr,
                                       const std::string& spec_id) {
  CheckRecord rec;
  rec.name = "divergence_tangency";
  rec.spec_id = spec_id;
  rec.scales = schedule.scales;
  if (trials < 1) throw ValidationError("divergence tangency needs trials >= 1");
  TangentSweepResult sweep = compute_tangent_field(spec, schedule);
  const GridSpace& space = *sweep.finest;
  rec.unstable_mass_fraction = sweep.null_field.unstable_mass_fraction;
  SymmetricForm M = assemble_mass(space);
  DistributionField V = am_distribution(spec, space);
  int n = space.n();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);

  int accepted = 0;
  double worst_frac = 1.0;
  for (int t = 0; t < trials; ++t) {
    // random polynomial field (degree <= 2 per component) times a bump that
    // vanishes on the bbox boundary; projected on the decomposability
    // registry so candidates can lie in D(div) at all
    std::array<std::array<double, 10>, 3> c{};
    for (int a = 0; a < n; ++a)
      for (int k = 0; k < 10; ++k) c[a][k] = coef(rng);
    auto poly_at = [&](int a, const Vec3& x) {
      const auto& q = c[a];
      return q[0] + q[1] * x[0] + q[2] * x[1] + q[3] * x[2] + q[4] * x[0] * x[0] +
             q[5] * x[1] * x[1] + q[6] * x[2] * x[2] + q[7] * x[0] * x[1] +
             q[8] * x[0] * x[2] + q[9] * x[1] * x[2];
    };
    // bump vanishing on the boundary of the measure support, so candidate
    // fields carry no flux atoms at stratum tips
    Box sup;
    bool first_box = true;
    for (auto& st : spec.strata) {
      Box sb = st.support_box(n);
      if (first_box) {
        sup = sb;
        first_box = false;
      } else {
        sup.lo = sup.lo.cwiseMin(sb.lo);
        sup.hi = sup.hi.cwiseMax(sb.hi);
      }
    }
    auto bump = [&](const Vec3& x) {
      double b = 1;
      for (int a = 0; a < n; ++a) {
        double lo = sup.lo[a], hi = sup.hi[a];
        if (hi - lo < 1e-12) continue;
        double u = (x[a] - lo) * (hi - x[a]) / ((hi - lo) * (hi - lo) / 4);
        b *= std::max(0.0, u);
      }
      return b;
    };
    std::vector<Vec3> w(space.ncells(), Vec3::Zero());
    for (int cell = 0; cell < space.ncells(); ++cell) {
      Vec3 x = cell_centroid(space, cell);
      Vec3 v = Vec3::Zero();
      for (int a = 0; a < n; ++a) v[a] = poly_at(a, x) * bump(x);
      w[cell] = V.fibers[cell].project(v);
    }
    // closed form of the same field for the refinement grid; the registry
    // projection is evaluated analytically so fine nodes never miss
    std::function<Vec3(const Vec3&)> w_eval = [&](const Vec3& x) {
      Vec3 v = Vec3::Zero();
      for (int a = 0; a < n; ++a) v[a] = poly_at(a, x) * bump(x);
      return Vec3(am_value_at(spec, x, space.h() / 2).project(v));
    };
    double wmass = 0;
    for (int cell = 0; cell < space.ncells(); ++cell)
      wmass += space.cellmass(cell) * w[cell].squaredNorm();
    if (std::sqrt(wmass) < 1e-9) continue;  // registry projected the field away
    DivergencePair dv = check_divergence(space, M.matrix, w, thr.divergence_tol,
                                         thr.divergence_refine_tol, &w_eval);
    if (!dv.accepted) continue;
    ++accepted;
    double tot = 0, good = 0;
    for (int cell = 0; cell < space.ncells(); ++cell) {
      if (!sweep.null_field.stable[cell]) continue;
      tot += space.cellmass(cell);
      Vec3 out_of_T = w[cell] - sweep.tangent.fibers[cell].project(w[cell]);
      double scale = std::max(w[cell].norm(), 1e-12);
      if (out_of_T.norm() <= 5 * schedule.svd_tol * scale) good += space.cellmass(cell);
    }
    if (tot > 0) worst_frac = std::min(worst_frac, good / tot);
  }
  if (accepted < 3) {
    rec.inconclusive = true;
    std::ostringstream oss;
    oss << "only " << accepted << " fields accepted";
    rec.detail = oss.str();
    return rec;
  }
  rec.measured = worst_frac;
  rec.threshold = thr.tangency_mass;
  rec.pass = worst_frac >= thr.tangency_mass;
  std::ostringstream oss;
  oss << accepted << " fields accepted";
  rec.detail = oss.str();
  return rec;
}

std::vector<Expr> family_for_dim(const std::vector<std::string>& texts, int n) {
  std::vector<Expr> out;
  for (auto& t : texts) {
    try {
      out.push_back(parse_expr(t, n));
    } catch (const SyntaxError&) {
      // silently drop family members that reference missing coordinates
    }
  }
  return out;
}

namespace {

MeasureSpec spec_from_text(const std::string& text) { return parse_measure_spec(text); }

SweepSchedule schedule_for(std::vector<double> scales) {
  SweepSchedule s;
  s.scales = std::move(scales);
  return s;
}

}  // namespace

SuiteConfig default_suite() {
  SuiteConfig cfg;
  cfg.f_family_text = {"1", "x1", "x2", "x1 + x2", "x1^2", "cos(pi*x1)"};

  SuiteCase lebesgue2;
  lebesgue2.name = "lebesgue_square";
  lebesgue2.spec = spec_from_text(
      "[domain]\nambient_dim = 2\nbbox = [[0,0],[1,1]]\n"
      "[[stratum]]\nkind = \"ac_density\"\ndensity = \"1\"\n");
  lebesgue2.schedule = schedule_for({1.0 / 16, 1.0 / 32, 1.0 / 64});
  cfg.cases.push_back(lebesgue2);

  SuiteCase segment;
  segment.name = "segment_30deg";
  {
    double c = std::cos(M_PI / 6), s = std::sin(M_PI / 6);
    std::ostringstream oss;
    oss << "[domain]\nambient_dim = 2\nbbox = [[0,0],[1,1]]\n"
        << "[[stratum]]\nkind = \"simplex\"\ndim = 1\nvertices = [[0.05,0.05],["
        << 0.05 + 0.9 * c << "," << 0.05 + 0.9 * s << "]]\ndensity = \"1\"\n";
    segment.spec = spec_from_text(oss.str());
  }
  segment.schedule = schedule_for({1.0 / 32, 1.0 / 64, 1.0 / 128});
  cfg.cases.push_back(segment);

  SuiteCase junction;
  junction.name = "cross_junction";
  junction.spec = spec_from_text(
      "[domain]\nambient_dim = 2\nbbox = [[0,0],[1,1]]\n"
      "[[stratum]]\nkind = \"simplex\"\ndim = 1\nvertices = [[0.1,0.5],[0.9,0.5]]\n"
      "density = \"1\"\n"
      "[[stratum]]\nkind = \"simplex\"\ndim = 1\nvertices = [[0.5,0.1],[0.5,0.9]]\n"
      "density = \"1\"\n");
  junction.schedule = schedule_for({1.0 / 32, 1.0 / 64, 1.0 / 128});
  cfg.cases.push_back(junction);

  SuiteCase ternary;
  ternary.name = "ternary_cantor";
  ternary.spec = spec_from_text(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"cantor\"\nvariant = \"ternary\"\ngenerations = 20\n"
      "axis = 1\ninterval = [0,1]\n");
  ternary.schedule = schedule_for({std::pow(3.0, -2), std::pow(3.0, -3),
                                   std::pow(3.0, -4), std::pow(3.0, -5)});
  cfg.cases.push_back(ternary);

  SuiteCase svc;
  svc.name = "fat_cantor";
  svc.spec = spec_from_text(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"cantor\"\nvariant = \"svc\"\ngenerations = 24\n"
      "axis = 1\ninterval = [0,1]\n");
  svc.schedule = schedule_for({std::pow(2.0, -5), std::pow(2.0, -6), std::pow(2.0, -7),
                               std::pow(2.0, -8)});
  cfg.cases.push_back(svc);

  SuiteCase product;
  product.name = "lebesgue_x_cantor";
  product.factor_a = spec_from_text(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"ac_density\"\ndensity = \"1\"\n");
  product.factor_b = spec_from_text(
      "[domain]\nambient_dim = 1\nbbox = [[0],[1]]\n"
      "[[stratum]]\nkind = \"cantor\"\nvariant = \"ternary\"\ngenerations = 16\n"
      "axis = 1\ninterval = [0,1]\n");
  product.spec = product_measure(*product.factor_a, *product.factor_b);
  product.schedule = schedule_for({1.0 / 27, 1.0 / 81});
  cfg.cases.push_back(product);
  return cfg;
}

VerificationReport run_suite(const SuiteConfig& config) {
  VerificationReport rep;
  rep.seed = config.seed;
  {
    std::ostringstream oss;
    oss << "seed=" << config.seed << " cases=" << config.cases.size()
        << " trials=" << config.divergence_trials;
    rep.environment = oss.str();
  }
  for (auto& cs : config.cases) {
    auto family = family_for_dim(config.f_family_text, cs.spec.n);
    auto guard = [&](const char* name, auto&& fn) {
      try {
        fn();
      } catch (const std::exception& e) {
        CheckRecord r;
        r.name = name;
        r.spec_id = cs.name;
        r.inconclusive = true;
        r.detail = std::string("error: ") + e.what();
        rep.records.push_back(std::move(r));
      }
    };
    guard("T_leq_V", [&] {
      rep.records.push_back(verify_T_leq_V(cs.spec, cs.schedule, config.thresholds, cs.name));
    });
    guard("dim_drop", [&] {
      rep.records.push_back(verify_dim_drop(cs.spec, cs.schedule, config.thresholds, cs.name));
    });
    guard("lip_equality", [&] {
      rep.records.push_back(
          verify_lip_equality(cs.spec, cs.schedule, family, config.thresholds, cs.name));
    });
    guard("divergence_tangency", [&] {
      rep.records.push_back(verify_divergence_tangency(
          cs.spec, cs.schedule, config.divergence_trials, config.seed, config.thresholds,
          cs.name));
    });
    if (cs.factor_a && cs.factor_b) {
      guard("tensorization", [&] {
        auto recs = verify_tensorization(*cs.factor_a, *cs.factor_b, cs.schedule, family,
                                         config.thresholds, cs.name);
        for (auto& r : recs) rep.records.push_back(std::move(r));
      });
    }
  }
  return rep;
}

void write_report_txt(const VerificationReport& rep, std::ostream& os) {
  os << "verification report (" << rep.environment << ")\n";
  for (auto& r : rep.records) {
    os << (r.inconclusive ? "[INCONCLUSIVE]" : (r.pass ? "[PASS]" : "[FAIL]")) << " "
       << r.spec_id << " :: " << r.name << "  measured=" << r.measured
       << " threshold=" << r.threshold << " unstable=" << r.unstable_mass_fraction;
    if (!r.detail.empty()) os << "  (" << r.detail << ")";
    os << "\n";
  }
  os << (rep.all_pass() ? "ALL CHECKS PASS\n" : "CHECK FAILURES PRESENT\n");
}

void write_report_csv(const VerificationReport& rep, std::ostream& os) {
  os << "spec,check,status,measured,threshold,unstable_mass_fraction,scales,detail\n";
  for (auto& r : rep.records) {
    os << r.spec_id << "," << r.name << ","
       << (r.inconclusive ? "inconclusive" : (r.pass ? "pass" : "fail")) << ","
       << r.measured << "," << r.threshold << "," << r.unstable_mass_fraction << ",";
    for (size_t i = 0; i < r.scales.size(); ++i) os << (i ? ";" : "") << r.scales[i];
    std::string d = r.detail;
    for (auto& ch : d)
      if (ch == ',' || ch == '\n') ch = ';';
    os << "," << d << "\n";
  }
}

}  // namespace wsc
