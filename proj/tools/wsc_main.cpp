// Command-line driver: fibers, mwug, energy, heat, divergence, tensor, verify.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wsc/harness.hpp"

namespace fs = std::filesystem;
using namespace wsc;

namespace {

double parse_scale(const std::string& tok) {
  auto slash = tok.find('/');
  if (slash != std::string::npos)
    return std::stod(tok.substr(0, slash)) / std::stod(tok.substr(slash + 1));
  return std::stod(tok);
}

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_scale(tok));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonOpts {
  std::string config;
  std::string scales = "1/16,1/32,1/64";
  double eps_coef = 1.0 / 3.0;
  double eps_power = 1.0;
  double svd_tol = 0.05;
  double tol = 1e-6;
  std::uint64_t seed = 7;
  std::string out = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_config = true) {
  auto* opt = cmd->add_option("--config", o.config, "measure config file");
  if (need_config) opt->required();
  cmd->add_option("--scales", o.scales, "comma list of h values (fractions ok)");
  cmd->add_option("--eps-coef", o.eps_coef, "eps(h) = coef * h^power");
  cmd->add_option("--eps-power", o.eps_power, "eps(h) = coef * h^power");
  cmd->add_option("--svd-tol", o.svd_tol, "coherence threshold scale");
  cmd->add_option("--tol", o.tol, "divergence acceptance tolerance");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory");
}

SweepSchedule schedule_from(const CommonOpts& o) {
  SweepSchedule s;
  s.scales = parse_scales(o.scales);
  double c = o.eps_coef, p = o.eps_power;
  s.eps_rule = [c, p](double h) { return c * std::pow(h, p); };
  s.svd_tol = o.svd_tol;
  return s;
}

void write_meta(const CommonOpts& o, const MeasureSpec& spec, const GridSpace* space,
                double unstable_fraction, const std::string& command) {
  std::ofstream meta(fs::path(o.out) / "meta.txt");
  meta << "command = " << command << "\n";
  meta << "seed = " << o.seed << "\n";
  meta << "scales = " << o.scales << "\n";
  meta << "eps_rule = " << o.eps_coef << " * h^" << o.eps_power << "\n";
  meta << "svd_tol = " << o.svd_tol << "\n";
  meta << "divergence_tol = " << o.tol << "\n";
  if (space) {
    meta << "jitter = " << space->jitter()[0];
    for (int a = 1; a < space->n(); ++a) meta << "," << space->jitter()[a];
    meta << "\n";
  }
  meta << "cantor_truncation_bound = " << cantor_truncation_bound(spec) << "\n";
  meta << "unstable_mass_fraction = " << unstable_fraction << "\n";
}

void write_fibers_csv(const std::string& path, const GridSpace& space,
                      const DistributionField& T) {
  std::ofstream os(path);
  int n = space.n();
  os << "cell_id";
  for (int a = 0; a < n; ++a) os << ",center" << (a + 1);
  os << ",mass,stable,dim";
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a) os << ",basis" << (j + 1) << "_" << (a + 1);
  for (int a = 0; a < n; ++a) os << ",score" << (a + 1);
  os << "\n";
  os.precision(12);
  for (int c = 0; c < space.ncells(); ++c) {
    Vec3 x = space.cell_center(c);
    os << c;
    for (int a = 0; a < n; ++a) os << "," << x[a];
    os << "," << space.cellmass(c) << "," << int(T.stable[c]) << "," << T.dim(c);
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        os << "," << (j < T.fibers[c].dim ? T.fibers[c].basis(a, j) : 0.0);
    for (int a = 0; a < n; ++a) os << "," << T.diagnostics[c][a];
    os << "\n";
  }
}

int cmd_fibers(const CommonOpts& o) {
  MeasureSpec spec = parse_measure_spec(read_file(o.config));
  SweepSchedule sched = schedule_from(o);
  TangentSweepResult sweep = compute_tangent_field(spec, sched);
  fs::create_directories(o.out);
  write_fibers_csv((fs::path(o.out) / "fibers.csv").string(), *sweep.finest, sweep.tangent);
  write_meta(o, spec, sweep.finest.get(), sweep.null_field.unstable_mass_fraction, "fibers");
  std::cout << "fibers: " << sweep.finest->ncells() << " cells, unstable fraction "
            << sweep.null_field.unstable_mass_fraction << "\n";
  return 0;
}

int cmd_mwug(const CommonOpts& o, const std::string& f_text) {
  MeasureSpec spec = parse_measure_spec(read_file(o.config));
  Expr f = parse_expr(f_text, spec.n);
  SweepSchedule sched = schedule_from(o);
  TangentSweepResult sweep = compute_tangent_field(spec, sched);
  const GridSpace& space = *sweep.finest;
  DistributionField V = am_distribution(spec, space);
  SobolevSolution proj = mwug_via_projection(space, sweep.tangent, V, f);
  SymmetricForm M = assemble_mass(space);
  SymmetricForm G = assemble_stiffness(space);
  Eigen::VectorXd coeffs = project_function(space, f);
  SobolevSolution relax = minimal_relaxed_gradient(
      space, M.matrix, G.matrix, coeffs, sched.eps_rule(space.h()), o.svd_tol);
  std::vector<double> lip = lip_field(space, f);
  fs::create_directories(o.out);
  std::ofstream os(fs::path(o.out) / "mwug.csv");
  os << "cell_id";
  for (int a = 0; a < space.n(); ++a) os << ",center" << (a + 1);
  os << ",mass,mwug_projection,mwug_relaxation,lip,am_norm\n";
  os.precision(12);
  for (int c = 0; c < space.ncells(); ++c) {
    Vec3 x = space.cell_center(c);
    Vec3 am = V.fibers[c].project(f.grad(cell_centroid(space, c)));
    os << c;
    for (int a = 0; a < space.n(); ++a) os << "," << x[a];
    os << "," << space.cellmass(c) << "," << proj.mwug[c] << "," << relax.mwug[c] << ","
       << lip[c] << "," << am.head(space.n()).norm() << "\n";
  }
  write_meta(o, spec, &space, sweep.null_field.unstable_mass_fraction, "mwug");
  std::cout << "mwug: projection energy " << proj.energy << ", relaxation energy "
            << relax.energy << "\n";
  return 0;
}

int cmd_energy(const CommonOpts& o, const std::string& f_text) {
  MeasureSpec spec = parse_measure_spec(read_file(o.config));
  Expr f = parse_expr(f_text, spec.n);
  SweepSchedule sched = schedule_from(o);
  double h = sched.scales.back();
  GridSpace space = build_space(spec, h);
  SymmetricForm M = assemble_mass(space);
  SymmetricForm G = assemble_stiffness(space);
  Eigen::VectorXd coeffs = project_function(space, f);
  double ech = cheeger_energy(space, M.matrix, G.matrix, coeffs, sched.eps_rule(h));
  double esmooth = 0.5 * coeffs.dot(G.matrix * coeffs);
  fs::create_directories(o.out);
  write_meta(o, spec, &space, 0.0, "energy");
  std::cout << "cheeger_energy = " << ech << "\nsmooth_energy = " << esmooth << "\n";
  return 0;
}

int cmd_heat(const CommonOpts& o, const std::string& f_text, double t_final, int steps) {
  MeasureSpec spec = parse_measure_spec(read_file(o.config));
  Expr f = parse_expr(f_text, spec.n);
  SweepSchedule sched = schedule_from(o);
  TangentSweepResult sweep = compute_tangent_field(spec, sched);
  const GridSpace& space = *sweep.finest;
  SymmetricForm M = assemble_mass(space);
  SparseMat GT = assemble_relaxed_stiffness(space, sweep.tangent);
  Eigen::VectorXd f0 = project_function(space, f);
  HeatTrace trace;
  heat_flow(space, M.matrix, GT, f0, t_final, steps, &trace);
  fs::create_directories(o.out);
  std::ofstream os(fs::path(o.out) / "heat.csv");
  os << "step,time,mass,energy,w12_norm_sq\n";
  os.precision(12);
  for (size_t s = 0; s < trace.time.size(); ++s)
    os << s << "," << trace.time[s] << "," << trace.mass[s] << "," << trace.energy[s]
       << "," << trace.w12_sq[s] << "\n";
  write_meta(o, spec, &space, sweep.null_field.unstable_mass_fraction, "heat");
  std::cout << "heat: " << steps << " steps to t=" << t_final << ", final energy "
            << trace.energy.back() << "\n";
  return 0;
}

int cmd_divergence(const CommonOpts& o, const std::vector<std::string>& comps) {
  MeasureSpec spec = parse_measure_spec(read_file(o.config));
  std::vector<Expr> fexprs;
  for (int a = 0; a < spec.n; ++a) fexprs.push_back(parse_expr(comps[a], spec.n));
  SweepSchedule sched = schedule_from(o);
  double h = sched.scales.back();
  GridSpace space = build_space(spec, h);
  SymmetricForm M = assemble_mass(space);
  std::function<Vec3(const Vec3&)> w_eval = [&](const Vec3& x) {
    Vec3 v = Vec3::Zero();
    for (int a = 0; a < spec.n; ++a) v[a] = fexprs[a].eval(x);
    return v;
  };
  std::vector<Vec3> w(space.ncells());
  for (int c = 0; c < space.ncells(); ++c) w[c] = w_eval(cell_centroid(space, c));
  DivergencePair dv = check_divergence(space, M.matrix, w, o.tol, 0.05, &w_eval);
  fs::create_directories(o.out);
  write_meta(o, spec, &space, 0.0, "divergence");
  std::cout << (dv.accepted ? "accepted" : "rejected") << "  residual=" << dv.residual
            << " refinement_residual=" << dv.refinement_residual << "\n";
  return dv.accepted ? 0 : 1;
}

int cmd_tensor(const CommonOpts& o, const std::string& config_b) {
  MeasureSpec a = parse_measure_spec(read_file(o.config));
  MeasureSpec b = parse_measure_spec(read_file(config_b));
  SweepSchedule sched = schedule_from(o);
  HarnessThresholds thr;
  auto recs = verify_tensorization(a, b, sched,
                                   family_for_dim({"x1 + x2", "x1"}, a.n + b.n), thr,
                                   "tensor");
  VerificationReport rep;
  rep.records = recs;
  fs::create_directories(o.out);
  std::ofstream txt(fs::path(o.out) / "report.txt");
  write_report_txt(rep, txt);
  write_report_txt(rep, std::cout);
  return rep.all_pass() ? 0 : 1;
}

SuiteConfig suite_from_config(const std::string& text, const std::string& base_dir) {
  SuiteConfig cfg = default_suite();
  cfg.cases.clear();
  std::istringstream in(text);
  std::string line, section;
  std::map<std::string, std::string> kv;
  std::vector<std::map<std::string, std::string>> cases;
  auto flush = [&] {
    if (section == "case" && !kv.empty()) cases.push_back(kv);
    kv.clear();
  };
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    auto b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    if (line.front() == '[') {
      flush();
      section = line;
      section.erase(std::remove(section.begin(), section.end(), '['), section.end());
      section.erase(std::remove(section.begin(), section.end(), ']'), section.end());
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto x = s.find_first_not_of(" \t\"");
      auto y = s.find_last_not_of(" \t\"");
      s = x == std::string::npos ? "" : s.substr(x, y - x + 1);
    };
    trim(key);
    trim(val);
    if (section == "suite") {
      if (key == "seed") cfg.seed = std::stoull(val);
      if (key == "trials") cfg.divergence_trials = std::stoi(val);
    } else {
      kv[key] = val;
    }
  }
  flush();
  for (auto& c : cases) {
    SuiteCase sc;
    sc.name = c.count("name") ? c.at("name") : "case";
    auto resolve = [&](const std::string& p) {
      fs::path path(p);
      if (path.is_relative()) path = fs::path(base_dir) / path;
      return read_file(path.string());
    };
    sc.schedule.scales =
        parse_scales(c.count("scales") ? c.at("scales") : "1/16,1/32,1/64");
    if (c.count("factor_a") && c.count("factor_b")) {
      sc.factor_a = parse_measure_spec(resolve(c.at("factor_a")));
      sc.factor_b = parse_measure_spec(resolve(c.at("factor_b")));
      sc.spec = c.count("config") ? parse_measure_spec(resolve(c.at("config")))
                                  : product_measure(*sc.factor_a, *sc.factor_b);
    } else {
      sc.spec = parse_measure_spec(resolve(c.at("config")));
    }
    cfg.cases.push_back(std::move(sc));
  }
  return cfg;
}

int cmd_verify(const CommonOpts& o, bool have_config) {
  SuiteConfig cfg;
  if (have_config) {
    cfg = suite_from_config(read_file(o.config),
                            fs::path(o.config).parent_path().string());
  } else {
    cfg = default_suite();
  }
  cfg.seed = o.seed;
  VerificationReport rep = run_suite(cfg);
  fs::create_directories(o.out);
  {
    std::ofstream txt(fs::path(o.out) / "report.txt");
    write_report_txt(rep, txt);
    std::ofstream csv(fs::path(o.out) / "report.csv");
    write_report_csv(rep, csv);
    std::ofstream meta(fs::path(o.out) / "meta.txt");
    meta << "command = verify\nseed = " << cfg.seed << "\n"
         << "records = " << rep.records.size() << "\n";
  }
  write_report_txt(rep, std::cout);
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobolev calculus on weighted Euclidean space"};
  app.require_subcommand(1);

  CommonOpts o_fibers, o_mwug, o_energy, o_heat, o_div, o_tensor, o_verify;
  std::string f_text = "x1";
  std::string heat_f = "cos(pi*x1)";
  double t_final = 0.1;
  int steps = 64;
  std::string fx, fy = "0", fz = "0";
  std::string config_b;

  auto* fibers = app.add_subcommand("fibers", "tangent distribution sweep -> fibers.csv");
  add_common(fibers, o_fibers);

  auto* mwug = app.add_subcommand("mwug", "minimal weak upper gradients -> mwug.csv");
  add_common(mwug, o_mwug);
  mwug->add_option("--f", f_text, "closed-form function")->required();

  auto* energy = app.add_subcommand("energy", "Cheeger energy of a function");
  add_common(energy, o_energy);
  energy->add_option("--f", f_text, "closed-form function");

  auto* heat = app.add_subcommand("heat", "implicit-Euler heat flow -> heat.csv");
  add_common(heat, o_heat);
  heat->add_option("--f", heat_f, "initial condition");
  heat->add_option("--t", t_final, "final time");
  heat->add_option("--steps", steps, "implicit Euler steps");

  auto* divergence = app.add_subcommand("divergence", "membership test for the divergence");
  add_common(divergence, o_div);
  divergence->add_option("--fx", fx, "field x-component")->required();
  divergence->add_option("--fy", fy, "field y-component");
  divergence->add_option("--fz", fz, "field z-component");

  auto* tensor = app.add_subcommand("tensor", "tensorisation checks for a product");
  add_common(tensor, o_tensor);
  tensor->add_option("--config-b", config_b, "second factor config")->required();

  auto* verify = app.add_subcommand("verify", "run the theorem suite -> report.txt/csv");
  add_common(verify, o_verify, /*need_config=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit with 2
  }

  try {
    if (fibers->parsed()) return cmd_fibers(o_fibers);
    if (mwug->parsed()) return cmd_mwug(o_mwug, f_text);
    if (energy->parsed()) return cmd_energy(o_energy, f_text);
    if (heat->parsed()) return cmd_heat(o_heat, heat_f, t_final, steps);
    if (divergence->parsed()) return cmd_divergence(o_div, {fx, fy, fz});
    if (tensor->parsed()) return cmd_tensor(o_tensor, config_b);
    if (verify->parsed()) return cmd_verify(o_verify, !o_verify.config.empty());
  } catch (const SyntaxError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
