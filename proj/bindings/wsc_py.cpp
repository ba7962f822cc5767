// pybind11 module exposing the main operations of the library.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wsc/harness.hpp"

namespace py = pybind11;
using namespace wsc;

namespace {

py::array_t<double> to_array(const Eigen::VectorXd& v) {
  py::array_t<double> out(v.size());
  std::memcpy(out.mutable_data(), v.data(), sizeof(double) * v.size());
  return out;
}

Eigen::VectorXd from_array(const py::array_t<double>& a) {
  auto buf = a.request();
  Eigen::VectorXd v(buf.size);
  std::memcpy(v.data(), buf.ptr, sizeof(double) * buf.size);
  return v;
}

struct PySweep {
  std::shared_ptr<GridSpace> space;
  DistributionField tangent, null_field;
  std::vector<std::vector<int>> dims_by_scale;
};

}  // namespace

PYBIND11_MODULE(pywsc, m) {
  m.doc() = "first-order Sobolev calculus on measure-weighted Euclidean space";

  py::class_<MeasureSpec>(m, "MeasureSpec")
      .def_property_readonly("ambient_dim", [](const MeasureSpec& s) { return s.n; })
      .def_property_readonly("total_mass", &MeasureSpec::total_mass)
      .def("cell_mass",
           [](const MeasureSpec& s, std::vector<double> lo, std::vector<double> hi) {
             Box b;
             for (int a = 0; a < s.n; ++a) {
               b.lo[a] = lo.at(a);
               b.hi[a] = hi.at(a);
             }
             return cell_mass(s, b);
           })
      .def("lebesgue_labels", [](const MeasureSpec& s) {
        std::vector<std::string> out;
        for (auto& l : lebesgue_labels(s))
          out.push_back(l.tag == LebesgueTag::AbsolutelyContinuous
                            ? "absolutely_continuous"
                            : "singular");
        return out;
      });

  m.def("parse_measure_spec", &parse_measure_spec, py::arg("text"));
  m.def("product_measure", &product_measure, py::arg("a"), py::arg("b"));

  py::class_<GridSpace, std::shared_ptr<GridSpace>>(m, "GridSpace")
      .def_property_readonly("h", &GridSpace::h)
      .def_property_readonly("ncells", &GridSpace::ncells)
      .def_property_readonly("ndofs", &GridSpace::ndofs)
      .def_property_readonly("total_mass", &GridSpace::total_mass)
      .def("cell_centers",
           [](const GridSpace& g) {
             py::array_t<double> out({g.ncells(), g.n()});
             auto r = out.mutable_unchecked<2>();
             for (int c = 0; c < g.ncells(); ++c) {
               Vec3 x = g.cell_center(c);
               for (int a = 0; a < g.n(); ++a) r(c, a) = x[a];
             }
             return out;
           })
      .def("cell_masses", [](const GridSpace& g) {
        py::array_t<double> out(g.ncells());
        auto r = out.mutable_unchecked<1>();
        for (int c = 0; c < g.ncells(); ++c) r(c) = g.cellmass(c);
        return out;
      });

  m.def(
      "build_space",
      [](const MeasureSpec& spec, double h) {
        return std::make_shared<GridSpace>(build_space(spec, h));
      },
      py::arg("spec"), py::arg("h"));

  py::class_<PySweep>(m, "TangentSweep")
      .def_property_readonly("space", [](const PySweep& s) { return s.space; })
      .def_property_readonly("unstable_mass_fraction",
                             [](const PySweep& s) {
                               return s.null_field.unstable_mass_fraction;
                             })
      .def("dims",
           [](const PySweep& s) {
             py::array_t<int> out(s.tangent.fibers.size());
             auto r = out.mutable_unchecked<1>();
             for (size_t c = 0; c < s.tangent.fibers.size(); ++c)
               r(c) = s.tangent.fibers[c].dim;
             return out;
           })
      .def("stable",
           [](const PySweep& s) {
             py::array_t<int> out(s.tangent.fibers.size());
             auto r = out.mutable_unchecked<1>();
             for (size_t c = 0; c < s.tangent.fibers.size(); ++c)
               r(c) = s.null_field.stable[c];
             return out;
           })
      .def("basis", [](const PySweep& s, int cell) {
        const Subspace& sub = s.tangent.fibers.at(cell);
        py::array_t<double> out({sub.ambient, sub.dim});
        auto r = out.mutable_unchecked<2>();
        for (int a = 0; a < sub.ambient; ++a)
          for (int j = 0; j < sub.dim; ++j) r(a, j) = sub.basis(a, j);
        return out;
      });

  m.def(
      "compute_tangent_field",
      [](const MeasureSpec& spec, std::vector<double> scales, double eps_coef,
         double eps_power, double svd_tol) {
        SweepSchedule sched;
        sched.scales = std::move(scales);
        sched.eps_rule = [eps_coef, eps_power](double h) {
          return eps_coef * std::pow(h, eps_power);
        };
        sched.svd_tol = svd_tol;
        TangentSweepResult r = compute_tangent_field(spec, sched);
        PySweep out;
        out.space = r.finest;
        out.tangent = std::move(r.tangent);
        out.null_field = std::move(r.null_field);
        out.dims_by_scale = std::move(r.dims_by_scale);
        return out;
      },
      py::arg("spec"), py::arg("scales"), py::arg("eps_coef") = 1.0 / 3,
      py::arg("eps_power") = 1.0, py::arg("svd_tol") = 0.05);

  m.def(
      "mwug",
      [](const MeasureSpec& spec, std::vector<double> scales, const std::string& f) {
        SweepSchedule sched;
        sched.scales = std::move(scales);
        TangentSweepResult sweep = compute_tangent_field(spec, sched);
        const GridSpace& space = *sweep.finest;
        DistributionField V = am_distribution(spec, space);
        Expr fe = parse_expr(f, spec.n);
        SobolevSolution proj = mwug_via_projection(space, sweep.tangent, V, fe);
        SymmetricForm M = assemble_mass(space);
        SymmetricForm G = assemble_stiffness(space);
        SobolevSolution relax = minimal_relaxed_gradient(
            space, M.matrix, G.matrix, project_function(space, fe),
            sched.eps_rule(space.h()));
        py::dict out;
        out["mwug_projection"] = py::cast(proj.mwug);
        out["mwug_relaxation"] = py::cast(relax.mwug);
        out["energy"] = relax.energy;
        return out;
      },
      py::arg("spec"), py::arg("scales"), py::arg("f"));

  m.def(
      "cheeger_energy",
      [](const MeasureSpec& spec, double h, const std::string& f, double eps_coef) {
        GridSpace space = build_space(spec, h);
        SymmetricForm M = assemble_mass(space);
        SymmetricForm G = assemble_stiffness(space);
        return cheeger_energy(space, M.matrix, G.matrix,
                              project_function(space, parse_expr(f, spec.n)),
                              eps_coef * h);
      },
      py::arg("spec"), py::arg("h"), py::arg("f"), py::arg("eps_coef") = 1.0 / 3);

  m.def(
      "heat_flow",
      [](const MeasureSpec& spec, std::vector<double> scales, const std::string& f0,
         double t_final, int steps) {
        SweepSchedule sched;
        sched.scales = std::move(scales);
        TangentSweepResult sweep = compute_tangent_field(spec, sched);
        const GridSpace& space = *sweep.finest;
        SymmetricForm M = assemble_mass(space);
        SparseMat GT = assemble_relaxed_stiffness(space, sweep.tangent);
        HeatTrace trace;
        Eigen::VectorXd fT =
            heat_flow(space, M.matrix, GT, project_function(space, parse_expr(f0, spec.n)),
                      t_final, steps, &trace);
        py::dict out;
        out["coeffs"] = to_array(fT);
        out["time"] = py::cast(trace.time);
        out["mass"] = py::cast(trace.mass);
        out["energy"] = py::cast(trace.energy);
        out["w12_norm_sq"] = py::cast(trace.w12_sq);
        return out;
      },
      py::arg("spec"), py::arg("scales"), py::arg("f0"), py::arg("t_final") = 0.1,
      py::arg("steps") = 64);

  m.def(
      "run_default_suite",
      [](std::uint64_t seed) {
        SuiteConfig cfg = default_suite();
        cfg.seed = seed;
        VerificationReport rep = run_suite(cfg);
        py::list records;
        for (auto& r : rep.records) {
          py::dict d;
          d["spec"] = r.spec_id;
          d["check"] = r.name;
          d["status"] =
              r.inconclusive ? "inconclusive" : (r.pass ? "pass" : "fail");
          d["measured"] = r.measured;
          d["threshold"] = r.threshold;
          records.append(d);
        }
        py::dict out;
        out["records"] = records;
        out["all_pass"] = rep.all_pass();
        return out;
      },
      py::arg("seed") = 7);

  m.def("project_function",
        [](std::shared_ptr<GridSpace> space, const std::string& f) {
          return to_array(project_function(*space, parse_expr(f, space->n())));
        });
  (void)from_array;
}
