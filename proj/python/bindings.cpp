// Python bindings. Point sets and vector fields cross the boundary as (n, 2)
// float64 arrays, scalar fields as (n,) arrays.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "silva/benchmarks.hpp"
#include "silva/cli_io.hpp"
#include "silva/error.hpp"
#include "silva/operators.hpp"
#include "silva/parallel.hpp"
#include "silva/pressure_solver.hpp"

namespace py = pybind11;
using namespace silva;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec2> to_points(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw InvalidInput("expected an (n, 2) array");
  const auto r = a.unchecked<2>();
  std::vector<Vec2> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1)};
  return out;
}

std::vector<double> to_scalars(const Array& a) {
  if (a.ndim() != 1) throw InvalidInput("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Array from_points(std::span<const Vec2> p) {
  Array out({static_cast<py::ssize_t>(p.size()), py::ssize_t{2}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < p.size(); ++i) {
    w(static_cast<py::ssize_t>(i), 0) = p[i].x;
    w(static_cast<py::ssize_t>(i), 1) = p[i].y;
  }
  return out;
}

Array from_scalars(std::span<const double> f) {
  Array out(static_cast<py::ssize_t>(f.size()));
  std::copy(f.begin(), f.end(), out.mutable_data());
  return out;
}

void check_size(const VoronoiMesh& m, std::size_t n) {
  if (n != m.size()) throw InvalidInput("field length does not match the mesh");
}

py::dict diagnostics_dict(const StepDiagnostics& d) {
  py::dict out;
  out["step"] = d.step;
  out["time"] = d.time;
  out["dt"] = d.dt;
  out["energy"] = d.energy;
  out["div_l2"] = d.div_l2;
  out["div_max"] = d.div_max;
  out["div_star_l2"] = d.div_star_l2;
  out["minres_iterations"] = d.minres_iterations;
  out["outer_iterations"] = d.outer_iterations;
  out["outer_increment"] = d.outer_increment;
  out["min_spacing"] = d.min_spacing;
  return out;
}

py::dict state_dict(const ParticleState& s) {
  py::dict out;
  out["position"] = from_points(s.position);
  out["velocity"] = from_points(s.velocity);
  out["pressure"] = from_scalars(s.pressure);
  out["density"] = from_scalars(s.density);
  out["mass"] = from_scalars(s.mass);
  out["time"] = s.time;
  out["step"] = s.step;
  return out;
}

}  // namespace

PYBIND11_MODULE(_silva, m) {
  m.doc() = "Incompressible flow on moving Voronoi meshes";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("set_thread_count", &set_thread_count);
  m.def("thread_count", &thread_count);

  py::class_<DomainBox>(m, "Domain")
      .def(py::init([](double xmin, double xmax, double ymin, double ymax) {
             DomainBox d{xmin, xmax, ymin, ymax};
             d.validate();
             return d;
           }),
           py::arg("xmin") = 0.0, py::arg("xmax") = 1.0, py::arg("ymin") = 0.0,
           py::arg("ymax") = 1.0)
      .def_readonly("xmin", &DomainBox::xmin)
      .def_readonly("xmax", &DomainBox::xmax)
      .def_readonly("ymin", &DomainBox::ymin)
      .def_readonly("ymax", &DomainBox::ymax)
      .def_property_readonly("area", &DomainBox::area)
      .def("__repr__", [](const DomainBox& d) {
        return "Domain(" + format_double(d.xmin) + ", " + format_double(d.xmax) + ", " +
               format_double(d.ymin) + ", " + format_double(d.ymax) + ")";
      });

  py::class_<VoronoiMesh>(m, "Mesh")
      .def("__len__", &VoronoiMesh::size)
      .def_readonly("domain", &VoronoiMesh::domain)
      .def_readonly("dr", &VoronoiMesh::dr)
      .def_readonly("neighbors", &VoronoiMesh::neighbors)
      .def_property_readonly("seeds", [](const VoronoiMesh& mesh) { return from_points(mesh.seeds); })
      .def_property_readonly("volumes",
                             [](const VoronoiMesh& mesh) {
                               std::vector<double> v;
                               for (const auto& c : mesh.cells) v.push_back(c.volume);
                               return from_scalars(v);
                             })
      .def_property_readonly("centroids",
                             [](const VoronoiMesh& mesh) {
                               std::vector<Vec2> c;
                               for (const auto& cell : mesh.cells) c.push_back(cell.centroid);
                               return from_points(c);
                             })
      .def("vertices",
           [](const VoronoiMesh& mesh, std::size_t i) {
             if (i >= mesh.size()) throw py::index_error("cell index out of range");
             return from_points(mesh.cells[i].vertices);
           })
      .def("facets", [](const VoronoiMesh& mesh, std::size_t i) {
        if (i >= mesh.size()) throw py::index_error("cell index out of range");
        py::list out;
        for (const auto& f : mesh.cells[i].facets) {
          py::dict d;
          d["neighbor"] = f.neighbor;
          d["length"] = f.length;
          d["distance"] = f.distance;
          d["midpoint"] = py::make_tuple(f.midpoint.x, f.midpoint.y);
          d["normal"] = py::make_tuple(f.normal.x, f.normal.y);
          out.append(d);
        }
        return out;
      });

  m.def(
      "build_mesh",
      [](const Array& positions, const DomainBox& domain, double dr) {
        const auto p = to_points(positions);
        return build_mesh(p, domain, dr > 0.0 ? dr : nominal_spacing(domain, p.size()));
      },
      py::arg("positions"), py::arg("domain"), py::arg("dr") = 0.0,
      "Voronoi tessellation of the seeds clipped to the domain. dr defaults to the mean spacing.");

  m.def("strong_gradient", [](const VoronoiMesh& mesh, const Array& f) {
    const auto v = to_scalars(f);
    check_size(mesh, v.size());
    return from_points(strong_gradient_field(mesh, v));
  });
  m.def("stabilized_gradient", [](const VoronoiMesh& mesh, const Array& p) {
    const auto v = to_scalars(p);
    check_size(mesh, v.size());
    return from_points(stabilized_gradient_field(mesh, v));
  });
  m.def("weak_divergence", [](const VoronoiMesh& mesh, const Array& q) {
    const auto v = to_points(q);
    check_size(mesh, v.size());
    return from_scalars(weak_divergence_field(mesh, v));
  });
  m.def("volume_rate", [](const VoronoiMesh& mesh, const Array& q) {
    const auto v = to_points(q);
    check_size(mesh, v.size());
    return from_scalars(volume_rate_field(mesh, v));
  });
  m.def("laplacian", [](const VoronoiMesh& mesh, const Array& f) {
    const auto v = to_scalars(f);
    check_size(mesh, v.size());
    return from_scalars(laplacian_field(mesh, v));
  });

  m.def(
      "pressure_matrix",
      [](const VoronoiMesh& mesh, double rho) {
        const auto B = assemble_B(mesh, rho);
        py::array_t<long> indptr(static_cast<py::ssize_t>(B.dimension() + 1));
        py::array_t<long> indices(static_cast<py::ssize_t>(B.nonzeros()));
        std::vector<double> values;
        long* ip = indptr.mutable_data();
        long* ix = indices.mutable_data();
        ip[0] = 0;
        for (std::size_t i = 0; i < B.dimension(); ++i) {
          const auto c = B.row_columns(i);
          const auto v = B.row_values(i);
          ix = std::copy(c.begin(), c.end(), ix);
          values.insert(values.end(), v.begin(), v.end());
          ip[i + 1] = static_cast<long>(values.size());
        }
        return py::make_tuple(from_scalars(values), indices, indptr);
      },
      py::arg("mesh"), py::arg("rho") = 1.0,
      "CSR triple (data, indices, indptr) of the pressure operator, diagonal included.");
  m.def(
      "pressure_rhs",
      [](const VoronoiMesh& mesh, const Array& v, double dt) {
        const auto q = to_points(v);
        check_size(mesh, q.size());
        return from_scalars(assemble_rhs(mesh, q, dt));
      },
      py::arg("mesh"), py::arg("velocity"), py::arg("dt"));
  m.def(
      "solve_pressure",
      [](const VoronoiMesh& mesh, const Array& b, double rho, double rel_tol) {
        const auto rhs = to_scalars(b);
        check_size(mesh, rhs.size());
        SolveOptions o;
        o.rel_tol = rel_tol;
        SolveReport rep;
        const auto p = solve_pressure(assemble_B(mesh, rho), rhs, o, &rep);
        return py::make_tuple(from_scalars(p), rep.iterations);
      },
      py::arg("mesh"), py::arg("b"), py::arg("rho") = 1.0, py::arg("rel_tol") = 1e-9,
      "Zero-mean MINRES solution of B p = b; returns (p, iterations).");

  py::enum_<CaseId>(m, "Case")
      .value("taylor_green", CaseId::TaylorGreen)
      .value("gresho", CaseId::Gresho)
      .value("lid_cavity", CaseId::LidCavity)
      .value("rayleigh_taylor", CaseId::RayleighTaylor);

  py::class_<CaseSpec>(m, "CaseSpec")
      .def(py::init([](const std::string& name, int N) {
             return default_case(parse_case_id(name), N);
           }),
           py::arg("case"), py::arg("N"))
      .def_readonly("id", &CaseSpec::id)
      .def_readwrite("N", &CaseSpec::N)
      .def_readwrite("Re", &CaseSpec::Re)
      .def_readwrite("t_end", &CaseSpec::t_end)
      .def_readwrite("jitter", &CaseSpec::jitter)
      .def_readwrite("rng_seed", &CaseSpec::rng_seed)
      .def_readonly("domain", &CaseSpec::domain)
      .def_property_readonly("dr", &CaseSpec::dr)
      .def_property(
          "seeding", [](const CaseSpec& s) { return std::string(to_string(s.seeding)); },
          [](CaseSpec& s, const std::string& v) { s.seeding = parse_seeding(v); });

  m.def("initial_state", [](const CaseSpec& spec) { return state_dict(init_case(spec)); });
  m.def(
      "exact_velocity",
      [](const CaseSpec& spec, double t, const Array& x) {
        const auto p = to_points(x);
        std::vector<Vec2> v(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) v[i] = exact_solution(spec, t, p[i]).velocity;
        return from_points(v);
      },
      py::arg("spec"), py::arg("t"), py::arg("points"));

  m.def(
      "run",
      [](const CaseSpec& spec, std::optional<double> cfl, std::optional<bool> stabilize) {
        auto params = integrator_params(spec);
        if (cfl) params.cfl = *cfl;
        if (stabilize) params.stabilize = *stabilize;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_case(spec, params);
        }
        py::dict out = state_dict(r.state);
        out["steps"] = r.steps;
        out["initial_energy"] = r.initial_energy;
        py::list history;
        for (const auto& d : r.history) history.append(diagnostics_dict(d));
        out["history"] = history;
        if (has_exact_solution(spec.id)) {
          const auto e = error_norms(r.state, r.mesh, spec, r.initial_energy);
          py::dict err;
          err["velocity_l2"] = e.velocity_l2;
          err["pressure_l2"] = e.pressure_l2;
          err["energy_error"] = e.energy_error;
          err["divergence_l2"] = e.divergence_l2;
          out["errors"] = err;
        }
        if (spec.id == CaseId::LidCavity) {
          py::list cl;
          for (const auto& c : cavity_centerlines(r.state, r.mesh, spec))
            cl.append(py::make_tuple(std::string(1, c.component), c.coordinate, c.value,
                                     c.reference));
          out["centerlines"] = cl;
        }
        out["mesh"] = std::move(r.mesh);
        return out;
      },
      py::arg("spec"), py::arg("cfl") = py::none(), py::arg("stabilize") = py::none(),
      "Runs the case to spec.t_end and returns the final state, per-step diagnostics and, where "
      "available, error norms or cavity centerlines.");

  m.def(
      "check_config",
      [](const std::string& text, int steps) {
        const auto cfg = parse_config(text);
        return check_invariants(cfg, steps).failures;
      },
      py::arg("text"), py::arg("steps") = 5,
      "Parses configuration text and runs the invariant checks; returns the list of failures.");
}
