#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pinnfm/experiment.hpp"
#include "pinnfm/landscape.hpp"
#include "pinnfm/losses.hpp"
#include "pinnfm/network.hpp"
#include "pinnfm/oracles.hpp"

namespace py = pybind11;
using namespace pinnfm;

namespace {

PdeProblem checked(PdeProblem p) {
  p.validate();
  return p;
}

py::dict grid_dict(const SolutionGrid& g) {
  py::dict d;
  d["x"] = g.xs;
  d["t"] = g.ts;
  d["u"] = g.values;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Physics-informed network training for 1D convection, reaction and reaction-diffusion.";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<PdeProblem>(m, "PdeProblem")
      .def_static(
          "convection", [](double beta, double horizon) {
            return checked(PdeProblem::convection(beta, horizon));
          },
          py::arg("beta"), py::arg("horizon") = 1.0)
      .def_static(
          "reaction", [](double rho, double horizon) {
            return checked(PdeProblem::reaction(rho, horizon));
          },
          py::arg("rho"), py::arg("horizon") = 1.0)
      .def_static(
          "reaction_diffusion", [](double nu, double rho, double horizon) {
            return checked(PdeProblem::reaction_diffusion(nu, rho, horizon));
          },
          py::arg("nu"), py::arg("rho"), py::arg("horizon") = 1.0)
      .def_property_readonly("kind", &PdeProblem::kind)
      .def_property_readonly("coefficient", &PdeProblem::coefficient)
      .def_readonly("horizon", &PdeProblem::horizon)
      .def("h", &PdeProblem::h, py::arg("x"))
      .def("__repr__", [](const PdeProblem& p) {
        return "PdeProblem(" + p.kind() + ", " + std::to_string(p.coefficient()) + ")";
      });

  py::class_<NetworkParams>(m, "NetworkParams")
      .def_static("glorot", [](std::uint64_t seed) { return NetworkParams::glorot(seed); },
                  py::arg("seed"))
      .def_static("from_flat",
                  [](const Vector& flat) { return NetworkParams(default_architecture(), flat); })
      .def_property_readonly("flat", [](const NetworkParams& p) { return p.flat(); })
      .def("__len__", &NetworkParams::size);

  m.def("forward", py::overload_cast<const NetworkParams&, double, double>(&forward),
        py::arg("params"), py::arg("x"), py::arg("t"));
  m.def(
      "forward_batch",
      [](const NetworkParams& p, const Vector& x, const Vector& t) {
        if (x.size() != t.size()) throw DomainError("x and t must have equal length");
        Matrix in(2, x.size());
        in.row(0) = x.transpose();
        in.row(1) = t.transpose();
        return Vector(forward_batch(p, in).transpose());
      },
      py::arg("params"), py::arg("x"), py::arg("t"));
  m.def(
      "forward_jet",
      [](const NetworkParams& p, double x, double t) {
        const InputJet j = forward_jet(p, x, t);
        py::dict d;
        d["u"] = j.u;
        d["du_dt"] = j.du_dt;
        d["du_dx"] = j.du_dx;
        d["d2u_dx2"] = j.d2u_dx2;
        return d;
      },
      py::arg("params"), py::arg("x"), py::arg("t"));

  m.def(
      "reference_grid",
      [](const PdeProblem& p, std::size_t nx, std::size_t nt) {
        return grid_dict(reference_grid(p, nx, nt));
      },
      py::arg("problem"), py::arg("nx") = kDefaultGridX, py::arg("nt") = kDefaultGridT);

  m.def(
      "pinn_loss",
      [](const PdeProblem& p, const NetworkParams& params, std::uint64_t seed, double lambda) {
        const CollocationCounts c;
        const PinnObjective obj(p, sample_collocation(p, c.n_u, c.n_f, c.n_b, seed), lambda);
        const LossBreakdown b = obj.breakdown(params.flat());
        py::dict d;
        d["ic"] = b.ic_loss;
        d["bc"] = b.bc_loss;
        d["residual"] = b.residual_loss;
        d["total"] = b.total;
        return d;
      },
      py::arg("problem"), py::arg("params"), py::arg("seed") = 0, py::arg("lam") = 1.0);

  m.def(
      "condition_estimate",
      [](const PdeProblem& p, int n, double dt) { return condition_estimate(p, n, dt).value; },
      py::arg("problem"), py::arg("n"), py::arg("delta_t"));

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
        RunOutcome out;
        {
          py::gil_scoped_release release;
          out = run_experiment(cfg);
        }
        return py::make_tuple(out.exit_code, out.run_dir);
      },
      py::arg("config_json"));
}
