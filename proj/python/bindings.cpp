#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ksnh/cli.hpp"
#include "ksnh/dynamics.hpp"
#include "ksnh/geometry.hpp"
#include "ksnh/hamiltonian.hpp"
#include "ksnh/ksla.hpp"
#include "ksnh/momentum.hpp"
#include "ksnh/projector.hpp"

namespace py = pybind11;
using namespace ksnh;

namespace {

FieldPoint point(const Model& m, const Vec& q, const Vec& v) {
    if (q.size() != m.n() || v.size() != m.n() * m.k())
        throw SchemaError("expected q of length " + std::to_string(m.n()) + " and v of length " +
                          std::to_string(m.n() * m.k()));
    return {q, v};
}

// [step][node][width] flattened storage as a (steps, nodes, width) array
py::array_t<double> cube(const std::vector<double>& data, int steps, int nodes, int width) {
    py::array_t<double> out({steps, nodes, width});
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

py::dict solution_dict(const FieldSolution& sol) {
    const int T = sol.steps(), M = sol.nodes();
    py::dict d;
    d["t"] = sol.t;
    d["s"] = sol.s;
    d["q"] = cube(sol.q, T, M, sol.n);
    d["v"] = cube(sol.v, T, M, sol.n * sol.k);
    d["accel"] = cube(sol.accel, T, M, sol.n);
    d["lambda"] = cube(sol.lambda, T, M, sol.m * sol.k);
    d["energy"] = cube(sol.energy, T, M, 1);
    d["phi"] = cube(sol.phi, T, M, 1);
    d["complete"] = sol.complete;
    d["status"] = sol.status;
    d["csv"] = solution_csv(sol);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Nonholonomic first-order field theories in k-symplectic form";

    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::register_exception<SyntaxError>(m, "ExpressionSyntaxError", PyExc_ValueError);
    py::register_exception<BindError>(m, "BindError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<Model>(m, "Model")
        .def_static("load", &load_model, py::arg("path"))
        .def_static("builtin", &builtin, py::arg("name"))
        .def_static("resolve", &resolve_model, py::arg("path_or_name"))
        .def_static("from_json", [](const std::string& text) { return model_from_json(nlohmann::json::parse(text)); })
        .def_property_readonly("name", &Model::name)
        .def_property_readonly("n", &Model::n)
        .def_property_readonly("k", &Model::k)
        .def_property_readonly("m", &Model::m)
        .def_property_readonly("dim", &Model::dim)
        .def("to_json", [](const Model& self) { return model_to_json(self.spec()).dump(2); })
        .def("__repr__", [](const Model& self) {
            std::ostringstream s;
            s << "<Model " << self.name() << " n=" << self.n() << " k=" << self.k() << " m=" << self.m() << ">";
            return s.str();
        });
    m.def("builtin_names", &builtin_names);

    m.def(
        "lagrangian",
        [](const Model& md, const Vec& q, const Vec& v) {
            const Vec x = point(md, q, v).pack();
            return md.lagrangian()(x.data());
        },
        py::arg("model"), py::arg("q"), py::arg("v"));

    m.def(
        "regularity",
        [](const Model& md, const Vec& q, const Vec& v) {
            const RegularityReport r = regularity(md, point(md, q, v));
            py::dict d;
            d["regular"] = r.regular;
            d["condition"] = r.condition;
            d["nullity"] = r.nullity;
            d["degenerate"] = r.degenerate;
            return d;
        },
        py::arg("model"), py::arg("q"), py::arg("v"));

    m.def(
        "constraint_forms",
        [](const Model& md, const Vec& q, const Vec& v) {
            const ConstraintForms f = constraint_forms(md, point(md, q, v));
            return py::make_tuple(f.phi, f.eta);
        },
        py::arg("model"), py::arg("q"), py::arg("v"), "(Phi, eta) with eta[alpha, A*n + i]");

    m.def(
        "constrained_accelerations",
        [](const Model& md, const Vec& q, const Vec& v) {
            const ConstrainedSolution s = constrained_sopde_multiplier(md, point(md, q, v));
            return py::make_tuple(s.xi.accel, s.lambda);
        },
        py::arg("model"), py::arg("q"), py::arg("v"));

    m.def(
        "project",
        [](const Model& md, const Vec& q, const Vec& v, double tol_compat) {
            const ProjectedSolution p = project_free_solution(md, point(md, q, v), tol_compat);
            py::dict d;
            d["free"] = p.free.accel;
            d["projected"] = p.projected.accel;
            d["lambda"] = p.lambda;
            d["off_span"] = p.off_span;
            d["tangency"] = p.tangency;
            return d;
        },
        py::arg("model"), py::arg("q"), py::arg("v"), py::arg("tol_compat") = 1e-10);

    m.def(
        "projectors",
        [](const Model& md, const Vec& q, const Vec& v) {
            const ProjectorPair pp = projectors(md, point(md, q, v));
            return py::make_tuple(pp.P, pp.Q);
        },
        py::arg("model"), py::arg("q"), py::arg("v"));

    m.def(
        "simulate",
        [](const Model& md, const std::string& config) {
            const SimConfig c = sim_config_from_json(nlohmann::json::parse(config));
            FieldSolution sol;
            {
                py::gil_scoped_release release;
                sol = simulate(md, c);
            }
            return solution_dict(sol);
        },
        py::arg("model"), py::arg("config_json"));

    m.def(
        "momentum",
        [](const Model& md, const Vec& q, const Vec& v, const std::string& section) {
            return momentum_components(md, point(md, q, v), require_section(md, section));
        },
        py::arg("model"), py::arg("q"), py::arg("v"), py::arg("section"));

    m.def(
        "legendre",
        [](const Model& md, const Vec& q, const Vec& v) { return legendre(md, point(md, q, v)).p; },
        py::arg("model"), py::arg("q"), py::arg("v"));
    m.def(
        "legendre_inverse",
        [](const Model& md, const Vec& q, const Vec& p) { return legendre_inverse(md, {q, p}).v; },
        py::arg("model"), py::arg("q"), py::arg("p"));
    m.def(
        "hamiltonian",
        [](const Model& md, const Vec& q, const Vec& p) { return hamiltonian_value(md, {q, p}).energy; },
        py::arg("model"), py::arg("q"), py::arg("p"));

    m.def(
        "classify",
        [](const std::vector<Mat>& forms, const Mat& V, const Mat& W) {
            KSymplecticSpace sp;
            sp.dim = static_cast<int>(V.rows());
            sp.forms = forms;
            sp.V = V;
            const Subspace S = span_of(W);
            const Classification c = classify(sp, S);
            py::dict d;
            d["dim"] = c.dim_w;
            d["perp_dim"] = c.dim_perp;
            d["perp_basis"] = orthogonal(sp, S).basis;
            d["isotropic"] = c.isotropic;
            d["coisotropic"] = c.coisotropic;
            d["lagrangian"] = c.lagrangian;
            d["k_symplectic"] = c.ksymplectic;
            return d;
        },
        py::arg("forms"), py::arg("V"), py::arg("W"), "V and W hold basis vectors as columns");

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "ksnh");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in process; returns (exit code, stdout, stderr).");
}
