// ---------------------------------------------------------------------------
// Python bindings: the main operations of the library behind a small,
// numpy-friendly surface.
//
//   System            construct/normalize a delay system
//   lyapunov_matrix   build U with exact evaluation, K_r assembly, tests
//   fundamental_matrix dense K(t) on [0, t_end]
//   check             full criterion pipeline -> report dict
//   lyapunov_condition / rightmost_roots / oracle_verdict
//
// Matrices cross the boundary as numpy arrays (pybind11/eigen); library
// errors surface as the delaylyap.Error exception with the code in the
// message.
// ---------------------------------------------------------------------------

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <utility>
#include <vector>

#include "delaylyap/cli.hpp"
#include "delaylyap/criteria.hpp"
#include "delaylyap/error.hpp"
#include "delaylyap/fundamental.hpp"
#include "delaylyap/lyapunov.hpp"
#include "delaylyap/spectrum.hpp"
#include "delaylyap/system.hpp"

namespace py = pybind11;
using namespace delaylyap;

namespace {

py::dict report_dict(const StabilityReport& rep) {
    py::dict d;
    d["verdict"] = to_string(rep.verdict);
    d["criterion"] = to_string(rep.criterion);
    d["r_used"] = rep.r_used;
    d["min_eigenvalue"] = rep.min_eigenvalue;
    d["definiteness_tol"] = rep.definiteness_tol;
    d["sigma_min"] = rep.sigma_min;
    d["sigma_max"] = rep.sigma_max;
    d["wall_seconds"] = rep.wall_seconds;
    if (rep.constants) {
        const CriterionConstants& c = *rep.constants;
        py::dict k;
        k["M"] = c.M;
        k["M1"] = c.M1;
        k["nu"] = c.nu;
        k["L"] = c.L;
        k["rho"] = c.rho;
        k["a"] = c.a;
        k["b"] = c.b;
        k["beta_star"] = c.beta_star;
        k["alpha0_star"] = c.alpha0_star;
        k["alpha0_used"] = c.alpha0_used;
        k["r_thm7"] = c.r_thm7;
        k["r_thm8"] = c.r_thm8;
        d["constants"] = k;
    } else {
        d["constants"] = py::none();
    }
    return d;
}

CriterionOverrides overrides_from(const CriterionChoice& choice, std::optional<long> r,
                                  std::optional<double> a_bound,
                                  std::optional<double> alpha0_frac) {
    CriterionOverrides ov;
    ov.fixed_r = r ? r : choice.fixed_r;
    if (a_bound) ov.a_bound = a_bound;
    if (alpha0_frac) ov.alpha0_frac = *alpha0_frac;
    return ov;
}

} // namespace

PYBIND11_MODULE(delaylyap, m) {
    m.doc() = "exponential stability of linear time-delay systems via the delay Lyapunov matrix";

    py::register_exception<Error>(m, "Error");

    py::class_<TimeDelaySystem>(m, "System",
                                "Linear time-delay system x'(t) = sum_j A_j x(t - h_j) plus the "
                                "weight matrix W of the quadratic functional")
        .def(py::init([](const std::vector<std::pair<double, Matrix>>& terms,
                         std::optional<Matrix> W) {
                 std::vector<Term> ts;
                 ts.reserve(terms.size());
                 for (const auto& [delay, A] : terms) ts.push_back({delay, A});
                 return TimeDelaySystem::create(std::move(ts), W ? std::move(*W) : Matrix());
             }),
             py::arg("terms"), py::arg("W") = std::nullopt,
             "terms: [(delay, A), ...]; W defaults to the identity")
        .def_readonly("n", &TimeDelaySystem::n)
        .def_readonly("H", &TimeDelaySystem::H)
        .def_property_readonly("W", [](const TimeDelaySystem& s) { return s.W; })
        .def_property_readonly("terms",
                               [](const TimeDelaySystem& s) {
                                   std::vector<std::pair<double, Matrix>> out;
                                   out.reserve(s.terms.size());
                                   for (const auto& t : s.terms) out.emplace_back(t.delay, t.A);
                                   return out;
                               })
        .def("__repr__", [](const TimeDelaySystem& s) {
            return "System(n=" + std::to_string(s.n) +
                   ", terms=" + std::to_string(s.terms.size()) +
                   ", H=" + std::to_string(s.H) + ")";
        });

    py::class_<LyapunovMatrix>(m, "LyapunovMatrix",
                               "Delay Lyapunov matrix U with exact evaluation on [-H, H]")
        .def("at", &LyapunovMatrix::at, py::arg("tau"))
        .def("derivative_at", &LyapunovMatrix::derivative_at, py::arg("tau"))
        .def_property_readonly("horizon", &LyapunovMatrix::horizon)
        .def_property_readonly("basic_delay", &LyapunovMatrix::basic_delay)
        .def_property_readonly("segments", &LyapunovMatrix::segments)
        .def_property_readonly("dim", &LyapunovMatrix::dim)
        .def_property_readonly("boundary_sigma_min", &LyapunovMatrix::boundary_sigma_min)
        .def_property_readonly("boundary_sigma_max", &LyapunovMatrix::boundary_sigma_max)
        .def("kr", &assemble_Kr, py::arg("r"),
             "equidistant block matrix K_r (symmetrized), r >= 1")
        .def(
            "necessary_test",
            [](const LyapunovMatrix& u, const std::vector<double>& taus) {
                const Definiteness d = necessary_test(u, taus);
                py::dict out;
                out["classification"] = to_string(d.classification);
                out["min_eigenvalue"] = d.min_eigenvalue;
                out["tolerance"] = d.tolerance;
                return out;
            },
            py::arg("taus"),
            "definiteness of [U(tau_j - tau_i)] over strictly increasing points of [0, H]")
        .def("rough_test", &rough_test, py::arg("grid") = 512,
             "true iff max ||U(tau)|| < ||U(0)|| over a grid of (0, H]")
        .def(
            "properties",
            [](const LyapunovMatrix& u, int grid_points) {
                const PropertyReport p = check_properties(u, grid_points);
                py::dict out;
                out["dynamic"] = p.dynamic;
                out["symmetry"] = p.symmetry;
                out["algebraic"] = p.algebraic;
                out["continuity"] = p.continuity;
                out["grid_points"] = p.grid_points;
                return out;
            },
            py::arg("grid_points") = 512, "max-norm residuals of the four defining properties");

    py::class_<FundamentalMatrix>(m, "FundamentalMatrix",
                                  "Fundamental matrix K with dense output on [0, t_end]")
        .def("at", &FundamentalMatrix::at, py::arg("t"))
        .def("derivative_at", &FundamentalMatrix::derivative_at, py::arg("t"))
        .def_property_readonly("step", &FundamentalMatrix::step)
        .def_property_readonly("t_end", &FundamentalMatrix::t_end)
        .def_property_readonly("dim", &FundamentalMatrix::dim)
        .def("pr", &build_Pr, py::arg("r"),
             "block row (I, K(d), ..., K((r-1)d)) with d = H/(r-1)");

    m.def("lyapunov_matrix", &build_lyapunov_matrix, py::arg("system"),
          py::arg("rel_tol") = 1e-9, "construct U for a commensurate system");
    m.def("fundamental_matrix", &build_fundamental, py::arg("system"), py::arg("t_end"),
          py::arg("step") = -1.0, "integrate K by steps out to t_end");
    m.def(
        "lyapunov_condition",
        [](const TimeDelaySystem& sys, double rel_tol) {
            const LyapunovCondition c = check_lyapunov_condition(sys, rel_tol);
            py::dict out;
            out["holds"] = c.holds;
            out["sigma_min"] = c.sigma_min;
            out["sigma_max"] = c.sigma_max;
            return out;
        },
        py::arg("system"), py::arg("rel_tol") = 1e-9,
        "unique solvability of the boundary system (no Lyapunov matrix when false)");

    m.def(
        "check",
        [](const TimeDelaySystem& sys, const std::string& criterion, std::optional<long> r,
           std::optional<double> a_bound, std::optional<double> alpha0_frac) {
            const CriterionChoice choice = parse_criterion(criterion);
            return report_dict(
                finite_criterion(sys, choice.kind, overrides_from(choice, r, a_bound, alpha0_frac)));
        },
        py::arg("system"), py::arg("criterion") = "thm8", py::arg("r") = std::nullopt,
        py::arg("a_bound") = std::nullopt, py::arg("alpha0_frac") = std::nullopt,
        "run a stability criterion ('necessary[:R]', 'thm7' or 'thm8') and report the verdict");

    m.def(
        "rightmost_roots",
        [](const TimeDelaySystem& sys, long n_start, long count) {
            const SpectrumEstimate est = rightmost_roots(sys, n_start, count);
            py::dict out;
            out["roots"] = est.roots;
            out["collocation_size"] = est.collocation_size;
            out["converged"] = est.converged;
            out["residual"] = est.residual;
            return out;
        },
        py::arg("system"), py::arg("n_start") = 64, py::arg("count") = 8,
        "rightmost characteristic roots (collocation seeds + Newton polish)");
    m.def(
        "oracle_verdict",
        [](const TimeDelaySystem& sys) { return std::string(to_string(oracle_verdict(sys))); },
        py::arg("system"), "'STABLE' / 'UNSTABLE' / 'UNDECIDED' from the root estimate");
}
