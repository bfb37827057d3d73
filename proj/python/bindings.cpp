#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "formflow/charpit.hpp"
#include "formflow/cli.hpp"
#include "formflow/evolution.hpp"
#include "formflow/hamilton.hpp"
#include "formflow/maxwell.hpp"

namespace py = pybind11;
using namespace formflow;

namespace {

std::array<Expression, 3> triple(const std::vector<Expression>& v, const char* what) {
    if (v.size() != 3) throw InvalidArgument(std::string(what) + " needs 3 components");
    return {v[0], v[1], v[2]};
}

template <class Fn>
std::string to_csv(Fn&& write) {
    std::ostringstream out;
    write(out);
    return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exterior calculus, characteristics and Hamiltonian flows over symbolic expressions.";
    m.attr("__version__") = kVersion;

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<SpecError>(m, "SpecError", error.ptr());
    py::register_exception<SingularEvaluation>(m, "SingularEvaluation", error.ptr());
    py::register_exception<UnboundVariableError>(m, "UnboundVariableError", error.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<StationaryCharacteristic>(m, "StationaryCharacteristic", error.ptr());

    // expressions
    py::class_<Expression>(m, "Expression")
        .def(py::init([](const std::string& text) { return parse(text); }), py::arg("text"))
        .def(py::init(&Expression::constant), py::arg("value"))
        .def_static("variable", &Expression::variable)
        .def("evaluate", [](const Expression& e, const std::map<std::string, double>& point) {
            return e.evaluate(Point(point.begin(), point.end()));
        })
        .def("differentiate", [](const Expression& e, const std::string& v) { return differentiate(e, v); })
        .def("substitute",
             [](const Expression& e, const std::map<std::string, Expression>& r) {
                 return e.substitute({r.begin(), r.end()});
             })
        .def_property_readonly("free_variables", &Expression::free_variables)
        .def_property_readonly("is_constant", &Expression::is_constant)
        .def_property_readonly("value", [](const Expression& e) -> py::object {
            return e.is_constant() ? py::float_(e.value()) : py::object(py::none());
        })
        .def("identical", [](const Expression& a, const Expression& b) { return identical(a, b); })
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def(py::self * py::self)
        .def(py::self / py::self)
        .def(-py::self)
        .def("__pow__", [](const Expression& a, const Expression& b) { return pow(a, b); })
        .def("__str__", &Expression::to_string)
        .def("__repr__", [](const Expression& e) { return "Expression('" + e.to_string() + "')"; });
    py::implicitly_convertible<std::string, Expression>();
    py::implicitly_convertible<double, Expression>();
    py::implicitly_convertible<int, Expression>();

    m.def("parse", &parse, py::arg("text"));
    m.def("differentiate", [](const Expression& e, const std::string& v) { return differentiate(e, v); });
    for (const auto& [name, fn] : std::vector<std::pair<const char*, Expression (*)(const Expression&)>>{
             {"sin", &formflow::sin}, {"cos", &formflow::cos}, {"exp", &formflow::exp},
             {"ln", &formflow::ln}, {"sqrt", &formflow::sqrt}}) {
        m.def(name, fn);
    }

    // forms
    py::class_<Chart>(m, "Chart")
        .def(py::init<std::vector<std::string>, std::vector<int>>(), py::arg("names"),
             py::arg("signature") = std::vector<int>{})
        .def_static("minkowski", &Chart::minkowski)
        .def_property_readonly("names", &Chart::names)
        .def_property_readonly("signature", &Chart::signature)
        .def_property_readonly("dimension", &Chart::dimension)
        .def("__eq__", [](const Chart& a, const Chart& b) { return a == b; });

    py::class_<DifferentialForm>(m, "Form")
        .def(py::init<Chart, std::size_t, std::vector<Expression>>(), py::arg("chart"), py::arg("degree"),
             py::arg("coefficients"))
        .def_property_readonly("chart", &DifferentialForm::chart)
        .def_property_readonly("degree", &DifferentialForm::degree)
        .def_property_readonly("coefficients", &DifferentialForm::coefficients)
        .def_property_readonly("basis", &DifferentialForm::basis)
        .def("coefficient", &DifferentialForm::coefficient)
        .def("evaluate", [](const DifferentialForm& f, const std::vector<double>& at) {
            return evaluate_coefficients(f, at);
        })
        .def("__xor__", [](const DifferentialForm& a, const DifferentialForm& b) { return wedge(a, b); });

    m.def("basis_indices", &basis_indices);
    m.def("scalar_form", &scalar_form);
    m.def("one_form", &one_form);
    m.def("basis_form", &basis_form);
    m.def("wedge", &wedge);
    m.def("d", &exterior_derivative);
    m.def("exterior_derivative", &exterior_derivative);
    m.def("hodge_star", [](const DifferentialForm& f) { return hodge_star(f); });

    py::class_<CommutatorTensor>(m, "CommutatorTensor")
        .def("at", &CommutatorTensor::at)
        .def("evaluate", [](const CommutatorTensor& k, const std::vector<double>& at) { return k.evaluate(at); })
        .def("max_abs", [](const CommutatorTensor& k, const std::vector<double>& at) { return k.max_abs(at); })
        .def_property_readonly("is_symbolically_zero", &CommutatorTensor::is_symbolically_zero);
    m.def("commutator", &commutator);

    py::class_<SkippedSample>(m, "SkippedSample")
        .def_readonly("index", &SkippedSample::index)
        .def_readonly("reason", &SkippedSample::reason);
    py::class_<ClosureReport>(m, "ClosureReport")
        .def_readonly("closed", &ClosureReport::closed)
        .def_readonly("max_residual", &ClosureReport::max_residual)
        .def_readonly("worst_point", &ClosureReport::worst_point)
        .def_readonly("worst_component", &ClosureReport::worst_component)
        .def_readonly("skipped", &ClosureReport::skipped);
    m.def("is_closed", &is_closed, py::arg("form"), py::arg("samples"), py::arg("tol") = 1e-10);

    // characteristics
    py::class_<JetPoint>(m, "JetPoint")
        .def(py::init<std::vector<double>, double, std::vector<double>>(), py::arg("x"), py::arg("u"), py::arg("p"))
        .def_readwrite("x", &JetPoint::x)
        .def_readwrite("u", &JetPoint::u)
        .def_readwrite("p", &JetPoint::p);
    py::class_<FirstOrderPDE>(m, "FirstOrderPDE")
        .def(py::init<Chart, Expression, std::string, std::vector<std::string>>(), py::arg("chart"), py::arg("F"),
             py::arg("u_name") = "u", py::arg("p_names") = std::vector<std::string>{})
        .def_property_readonly("F", &FirstOrderPDE::F)
        .def_property_readonly("jet_names", &FirstOrderPDE::jet_names)
        .def("value", &FirstOrderPDE::value);
    py::class_<CharacteristicDirection>(m, "CharacteristicDirection")
        .def_readonly("dx", &CharacteristicDirection::dx)
        .def_readonly("du", &CharacteristicDirection::du)
        .def_readonly("dp", &CharacteristicDirection::dp);
    py::class_<StripDiagnostics>(m, "StripDiagnostics")
        .def_readonly("max_abs_F", &StripDiagnostics::max_abs_F)
        .def_readonly("max_strip_residual", &StripDiagnostics::max_strip_residual);
    py::class_<CharacteristicStrip>(m, "CharacteristicStrip")
        .def_readonly("ds", &CharacteristicStrip::ds)
        .def_readonly("samples", &CharacteristicStrip::samples)
        .def_readonly("diagnostics", &CharacteristicStrip::diagnostics);
    py::class_<SolutionCertificate>(m, "SolutionCertificate")
        .def_readonly("generalized_solution", &SolutionCertificate::generalized_solution)
        .def_readonly("max_abs_F", &SolutionCertificate::max_abs_F)
        .def_readonly("max_strip_residual", &SolutionCertificate::max_strip_residual);
    m.def("nonidentity_residual", &nonidentity_residual);
    m.def("characteristic_direction", &characteristic_direction);
    m.def("degenerate_condition",
          [](const FirstOrderPDE& pde, const JetPoint& jp, const std::vector<double>& dx,
             const std::vector<double>& dp) { return degenerate_condition(pde, jp, dx, dp); });
    m.def("integrate_strip", &integrate_strip, py::arg("pde"), py::arg("start"), py::arg("ds"), py::arg("steps"));
    m.def("generalized_solution_certificate", &generalized_solution_certificate);
    m.def("strip_csv", [](const FirstOrderPDE& pde, const CharacteristicStrip& s) {
        return to_csv([&](std::ostream& o) { write_strip_csv(o, pde, s); });
    });

    // hamiltonian dynamics
    py::class_<HamiltonianSystem>(m, "HamiltonianSystem")
        .def(py::init<Expression, std::vector<std::string>, std::vector<std::string>, std::string>(), py::arg("H"),
             py::arg("q_names"), py::arg("p_names"), py::arg("t_name") = "t")
        .def_static("with_default_names", &HamiltonianSystem::with_default_names)
        .def_property_readonly("is_autonomous", &HamiltonianSystem::is_autonomous)
        .def("energy", [](const HamiltonianSystem& s, double t, const std::vector<double>& q,
                          const std::vector<double>& p) { return s.energy(t, q, p); });
    py::class_<PhaseState>(m, "PhaseState")
        .def_readonly("t", &PhaseState::t)
        .def_readonly("q", &PhaseState::q)
        .def_readonly("p", &PhaseState::p);
    py::class_<PhaseTrajectory>(m, "PhaseTrajectory")
        .def_readonly("dt", &PhaseTrajectory::dt)
        .def_readonly("samples", &PhaseTrajectory::samples)
        .def_readonly("action", &PhaseTrajectory::action);
    py::class_<PoincareReport>(m, "PoincareReport")
        .def_readonly("max_residual", &PoincareReport::max_residual)
        .def_readonly("worst_step", &PoincareReport::worst_step);
    py::class_<HamiltonJacobiReport>(m, "HamiltonJacobiReport")
        .def_readonly("max_residual", &HamiltonJacobiReport::max_residual)
        .def_readonly("worst_sample", &HamiltonJacobiReport::worst_sample);
    m.def("integrate_hamilton",
          [](const HamiltonianSystem& s, const std::vector<double>& q0, const std::vector<double>& p0, double t0,
             double dt, int steps) { return integrate_hamilton(s, q0, p0, t0, dt, steps); },
          py::arg("system"), py::arg("q0"), py::arg("p0"), py::arg("t0"), py::arg("dt"), py::arg("steps"));
    m.def("poincare_residual", &poincare_residual);
    m.def("energy_drift", &energy_drift);
    m.def("hamilton_jacobi_residual", &hamilton_jacobi_residual);
    m.def("trajectory_csv", [](const HamiltonianSystem& s, const PhaseTrajectory& t) {
        return to_csv([&](std::ostream& o) { write_trajectory_csv(o, s, t); });
    });

    // maxwell
    py::class_<ClosureResiduals>(m, "ClosureResiduals")
        .def_readonly("closed", &ClosureResiduals::closed)
        .def_readonly("dual", &ClosureResiduals::dual)
        .def_readonly("worst_closed_node", &ClosureResiduals::worst_closed_node)
        .def_readonly("worst_dual_node", &ClosureResiduals::worst_dual_node)
        .def_readonly("nodes_checked", &ClosureResiduals::nodes_checked);
    m.def(
        "maxwell_residuals",
        [](const std::vector<Expression>& E, const std::vector<Expression>& B, std::array<double, 4> extent,
           std::array<std::size_t, 4> counts, std::array<double, 4> origin) {
            const SpacetimeGrid grid = SpacetimeGrid::periodic(origin, extent, counts);
            return closure_residuals(sample_fields(grid, triple(E, "E"), triple(B, "B")));
        },
        py::arg("E"), py::arg("B"), py::arg("extent"), py::arg("counts"),
        py::arg("origin") = std::array<double, 4>{0, 0, 0, 0});
    m.def("maxwell_residuals_csv", [](const std::filesystem::path& path) {
        return closure_residuals(read_field_csv(path));
    });

    // evolution
    py::class_<EvolutionaryRelation>(m, "EvolutionaryRelation")
        .def_property_readonly("degree", &EvolutionaryRelation::degree)
        .def_property_readonly("omega", &EvolutionaryRelation::omega);
    py::class_<NonidentityReport>(m, "NonidentityReport")
        .def_readonly("measure", &NonidentityReport::measure)
        .def_readonly("worst_point", &NonidentityReport::worst_point);
    py::class_<LocusPoint>(m, "LocusPoint")
        .def_readonly("coords", &LocusPoint::coords)
        .def_readonly("abs_value", &LocusPoint::abs_value);
    py::class_<Pseudostructure>(m, "Pseudostructure")
        .def(py::init([](std::vector<std::string> params, std::vector<std::pair<double, double>> box,
                         std::vector<Expression> map, std::optional<Expression> det) {
                 return Pseudostructure{std::move(params), std::move(box), std::move(map), std::move(det)};
             }),
             py::arg("parameters"), py::arg("box"), py::arg("map"), py::arg("determinant") = py::none());
    py::class_<Restriction>(m, "Restriction")
        .def_readonly("pullback", &Restriction::pullback)
        .def_readonly("closed", &Restriction::closed)
        .def_readonly("coefficients", &Restriction::coefficients);
    py::class_<StateFunction>(m, "StateFunction")
        .def_readonly("tau", &StateFunction::tau)
        .def_readonly("psi", &StateFunction::psi)
        .def_readonly("error_estimate", &StateFunction::error_estimate);

    m.def(
        "build_relation",
        [](const Chart& chart, std::vector<Expression> A, int p, const std::vector<std::string>& provenance) {
            std::vector<CoefficientSource> tags;
            for (const auto& s : provenance) tags.push_back(coefficient_source_from_string(s));
            return build_relation(chart, std::move(A), p, std::move(tags));
        },
        py::arg("chart"), py::arg("A"), py::arg("degree"), py::arg("provenance") = std::vector<std::string>{});
    m.def("nonidentity_measure", &nonidentity_measure);
    m.def("detect_degenerate_loci", &detect_degenerate_loci, py::arg("D"), py::arg("chart"), py::arg("lower"),
          py::arg("upper"), py::arg("resolution") = 64, py::arg("tol") = 1e-6);
    m.def("restrict_to_pseudostructure", &restrict_to_pseudostructure);
    m.def("extract_state_function", &extract_state_function, py::arg("restricted"), py::arg("tau0"),
          py::arg("psi0"), py::arg("tau1"), py::arg("intervals") = 64);
    m.def("path_integral", &path_integral, py::arg("relation"), py::arg("vertices"), py::arg("intervals") = 64);
    m.def("classify_interaction", [](int degree) { return std::string(to_string(classify_interaction(degree))); });

    // problem specs
    m.def(
        "analyze",
        [](const std::filesystem::path& spec) {
            const AnalysisReport r = run(load_spec(spec));
            return py::make_tuple(render(r), r.exit_status());
        },
        py::arg("spec"), "Run a JSON problem spec; returns (report text, exit status).");
    m.def(
        "analyze_text",
        [](const std::string& text) {
            const AnalysisReport r = run(parse_spec(text));
            return py::make_tuple(render(r), r.exit_status());
        },
        py::arg("json"));
}
