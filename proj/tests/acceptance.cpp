// Acceptance suite: one PASS/FAIL line per criterion.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "formflow/charpit.hpp"
#include "formflow/evolution.hpp"
#include "formflow/hamilton.hpp"
#include "formflow/maxwell.hpp"
#include "support.hpp"

using namespace testing;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (!passed) detail << "; ";
            else detail.str("");
            passed = false;
            detail << what;
        }
    }
};

std::string num_str(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

// 1. d d = 0, graded antisymmetry of wedge, Leibniz rule.
void exterior_identities(Verdict& v) {
    Sampler rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(3);
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
        const Chart chart(names);
        const std::size_t ka = rng.index(n + 1), kb = rng.index(n + 1);
        const DifferentialForm a = random_form(rng, chart, ka, 4);
        const DifferentialForm b = random_form(rng, chart, kb, 4);
        const DifferentialForm dda = exterior_derivative(exterior_derivative(a));
        const DifferentialForm ab = wedge(a, b), ba = wedge(b, a);
        const DifferentialForm lhs = exterior_derivative(ab);
        const DifferentialForm r1 = wedge(exterior_derivative(a), b);
        const DifferentialForm r2 = wedge(a, exterior_derivative(b));
        const double graded = (ka * kb) % 2 ? -1.0 : 1.0;
        const double sign = ka % 2 ? -1.0 : 1.0;
        for (int s = 0; s < 20; ++s) {
            std::vector<double> at(n);
            for (auto& x : at) x = rng.uniform(-1, 1);
            worst = std::max({worst, max_abs_coefficient(dda, at), max_difference(ab, ba, at, graded)});
            const auto l = evaluate_coefficients(lhs, at);
            const auto c1 = evaluate_coefficients(r1, at);
            const auto c2 = evaluate_coefficients(r2, at);
            for (std::size_t i = 0; i < l.size(); ++i) worst = std::max(worst, std::abs(l[i] - c1[i] - sign * c2[i]));
        }
    }
    v.require(worst <= 1e-10, "max residual " + num_str(worst));
    if (v.passed) v.detail << "100 form pairs, max residual " << num_str(worst);
}

// 2. commutator of d f vanishes; K_12 of the rotation form is exactly 2.
void commutator_oracle(Verdict& v) {
    Sampler rng(1002);
    const Chart chart({"x", "y", "z"});
    const std::vector<std::string> vars{"x", "y", "z"};
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const CommutatorTensor K = commutator(exterior_derivative(scalar_form(chart, random_expression(rng, vars, 4))));
        for (int s = 0; s < 10; ++s) {
            worst = std::max(worst, K.max_abs(std::vector<double>{rng.uniform(-1, 1), rng.uniform(-1, 1),
                                                                  rng.uniform(-1, 1)}));
        }
    }
    v.require(worst <= 1e-12, "max |K(df)| " + num_str(worst));
    const Chart xy({"x", "y"});
    const Expression k12 = commutator(one_form(xy, {-var("y"), var("x")})).at(0, 1);
    v.require(k12.is_constant() && k12.value() == 2.0, "K_12 of -y dx + x dy is " + k12.to_string());
    if (v.passed) v.detail << "50 fields, max |K(df)| " << num_str(worst) << ", K_12 = " << k12.to_string();
}

// 3. F and the strip condition are conserved; transport endpoint.
void charpit_conservation(Verdict& v) {
    const Chart xy({"x", "y"});
    struct Case {
        FirstOrderPDE pde;
        JetPoint start;
    };
    const std::vector<Case> cases{
        {FirstOrderPDE(xy, parse("p1 + 2*p2")), {{0.25, -0.5}, 0.5, {2, -1}}},
        {FirstOrderPDE(xy, parse("p1^2 + p2^2 - 1")), {{0, 0}, 0, {0.6, 0.8}}},
        {FirstOrderPDE(Chart({"x"}), parse("p1 - u")), {{0}, 1, {1}}},
    };
    double worst_F = 0.0, worst_strip = 0.0;
    for (const auto& c : cases) {
        const CharacteristicStrip s = integrate_strip(c.pde, c.start, 1e-3, 100);
        worst_F = std::max(worst_F, s.diagnostics.max_abs_F);
        worst_strip = std::max(worst_strip, s.diagnostics.max_strip_residual);
    }
    v.require(worst_F <= 1e-8, "max |F| " + num_str(worst_F));
    v.require(worst_strip <= 1e-10, "strip residual " + num_str(worst_strip));
    const JetPoint end = integrate_strip(cases[0].pde, cases[0].start, 1e-3, 100).samples.back();
    const double shift = std::max(std::abs(end.x[0] - (0.25 + 0.1)), std::abs(end.x[1] - (-0.5 + 0.2)));
    v.require(shift <= 1e-10, "transport endpoint off by " + num_str(shift));
    if (v.passed) {
        v.detail << "max |F| " << num_str(worst_F) << ", strip residual " << num_str(worst_strip)
                 << ", endpoint error " << num_str(shift);
    }
}

// 4. degenerate condition along the characteristic direction.
void degenerate_direction(Verdict& v) {
    Sampler rng(1004);
    const Chart xy({"x", "y"});
    const std::vector<std::string> jet{"x", "y", "u", "p1", "p2"};
    double worst = 0.0;
    std::size_t points = 0;
    for (int k = 0; k < 20; ++k) {
        const FirstOrderPDE pde(xy, random_polynomial(rng, jet, 3, 5) + var("p1") * var("p1") + var("p2"));
        for (int s = 0; s < 100; ++s) {
            const JetPoint jp{{rng.uniform(-1, 1), rng.uniform(-1, 1)}, rng.uniform(-1, 1),
                              {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
            try {
                const auto d = characteristic_direction(pde, jp);
                worst = std::max(worst, std::abs(degenerate_condition(pde, jp, d.dx, d.dp)));
                ++points;
            } catch (const StationaryCharacteristic&) {
            }
        }
    }
    v.require(points >= 1900, std::to_string(points) + " usable jet points");
    v.require(worst <= 1e-12, "max residual " + num_str(worst));
    if (v.passed) v.detail << points << " jet points, max residual " << num_str(worst);
}

// 5. oscillator period, energy, action, Hamilton-Jacobi.
void hamiltonian_block(Verdict& v) {
    const HamiltonianSystem osc(parse("(p^2 + q^2)/2"), {"q"}, {"p"});
    const std::vector<double> one{1}, zero{0};
    const int steps = static_cast<int>(std::lround(2 * std::numbers::pi / 1e-3));
    const double dt = 2 * std::numbers::pi / steps;
    const PhaseTrajectory period = integrate_hamilton(osc, one, zero, 0.0, dt, steps);
    const PhaseState& end = period.samples.back();
    const double closure = std::max(std::abs(end.q[0] - 1), std::abs(end.p[0]));
    v.require(closure <= 1e-6, "period closure " + num_str(closure));
    const double action = std::abs(period.action.back());
    v.require(action <= 1e-6, "period action " + num_str(action));

    const PhaseTrajectory long_run = integrate_hamilton(osc, one, zero, 0.0, 1e-3, 10000);
    const double drift = energy_drift(osc, long_run);
    v.require(drift <= 1e-6, "energy drift " + num_str(drift));

    Sampler rng(1005);
    const auto samples = rng.box(std::vector<double>{0.5, -2}, std::vector<double>{3, 2}, 200);
    const HamiltonianSystem free(parse("p^2/2"), {"q"}, {"p"});
    const double hj = hamilton_jacobi_residual(free, parse("q^2/(2*t)"), samples).max_residual;
    v.require(hj <= 1e-10, "Hamilton-Jacobi residual " + num_str(hj));
    if (v.passed) {
        v.detail << "closure " << num_str(closure) << ", drift " << num_str(drift) << ", action "
                 << num_str(action) << ", HJ " << num_str(hj);
    }
}

// 6. plane wave second-order convergence, constants, divergence counterexample.
void maxwell_convergence(Verdict& v) {
    using F3 = std::array<Expression, 3>;
    const Expression wave = parse("cos(2*3.141592653589793*(x - t))");
    const F3 E{num(0), wave, num(0)}, B{num(0), num(0), wave};
    const auto grid = [](std::size_t n) {
        return SpacetimeGrid::periodic({0, 0, 0, 0}, {0.5, 1, 1, 1}, {n, n, n, n});
    };
    const ClosureResiduals coarse = closure_residuals(sample_fields(grid(16), E, B));
    const ClosureResiduals fine = closure_residuals(sample_fields(grid(32), E, B));
    const double rc = coarse.closed / fine.closed, rd = coarse.dual / fine.dual;
    v.require(std::abs(rc - 4) <= 0.8, "closed ratio " + num_str(rc));
    v.require(std::abs(rd - 4) <= 0.8, "dual ratio " + num_str(rd));

    const ClosureResiduals flat =
        closure_residuals(sample_fields(grid(8), {num(1), num(-2), num(0.5)}, {num(0.25), num(3), num(-7)}));
    v.require(flat.closed == 0.0 && flat.dual == 0.0, "constant field residual nonzero");

    const SpacetimeGrid g = SpacetimeGrid::periodic({0, 0, 0, 0}, {1, 1, 1, 1}, {8, 8, 8, 8});
    const PhysicalStructureReport counter =
        certify_physical_structure(sample_fields(g, {var("x"), var("y"), var("z")}, {num(0), num(0), num(0)}), 1e-8);
    v.require(!counter.physical, "uniform divergence accepted");
    if (v.passed) {
        v.detail << "ratios " << num_str(rc) << " / " << num_str(rd) << ", constants 0, counterexample dual "
                 << num_str(counter.residuals.dual);
    }
}

// 7. rotation form: nonidentical, pullback dtau, psi = tau, path independence.
void evolution_bridge(Verdict& v) {
    const Chart xy({"x", "y"});
    Sampler rng(1007);
    const auto samples = rng.box(std::vector<double>{-1, -1}, std::vector<double>{1, 1}, 100);
    const EvolutionaryRelation rot = build_relation(xy, {-var("y"), var("x")}, 1);
    const double measure = nonidentity_measure(rot, samples).measure;
    v.require(measure == 2.0, "measure " + num_str(measure));

    const Pseudostructure circle{{"tau"}, {{0, 2 * std::numbers::pi}}, {parse("cos(tau)"), parse("sin(tau)")},
                                 std::nullopt};
    const Restriction r = restrict_to_pseudostructure(rot, circle);
    double coeff = 0.0;
    for (int k = 0; k <= 32; ++k) {
        coeff = std::max(coeff, std::abs(r.coefficients[0].evaluate({{"tau", 2 * std::numbers::pi * k / 32}}) - 1));
    }
    v.require(r.closed && coeff <= 1e-15, "pullback differs from dtau by " + num_str(coeff));
    const StateFunction psi = extract_state_function(r.pullback, 0, 0, 2 * std::numbers::pi, 64);
    double psi_err = 0.0;
    for (std::size_t i = 0; i < psi.tau.size(); ++i) psi_err = std::max(psi_err, std::abs(psi.psi[i] - psi.tau[i]));
    v.require(psi_err <= 1e-10, "psi error " + num_str(psi_err));

    const EvolutionaryRelation exact = build_relation(xy, {parse("2*x*y + cos(x)"), parse("x^2 - 3*y^2")}, 1);
    const std::vector<double> a{-1, -0.5}, b{0.75, 1};
    const double lower = path_integral(exact, {a, {b[0], a[1]}, b}, 64);
    const double upper = path_integral(exact, {a, {a[0], b[1]}, b}, 64);
    v.require(std::abs(lower - upper) <= 1e-8, "path difference " + num_str(std::abs(lower - upper)));
    if (v.passed) {
        v.detail << "measure 2, psi error " << num_str(psi_err) << ", path difference "
                 << num_str(std::abs(lower - upper));
    }
}

// 8. loci of x^2 + y^2 - 1.
void locus_detection(Verdict& v) {
    const Chart xy({"x", "y"});
    const auto points = detect_degenerate_loci(parse("x^2 + y^2 - 1"), xy, {-2, -2}, {2, 2}, 64, 1e-6);
    double worst_D = 0.0, hausdorff = 0.0;
    for (const auto& p : points) {
        const double r = std::hypot(p.coords[0], p.coords[1]);
        worst_D = std::max(worst_D, std::abs(p.coords[0] * p.coords[0] + p.coords[1] * p.coords[1] - 1));
        hausdorff = std::max(hausdorff, std::abs(r - 1));
    }
    v.require(!points.empty(), "no points");
    v.require(worst_D <= 1e-6, "max |D| " + num_str(worst_D));
    v.require(hausdorff <= 1e-4, "distance to circle " + num_str(hausdorff));
    if (v.passed) {
        v.detail << points.size() << " points, max |D| " << num_str(worst_D) << ", distance " << num_str(hausdorff);
    }
}

struct Outcome {
    int status = -1;
    std::string out;
};

Outcome shell(const std::string& args) {
    Outcome r;
    FILE* pipe = popen((std::string(FORMFLOW_CLI) + " " + args + " 2>&1").c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 9. exit statuses 0 / 1 / 2 and byte-identical reruns.
void cli_contract(Verdict& v) {
    const fs::path dir = fs::temp_directory_path() / ("formflow_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const auto& e : fs::directory_iterator(FORMFLOW_FIXTURES)) {
        if (e.path().extension() == ".json") fs::copy_file(e.path(), dir / e.path().filename());
    }
    const std::vector<std::pair<std::string, int>> expected{
        {"transport.json", 0}, {"rotation_on_circle.json", 0}, {"rotation_nonidentical.json", 1},
        {"bad_expression.json", 2}};
    for (const auto& [name, status] : expected) {
        const std::string spec = (dir / name).string();
        const Outcome first = shell("analyze " + spec);
        std::map<fs::path, std::string> artifacts;
        if (fs::exists(dir / "out")) {
            for (const auto& e : fs::directory_iterator(dir / "out")) artifacts[e.path()] = slurp(e.path());
        }
        const Outcome second = shell("analyze " + spec);
        v.require(first.status == status, name + " exited " + std::to_string(first.status));
        v.require(first.out == second.out && first.status == second.status, name + " output differs between runs");
        for (const auto& [path, bytes] : artifacts) {
            v.require(slurp(path) == bytes, path.filename().string() + " differs between runs");
        }
    }
    fs::remove_all(dir);
    if (v.passed) v.detail << "exit 0/0/1/2 as expected, reruns identical";
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
        {"exterior-calculus identities", exterior_identities},
        {"commutator oracle", commutator_oracle},
        {"charpit conservation", charpit_conservation},
        {"degenerate-direction identity", degenerate_direction},
        {"hamiltonian block", hamiltonian_block},
        {"maxwell closure convergence", maxwell_convergence},
        {"evolution bridge", evolution_bridge},
        {"locus detection", locus_detection},
        {"cli contract", cli_contract},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            criteria[i].second(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        if (!v.passed) ++failures;
        std::cout << "criterion " << i + 1 << " " << (v.passed ? "PASS" : "FAIL") << " " << criteria[i].first
                  << ": " << v.detail.str() << "\n";
    }
    return failures == 0 ? 0 : 1;
}
