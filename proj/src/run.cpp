#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "formflow/cli.hpp"
#include "formflow/io.hpp"
#include "formflow/numerics.hpp"

namespace formflow {

bool AnalysisReport::all_passed() const {
    for (const auto& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

namespace {

std::string num(double v) { return format_double(v); }

std::string point(std::span<const double> p) {
    std::string out = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) out += ", ";
        out += num(p[i]);
    }
    return out + ")";
}

std::string list(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
    return out;
}

std::string list(const std::vector<Expression>& exprs) {
    std::string out = "[";
    for (std::size_t i = 0; i < exprs.size(); ++i) out += (i ? ", " : "") + exprs[i].to_string();
    return out + "]";
}

class Builder {
public:
    Builder(AnalysisReport& r, const ProblemSpec& spec) : r_(r), spec_(spec) {}

    void echo(std::string key, std::string value) { r_.echo.emplace_back("spec." + std::move(key), std::move(value)); }
    void result(std::string key, std::string value) { r_.results.emplace_back(std::move(key), std::move(value)); }
    void result(std::string key, double value) { result(std::move(key), num(value)); }
    void check(std::string name, bool passed, std::string detail) {
        r_.checks.push_back({std::move(name), passed, std::move(detail)});
    }

    std::filesystem::path resolve(const std::filesystem::path& p) const {
        if (p.is_absolute() || spec_.source.empty()) return p;
        return spec_.source.parent_path() / p;
    }

    void write_artifact(const std::filesystem::path& declared, const std::string& contents) {
        write_file_atomic(resolve(declared), contents);
        r_.artifacts.push_back(declared);
    }

    // Library errors leave the stage with the check named.
    template <class Fn>
    void stage(const std::string& name, Fn&& fn) {
        try {
            fn();
        } catch (const SpecError&) {
            throw;
        } catch (const Error& e) {
            throw Error("check '" + name + "' failed: " + e.what());
        }
    }

private:
    AnalysisReport& r_;
    const ProblemSpec& spec_;
};

std::string verdict(bool ok, double value, double tol) {
    return std::string(ok ? "" : "exceeds tolerance, ") + "max " + num(value) + " vs tol " + num(tol);
}

void run_pde(Builder& b, const PdeAnalysisSpec& s, Sampler& sampler) {
    const std::size_t n = s.chart.dimension();
    b.echo("coordinates", list(s.chart.names()));
    b.echo("box", point(s.box.lower) + " .. " + point(s.box.upper));
    b.echo("samples", std::to_string(s.samples));
    b.echo("tolerance", num(s.tolerance));

    if (s.p_field) {
        b.echo("p_field", list(*s.p_field));
        b.stage("derivative field closure", [&] {
            const DifferentialForm theta = one_form(s.chart, *s.p_field);
            const auto samples = sampler.box(s.box.lower, s.box.upper, s.samples);
            const ClosureReport closure = is_closed(theta, samples, s.tolerance);
            b.result("commutator.max_abs", closure.max_residual);
            if (!closure.worst_point.empty()) b.result("commutator.worst_point", point(closure.worst_point));
            b.result("commutator.skipped_samples", std::to_string(closure.skipped.size()));
            if (closure.skipped.size() == samples.size()) throw SingularEvaluation("every sample point was singular");
            b.check("derivative field closure", closure.closed,
                    closure.closed ? "theta is a differential, " + verdict(true, closure.max_residual, s.tolerance)
                                   : "nonidentical relation, commutator " +
                                         verdict(false, closure.max_residual, s.tolerance));
        });
    }

    if (s.F) {
        b.echo("F", s.F->to_string());
        b.stage("degenerate-direction identity", [&] {
            const FirstOrderPDE pde(s.chart, *s.F, s.u_name, s.p_names);
            double worst = 0.0;
            std::vector<double> worst_jet;
            std::size_t skipped = 0;
            for (std::size_t k = 0; k < s.samples; ++k) {
                JetPoint jp;
                jp.x.resize(n);
                jp.p.resize(n);
                for (std::size_t i = 0; i < n; ++i) jp.x[i] = sampler.uniform(s.box.lower[i], s.box.upper[i]);
                jp.u = sampler.uniform(s.u_range.first, s.u_range.second);
                for (std::size_t i = 0; i < n; ++i) jp.p[i] = sampler.uniform(s.p_range.first, s.p_range.second);
                double r = 0.0;
                try {
                    const CharacteristicDirection dir = characteristic_direction(pde, jp);
                    r = std::abs(degenerate_condition(pde, jp, dir.dx, dir.dp));
                } catch (const SingularEvaluation&) {
                    ++skipped;
                    continue;
                } catch (const StationaryCharacteristic&) {
                    ++skipped;
                    continue;
                }
                if (worst_jet.empty() || r > worst) {
                    worst = r;
                    worst_jet = jp.x;
                    worst_jet.push_back(jp.u);
                    worst_jet.insert(worst_jet.end(), jp.p.begin(), jp.p.end());
                }
            }
            b.result("degenerate_condition.max_abs", worst);
            if (!worst_jet.empty()) b.result("degenerate_condition.worst_jet", point(worst_jet));
            b.result("degenerate_condition.skipped_samples", std::to_string(skipped));
            if (skipped == s.samples) throw SingularEvaluation("no usable jet sample");
            const bool ok = worst <= s.tolerance;
            b.check("degenerate-direction identity", ok, verdict(ok, worst, s.tolerance));
        });
    }
}

void run_characteristics(Builder& b, const CharacteristicsSpec& s) {
    b.echo("coordinates", list(s.chart.names()));
    b.echo("F", s.F.to_string());
    b.echo("start.x", point(s.start.x));
    b.echo("start.u", num(s.start.u));
    b.echo("start.p", point(s.start.p));
    b.echo("ds", num(s.ds));
    b.echo("steps", std::to_string(s.steps));
    b.echo("tolerance", num(s.tolerance));
    b.stage("generalized solution", [&] {
        const FirstOrderPDE pde(s.chart, s.F, s.u_name, s.p_names);
        const CharacteristicStrip strip = integrate_strip(pde, s.start, s.ds, s.steps);
        const SolutionCertificate cert = generalized_solution_certificate(strip, pde, s.tolerance);
        const JetPoint& end = strip.samples.back();
        b.result("strip.max_abs_F", cert.max_abs_F);
        b.result("strip.worst_F_sample", std::to_string(cert.worst_F_sample));
        b.result("strip.max_strip_residual", cert.max_strip_residual);
        b.result("strip.worst_strip_sample", std::to_string(cert.worst_strip_sample));
        b.result("strip.end.x", point(end.x));
        b.result("strip.end.u", end.u);
        b.result("strip.end.p", point(end.p));
        b.check("generalized solution", cert.generalized_solution,
                "max|F| " + num(cert.max_abs_F) + ", strip residual " + num(cert.max_strip_residual) + " vs tol " +
                    num(s.tolerance));
        if (s.csv) {
            std::ostringstream out;
            write_strip_csv(out, pde, strip);
            b.write_artifact(*s.csv, out.str());
        }
    });
}

void run_hamilton(Builder& b, const HamiltonSpec& s, Sampler& sampler) {
    b.echo("H", s.H.to_string());
    b.echo("q", list(s.q_names));
    b.echo("p", list(s.p_names));
    b.echo("q0", point(s.q0));
    b.echo("p0", point(s.p0));
    b.echo("t0", num(s.t0));
    b.echo("dt", num(s.dt));
    b.echo("steps", std::to_string(s.steps));
    b.echo("tolerance", num(s.tolerance));
    const HamiltonianSystem sys(s.H, s.q_names, s.p_names, s.t_name);
    PhaseTrajectory traj;
    b.stage("Poincare invariant", [&] {
        traj = integrate_hamilton(sys, s.q0, s.p0, s.t0, s.dt, s.steps);
        const PhaseState& end = traj.samples.back();
        b.result("trajectory.end.t", end.t);
        b.result("trajectory.end.q", point(end.q));
        b.result("trajectory.end.p", point(end.p));
        b.result("trajectory.action", traj.action.back());
        const PoincareReport pr = poincare_residual(sys, traj);
        b.result("poincare.max_residual", pr.max_residual);
        b.result("poincare.worst_step", std::to_string(pr.worst_step));
        const bool ok = pr.max_residual <= s.tolerance;
        b.check("Poincare invariant", ok, verdict(ok, pr.max_residual, s.tolerance));
    });
    if (sys.is_autonomous()) {
        b.stage("energy conservation", [&] {
            const double tol = s.energy_tolerance.value_or(s.tolerance);
            const double drift = energy_drift(sys, traj);
            b.result("energy.drift", drift);
            const bool ok = drift <= tol;
            b.check("energy conservation", ok, verdict(ok, drift, tol));
        });
    } else {
        b.result("energy.drift", "not checked (H depends on " + s.t_name + ")");
    }
    if (s.action_field) {
        const ActionFieldSpec& a = *s.action_field;
        b.echo("action_field.s", a.s.to_string());
        b.stage("Hamilton-Jacobi residual", [&] {
            const auto samples = sampler.box(a.box.lower, a.box.upper, a.samples);
            const HamiltonJacobiReport hj = hamilton_jacobi_residual(sys, a.s, samples);
            if (hj.skipped.size() == samples.size()) throw SingularEvaluation("every sample point was singular");
            b.result("hamilton_jacobi.max_residual", hj.max_residual);
            b.result("hamilton_jacobi.worst_sample", point(samples[hj.worst_sample]));
            b.result("hamilton_jacobi.skipped_samples", std::to_string(hj.skipped.size()));
            const bool ok = hj.max_residual <= a.tolerance;
            b.check("Hamilton-Jacobi residual", ok, verdict(ok, hj.max_residual, a.tolerance));
        });
    }
    if (s.csv) {
        std::ostringstream out;
        write_trajectory_csv(out, sys, traj);
        b.write_artifact(*s.csv, out.str());
    }
}

std::optional<NodeMask> ball_mask(const SpacetimeGrid& grid, const MaxwellSpec& s) {
    if (!s.exclude_ball) return std::nullopt;
    const auto [c, r] = *s.exclude_ball;
    return make_mask(grid, [c, r](const std::array<double, 4>& x) {
        const double dx = x[1] - c[0], dy = x[2] - c[1], dz = x[3] - c[2];
        return dx * dx + dy * dy + dz * dz > r * r;
    });
}

void report_residuals(Builder& b, const std::string& prefix, const ClosureResiduals& r) {
    b.result(prefix + "closed_residual", r.closed);
    b.result(prefix + "closed_worst_node", point(r.worst_closed_node));
    b.result(prefix + "dual_residual", r.dual);
    b.result(prefix + "dual_worst_node", point(r.worst_dual_node));
    b.result(prefix + "nodes_checked", std::to_string(r.nodes_checked));
}

void run_maxwell(Builder& b, const MaxwellSpec& s) {
    b.echo("tolerance", num(s.tolerance));
    if (s.exclude_ball) {
        b.echo("exclude_ball", point(s.exclude_ball->first) + " radius " + num(s.exclude_ball->second));
    }
    if (s.field_csv) {
        b.echo("field_csv", s.field_csv->generic_string());
        b.stage("physical structure", [&] {
            const FieldStrength2Form f = read_field_csv(b.resolve(*s.field_csv));
            const auto mask = ball_mask(f.grid(), s);
            const PhysicalStructureReport rep = certify_physical_structure(f, s.tolerance, mask ? &*mask : nullptr);
            report_residuals(b, "", rep.residuals);
            if (rep.residuals.nodes_checked == 0) throw InvalidArgument("no interior node survives the mask");
            b.check("physical structure", rep.physical,
                    "closed " + num(rep.residuals.closed) + ", dual " + num(rep.residuals.dual) + " vs tol " +
                        num(s.tolerance));
        });
        return;
    }

    b.echo("E", list(std::vector<Expression>(s.E->begin(), s.E->end())));
    b.echo("B", list(std::vector<Expression>(s.B->begin(), s.B->end())));
    b.echo("grid.origin", point(s.origin));
    b.echo("grid.extent", point(s.extent));
    std::string res;
    for (std::size_t i = 0; i < s.resolutions.size(); ++i) res += (i ? ", " : "") + std::to_string(s.resolutions[i]);
    b.echo("grid.resolutions", res);
    if (s.expected_order) b.echo("expected_order", num(*s.expected_order));

    std::vector<ClosureResiduals> levels;
    for (const std::size_t n : s.resolutions) {
        b.stage("closure residuals at N=" + std::to_string(n), [&] {
            const SpacetimeGrid grid = SpacetimeGrid::periodic(s.origin, s.extent, {n, n, n, n});
            const auto mask = ball_mask(grid, s);
            const FieldStrength2Form f = sample_fields(grid, *s.E, *s.B, mask ? &*mask : nullptr);
            const ClosureResiduals r = closure_residuals(f, mask ? &*mask : nullptr);
            if (r.nodes_checked == 0) throw InvalidArgument("no interior node survives the mask");
            report_residuals(b, "N" + std::to_string(n) + ".", r);
            levels.push_back(r);
        });
    }

    if (!s.expected_order) {
        const ClosureResiduals& finest = levels.back();
        const bool ok = finest.closed <= s.tolerance && finest.dual <= s.tolerance;
        b.check("physical structure", ok,
                "closed " + num(finest.closed) + ", dual " + num(finest.dual) + " vs tol " + num(s.tolerance) +
                    " at N=" + std::to_string(s.resolutions.back()));
        return;
    }

    // Residual ratios between consecutive resolutions against the ratio the
    // expected order predicts, within 20%.
    if (levels.size() < 2) {
        b.check("convergence order", false, "needs at least two resolutions");
        return;
    }
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        const double refine = static_cast<double>(s.resolutions[i + 1]) / static_cast<double>(s.resolutions[i]);
        const double predicted = std::pow(refine, *s.expected_order);
        const std::string tag = "N" + std::to_string(s.resolutions[i]) + "_to_N" + std::to_string(s.resolutions[i + 1]);
        const auto judge = [&](const std::string& what, double coarse, double fine) {
            if (coarse <= s.tolerance && fine <= s.tolerance) {
                b.result("ratio." + tag + "." + what, "n/a (both residuals within tolerance)");
                b.check(what + " convergence " + tag, true, "residuals within tolerance at both resolutions");
                return;
            }
            const double ratio = fine > 0.0 ? coarse / fine : INFINITY;
            b.result("ratio." + tag + "." + what, ratio);
            const bool ok = std::isfinite(ratio) && std::abs(ratio - predicted) <= 0.2 * predicted;
            b.check(what + " convergence " + tag, ok,
                    "ratio " + num(ratio) + " vs predicted " + num(predicted) + " (+-20%)");
        };
        judge("closed", levels[i].closed, levels[i + 1].closed);
        judge("dual", levels[i].dual, levels[i + 1].dual);
    }
}

void run_evolution(Builder& b, const EvolutionSpec& s, Sampler& sampler) {
    const std::size_t n = s.chart.dimension();
    b.echo("coordinates", list(s.chart.names()));
    b.echo("degree", std::to_string(s.degree));
    b.echo("A", list(s.A));
    if (!s.provenance.empty()) {
        std::vector<std::string> tags;
        for (const auto p : s.provenance) tags.emplace_back(to_string(p));
        b.echo("provenance", list(tags));
    }
    b.echo("box", point(s.box.lower) + " .. " + point(s.box.upper));
    b.echo("samples", std::to_string(s.samples));
    b.echo("tolerance", num(s.tolerance));

    const EvolutionaryRelation rel = build_relation(s.chart, s.A, s.degree, s.provenance);
    b.result("interaction", std::string(to_string(classify_interaction(s.degree))));

    double measure = 0.0;
    if (s.degree == 0) {
        b.result("nonidentity.measure", "not defined for degree 0");
    } else {
        b.stage("relation identity", [&] {
            const auto samples = sampler.box(s.box.lower, s.box.upper, s.samples);
            const NonidentityReport rep = nonidentity_measure(rel, samples);
            if (rep.skipped.size() == samples.size()) throw SingularEvaluation("every sample point was singular");
            measure = rep.measure;
            b.result("nonidentity.measure", rep.measure);
            if (!rep.worst_point.empty()) b.result("nonidentity.worst_point", point(rep.worst_point));
            b.result("nonidentity.skipped_samples", std::to_string(rep.skipped.size()));
        });
    }
    const bool identical = s.degree == 0 || measure <= s.tolerance;
    const std::string status = identical ? "identical" : "nonidentical, measure " + num(measure);

    if (!s.pseudostructure) {
        b.check("relation identity", identical, status);
    } else {
        const PseudostructureSpec& ps = *s.pseudostructure;
        b.echo("pseudostructure.parameters", list(ps.structure.parameters));
        b.echo("pseudostructure.map", list(ps.structure.parametrization));
        b.result("relation", status);
        b.stage("identity on pseudostructure", [&] {
            const Restriction res = restrict_to_pseudostructure(rel, ps.structure);
            b.result("pullback.coefficients", list(res.coefficients));
            b.check("identity on pseudostructure", res.closed,
                    res.closed ? "restricted form closed (top degree on the structure)" : "restricted form not closed");
        });
        if (ps.structure.determinant_function) {
            b.stage("structure on degenerate locus", [&] {
                // Sample the structure on a regular parameter lattice and
                // evaluate the determinant there.
                const std::size_t d = ps.structure.dimension();
                const std::size_t per_axis = d == 1 ? 64 : 16;
                std::size_t total = 1;
                for (std::size_t k = 0; k < d; ++k) total *= per_axis + 1;
                double worst = 0.0;
                std::vector<double> worst_point;
                const CompiledExpression D(*ps.structure.determinant_function, s.chart.names());
                std::vector<CompiledExpression> phi;
                for (const auto& e : ps.structure.parametrization) phi.emplace_back(e, ps.structure.parameters);
                std::vector<double> tau(d), x(n);
                for (std::size_t idx = 0; idx < total; ++idx) {
                    std::size_t rest = idx;
                    for (std::size_t k = 0; k < d; ++k) {
                        const auto [lo, hi] = ps.structure.parameter_box[k];
                        tau[k] = lo + (hi - lo) * static_cast<double>(rest % (per_axis + 1)) / per_axis;
                        rest /= per_axis + 1;
                    }
                    for (std::size_t i = 0; i < n; ++i) x[i] = phi[i](tau);
                    const double v = std::abs(D(x));
                    if (worst_point.empty() || v > worst) {
                        worst = v;
                        worst_point = x;
                    }
                }
                b.result("determinant.max_abs_on_structure", worst);
                b.result("determinant.worst_point", point(worst_point));
                const bool ok = worst <= s.tolerance;
                b.check("structure on degenerate locus", ok, verdict(ok, worst, s.tolerance));
            });
        }
        if (ps.psi0) {
            b.stage("state function", [&] {
                const Restriction res = restrict_to_pseudostructure(rel, ps.structure);
                const auto [lo, hi] = ps.structure.parameter_box[0];
                const StateFunction sf = extract_state_function(res.pullback, lo, *ps.psi0, hi, ps.intervals);
                b.result("state.psi_end", sf.psi.back());
                b.result("state.error_estimate", sf.error_estimate);
                const bool ok = sf.error_estimate <= s.tolerance;
                b.check("state function", ok, verdict(ok, sf.error_estimate, s.tolerance));
            });
        }
    }

    if (s.loci) {
        const LociSpec& l = *s.loci;
        b.echo("loci.D", l.D.to_string());
        b.echo("loci.resolution", std::to_string(l.resolution));
        b.stage("degenerate loci", [&] {
            const auto points = detect_degenerate_loci(l.D, s.chart, l.box.lower, l.box.upper, l.resolution, l.tolerance);
            double worst = 0.0;
            for (const auto& p : points) worst = std::max(worst, p.abs_value);
            b.result("loci.count", std::to_string(points.size()));
            b.result("loci.max_abs_D", worst);
            const bool ok = worst <= l.tolerance;
            b.check("degenerate loci", ok,
                    std::to_string(points.size()) + " points, " + verdict(ok, worst, l.tolerance));
            if (l.csv) {
                std::ostringstream out;
                write_loci_csv(out, s.chart, points);
                b.write_artifact(*l.csv, out.str());
            }
        });
    }
}

}  // namespace

AnalysisReport run(const ProblemSpec& spec) {
    const auto started = std::chrono::steady_clock::now();
    AnalysisReport report;
    Builder b(report, spec);
    report.echo.emplace_back("spec.kind", std::string(to_string(spec.kind)));
    report.echo.emplace_back("spec.seed", std::to_string(spec.seed));
    Sampler sampler(spec.seed);
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, PdeAnalysisSpec>) {
                run_pde(b, body, sampler);
            } else if constexpr (std::is_same_v<T, CharacteristicsSpec>) {
                run_characteristics(b, body);
            } else if constexpr (std::is_same_v<T, HamiltonSpec>) {
                run_hamilton(b, body, sampler);
            } else if constexpr (std::is_same_v<T, MaxwellSpec>) {
                run_maxwell(b, body);
            } else {
                run_evolution(b, body, sampler);
            }
        },
        spec.body);
    report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::string render(const AnalysisReport& report, bool include_timing) {
    std::vector<std::pair<std::string, std::string>> lines;
    lines.emplace_back("formflow", kVersion);
    lines.insert(lines.end(), report.echo.begin(), report.echo.end());
    lines.insert(lines.end(), report.results.begin(), report.results.end());
    for (const auto& c : report.checks) {
        lines.emplace_back("check." + c.name, std::string(c.passed ? "PASS" : "FAIL") + " (" + c.detail + ")");
    }
    for (const auto& a : report.artifacts) lines.emplace_back("artifact", a.generic_string());
    lines.emplace_back("verdict", report.all_passed() ? "PASS" : "FAIL");
    lines.emplace_back("exit_status", std::to_string(report.exit_status()));
    if (include_timing) lines.emplace_back("elapsed_seconds", num(report.elapsed_seconds));

    std::size_t width = 0;
    for (const auto& [k, v] : lines) width = std::max(width, k.size());
    std::string out;
    for (const auto& [k, v] : lines) {
        out += k;
        out.append(width - k.size(), ' ');
        out += " : " + v + "\n";
    }
    return out;
}

}  // namespace formflow
