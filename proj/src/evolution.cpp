#include "formflow/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "formflow/io.hpp"

namespace formflow {

std::string_view to_string(CoefficientSource s) {
    switch (s) {
    case CoefficientSource::energy: return "energy";
    case CoefficientSource::force: return "force";
    default: return "unspecified";
    }
}

CoefficientSource coefficient_source_from_string(std::string_view s) {
    if (s == "energy") return CoefficientSource::energy;
    if (s == "force") return CoefficientSource::force;
    if (s == "unspecified") return CoefficientSource::unspecified;
    throw InvalidArgument("unknown coefficient source '" + std::string(s) + "'");
}

EvolutionaryRelation::EvolutionaryRelation(DifferentialForm omega, std::vector<CoefficientSource> provenance)
    : omega_(std::move(omega)), provenance_(std::move(provenance)) {
    if (omega_.degree() > 3) throw InvalidArgument("evolutionary form degree must be 0, 1, 2 or 3");
    if (provenance_.empty()) provenance_.assign(omega_.coefficients().size(), CoefficientSource::unspecified);
    if (provenance_.size() != omega_.coefficients().size()) {
        throw InvalidArgument("one provenance tag per coefficient is required");
    }
}

EvolutionaryRelation build_relation(const Chart& chart, std::vector<Expression> A, int p,
                                    std::vector<CoefficientSource> provenance) {
    if (p < 0 || p > 3) throw InvalidArgument("degree " + std::to_string(p) + " out of range {0,1,2,3}");
    const auto degree = static_cast<std::size_t>(p);
    if (degree > chart.dimension()) throw InvalidArgument("degree exceeds chart dimension");
    const std::size_t expected = binomial(chart.dimension(), degree);
    if (A.size() != expected) {
        throw InvalidArgument("degree " + std::to_string(p) + " relation on " + std::to_string(chart.dimension()) +
                              " coordinates needs " + std::to_string(expected) + " coefficients, got " +
                              std::to_string(A.size()));
    }
    return EvolutionaryRelation(DifferentialForm(chart, degree, std::move(A)), std::move(provenance));
}

NonidentityReport nonidentity_measure(const EvolutionaryRelation& rel, const std::vector<std::vector<double>>& samples) {
    if (rel.degree() == 0) throw InvalidArgument("nonidentity measure is defined for degree >= 1");
    NonidentityReport report;
    if (rel.degree() == 1) {
        const CommutatorTensor k = commutator(rel.omega());
        for (std::size_t s = 0; s < samples.size(); ++s) {
            double m = 0.0;
            try {
                m = k.max_abs(samples[s]);
            } catch (const SingularEvaluation& e) {
                report.skipped.push_back({s, e.what()});
                continue;
            }
            if (report.worst_point.empty() || m > report.measure) {
                report.measure = m;
                report.worst_point = samples[s];
            }
        }
        return report;
    }
    const ClosureReport closure = is_closed(rel.omega(), samples, 0.0);
    report.measure = closure.max_residual;
    report.worst_point = closure.worst_point;
    report.skipped = closure.skipped;
    return report;
}

std::vector<LocusPoint> detect_degenerate_loci(const Expression& D, const Chart& chart,
                                               const std::vector<double>& lower, const std::vector<double>& upper,
                                               std::size_t resolution, double tol) {
    const std::size_t n = chart.dimension();
    if (lower.size() != n || upper.size() != n) throw InvalidArgument("scan box dimension does not match chart");
    if (resolution < 1) throw InvalidArgument("scan resolution must be at least 1");
    if (!(tol > 0.0)) throw InvalidArgument("locus tolerance must be positive");
    for (std::size_t a = 0; a < n; ++a) {
        if (!(upper[a] > lower[a])) throw InvalidArgument("scan box must have positive extent");
    }
    const CompiledExpression f(D, chart.names());
    const std::size_t per_axis = resolution + 1;
    std::size_t total = 1;
    for (std::size_t a = 0; a < n; ++a) total *= per_axis;

    auto node_coords = [&](std::size_t node) {
        std::vector<double> c(n);
        for (std::size_t a = n; a-- > 0;) {
            const std::size_t i = node % per_axis;
            node /= per_axis;
            // The last node lands exactly on the upper bound.
            c[a] = i == resolution ? upper[a]
                                   : lower[a] + (upper[a] - lower[a]) * static_cast<double>(i) / static_cast<double>(resolution);
        }
        return c;
    };

    std::vector<double> values(total, 0.0);
    std::vector<bool> valid(total, false);
    for (std::size_t node = 0; node < total; ++node) {
        try {
            values[node] = f(node_coords(node));
            valid[node] = true;
        } catch (const SingularEvaluation&) {
        }
    }

    std::vector<LocusPoint> out;
    for (std::size_t node = 0; node < total; ++node) {
        if (valid[node] && std::abs(values[node]) <= tol) out.push_back({node_coords(node), std::abs(values[node])});
    }

    std::size_t stride = 1;
    for (std::size_t a = n; a-- > 0;) {
        for (std::size_t node = 0; node < total; ++node) {
            if ((node / stride) % per_axis == resolution) continue;
            const std::size_t next = node + stride;
            if (!valid[node] || !valid[next]) continue;
            const double fa = values[node];
            const double fb = values[next];
            if (std::abs(fa) <= tol || std::abs(fb) <= tol) continue;
            if ((fa < 0.0) == (fb < 0.0)) continue;

            std::vector<double> lo = node_coords(node);
            std::vector<double> hi = node_coords(next);
            double f_lo = fa;
            std::vector<double> mid(lo);
            for (int iter = 0; iter < 200; ++iter) {
                mid[a] = 0.5 * (lo[a] + hi[a]);
                if (mid[a] == lo[a] || mid[a] == hi[a]) break;
                double fm = 0.0;
                try {
                    fm = f(mid);
                } catch (const SingularEvaluation&) {
                    break;
                }
                if (std::abs(fm) <= tol) {
                    out.push_back({mid, std::abs(fm)});
                    break;
                }
                if ((fm < 0.0) == (f_lo < 0.0)) {
                    lo[a] = mid[a];
                    f_lo = fm;
                } else {
                    hi[a] = mid[a];
                }
            }
            // A sign change that never gets within tol is a pole and yields nothing.
        }
        stride *= per_axis;
    }
    return out;
}

void write_loci_csv(std::ostream& out, const Chart& chart, const std::vector<LocusPoint>& points) {
    for (const auto& name : chart.names()) out << name << ',';
    out << "abs_D\n";
    for (const auto& p : points) {
        for (double c : p.coords) out << format_double(c) << ',';
        out << format_double(p.abs_value) << '\n';
    }
}

namespace {

// det of the k x k matrix m (Leibniz expansion; k is at most 3 here).
Expression determinant(const std::vector<std::vector<Expression>>& m) {
    const std::size_t k = m.size();
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    Expression det;
    do {
        Expression term = Expression::constant(1.0);
        for (std::size_t r = 0; r < k; ++r) term = term * m[r][perm[r]];
        det = permutation_sign(perm) > 0 ? det + term : det - term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return det;
}

}  // namespace

Restriction restrict_to_pseudostructure(const EvolutionaryRelation& rel, const Pseudostructure& ps) {
    const std::size_t n = rel.chart().dimension();
    const std::size_t d = ps.dimension();
    const auto p = static_cast<std::size_t>(rel.degree());
    if (!((p == 1 && d == 1) || (p == 2 && d == 2))) {
        throw InvalidArgument("restriction needs form degree equal to structure dimension (1/1 or 2/2), got degree " +
                              std::to_string(p) + " on a " + std::to_string(d) + "-dimensional structure");
    }
    if (d >= n) throw InvalidArgument("pseudostructure dimension must be below the chart dimension");
    if (ps.parametrization.size() != n) throw InvalidArgument("parametrization needs one expression per coordinate");
    if (!ps.parameter_box.empty() && ps.parameter_box.size() != d) {
        throw InvalidArgument("parameter box needs one interval per parameter");
    }
    const Chart params = ps.parameter_chart();
    for (const auto& e : ps.parametrization) {
        for (const auto& v : e.free_variables()) {
            if (!params.index_of(v)) throw InvalidArgument("parametrization references unknown parameter '" + v + "'");
        }
    }

    std::map<std::string, Expression, std::less<>> substitution;
    for (std::size_t mu = 0; mu < n; ++mu) substitution.emplace(rel.chart().name(mu), ps.parametrization[mu]);

    // jacobian[mu][a] = d phi^mu / d tau^a
    std::vector<std::vector<Expression>> jacobian(n, std::vector<Expression>(d));
    for (std::size_t mu = 0; mu < n; ++mu) {
        for (std::size_t a = 0; a < d; ++a) jacobian[mu][a] = differentiate(ps.parametrization[mu], ps.parameters[a]);
    }

    const auto form_basis = rel.omega().basis();
    std::vector<Expression> coefficients;
    for (const auto& alpha : basis_indices(d, p)) {
        Expression sum;
        for (std::size_t i = 0; i < form_basis.size(); ++i) {
            const Expression& A = rel.omega()[i];
            if (A.is_zero()) continue;
            std::vector<std::vector<Expression>> minor(p, std::vector<Expression>(p));
            for (std::size_t r = 0; r < p; ++r) {
                for (std::size_t c = 0; c < p; ++c) minor[r][c] = jacobian[form_basis[i][r]][alpha[c]];
            }
            sum = sum + A.substitute(substitution) * determinant(minor);
        }
        coefficients.push_back(sum);
    }

    Restriction r{DifferentialForm(params, p, coefficients), false, coefficients};
    const DifferentialForm d_pullback = exterior_derivative(r.pullback);
    r.closed = std::all_of(d_pullback.coefficients().begin(), d_pullback.coefficients().end(),
                           [](const Expression& e) { return e.is_zero(); });
    return r;
}

StateFunction extract_state_function(const DifferentialForm& restricted, double tau0, double psi0, double tau1,
                                     std::size_t intervals) {
    if (restricted.degree() != 1 || restricted.dimension() != 1) {
        throw InvalidArgument("state extraction needs a 1-form on a one-parameter structure");
    }
    if (intervals < 1) throw InvalidArgument("state extraction needs at least one interval");
    const std::vector<std::string> names = restricted.chart().names();
    const CompiledExpression a(restricted[0], names);
    auto f = [&](double tau) { return a(std::span<const double>(&tau, 1)); };

    StateFunction out;
    const double h = (tau1 - tau0) / static_cast<double>(intervals);
    out.tau.push_back(tau0);
    out.psi.push_back(psi0);
    double fine_sum = 0.0;
    double estimate = 0.0;
    double f_left = f(tau0);
    for (std::size_t k = 0; k < intervals; ++k) {
        const double left = tau0 + static_cast<double>(k) * h;
        const double right = k + 1 == intervals ? tau1 : tau0 + static_cast<double>(k + 1) * h;
        const double width = right - left;
        const double f_right = f(right);
        const double f_mid = f(0.5 * (left + right));
        const double f_q1 = f(left + 0.25 * width);
        const double f_q3 = f(left + 0.75 * width);
        const double coarse = width / 6.0 * (f_left + 4.0 * f_mid + f_right);
        const double fine = width / 12.0 * (f_left + 4.0 * f_q1 + 2.0 * f_mid + 4.0 * f_q3 + f_right);
        estimate += std::abs(fine - coarse) / 15.0;
        fine_sum += fine;
        out.tau.push_back(right);
        out.psi.push_back(psi0 + fine_sum);
        f_left = f_right;
    }
    out.error_estimate = estimate;
    return out;
}

double path_integral(const EvolutionaryRelation& rel, const std::vector<std::vector<double>>& vertices,
                     std::size_t intervals_per_leg) {
    if (rel.degree() != 1) throw InvalidArgument("path integral needs a 1-form");
    const std::size_t n = rel.chart().dimension();
    double total = 0.0;
    for (std::size_t leg = 1; leg < vertices.size(); ++leg) {
        const auto& a = vertices[leg - 1];
        const auto& b = vertices[leg];
        if (a.size() != n || b.size() != n) throw InvalidArgument("path vertex dimension does not match chart");
        // A 1-D structure only exists inside charts of dimension >= 2; a line
        // integral on a 1-D chart is integrated directly.
        Pseudostructure ps;
        ps.parameters = {"_s"};
        ps.parameter_box = {{0.0, 1.0}};
        const Expression s = Expression::variable("_s");
        for (std::size_t mu = 0; mu < n; ++mu) {
            ps.parametrization.push_back(Expression::constant(a[mu]) + Expression::constant(b[mu] - a[mu]) * s);
        }
        DifferentialForm pulled = zero_form(Chart({"_s"}), 1);
        if (n >= 2) {
            pulled = restrict_to_pseudostructure(rel, ps).pullback;
        } else {
            std::map<std::string, Expression, std::less<>> sub{{rel.chart().name(0), ps.parametrization[0]}};
            pulled = one_form(Chart({"_s"}), {rel.omega()[0].substitute(sub) * Expression::constant(b[0] - a[0])});
        }
        total += extract_state_function(pulled, 0.0, 0.0, 1.0, intervals_per_leg).psi.back();
    }
    return total;
}

Interaction classify_interaction(int degree) {
    switch (degree) {
    case 0: return Interaction::strong;
    case 1: return Interaction::weak;
    case 2: return Interaction::electromagnetic;
    case 3: return Interaction::gravitational;
    default: break;
    }
    throw InvalidArgument("degree " + std::to_string(degree) + " out of range {0,1,2,3}");
}

std::string_view to_string(Interaction i) {
    switch (i) {
    case Interaction::strong: return "strong";
    case Interaction::weak: return "weak";
    case Interaction::electromagnetic: return "electromagnetic";
    case Interaction::gravitational: return "gravitational";
    }
    return "unknown";
}

}  // namespace formflow
