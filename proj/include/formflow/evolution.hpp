#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "formflow/expr.hpp"
#include "formflow/forms.hpp"

namespace formflow {

// Which balance law a coefficient of the evolutionary form comes from.
enum class CoefficientSource {
    unspecified,
    energy,  // along-trajectory coefficient
    force,   // normal-direction coefficients
};

std::string_view to_string(CoefficientSource s);
CoefficientSource coefficient_source_from_string(std::string_view s);

// d psi = omega^p on an accompanying chart. For p = 0 omega is a scalar
// (stored as a 0-form); for p >= 1 it is a p-form.
class EvolutionaryRelation {
public:
    EvolutionaryRelation(DifferentialForm omega, std::vector<CoefficientSource> provenance);

    const Chart& chart() const noexcept { return omega_.chart(); }
    int degree() const noexcept { return static_cast<int>(omega_.degree()); }
    const DifferentialForm& omega() const noexcept { return omega_; }
    const std::vector<CoefficientSource>& provenance() const noexcept { return provenance_; }

private:
    DifferentialForm omega_;
    std::vector<CoefficientSource> provenance_;
};

// p in {0,1,2,3}. A holds one coefficient per basis p-index of the chart in
// basis_indices order: a single scalar for p = 0, n entries for p = 1, C(n,p)
// entries otherwise. Empty provenance means all unspecified.
EvolutionaryRelation build_relation(const Chart& chart, std::vector<Expression> A, int p,
                                    std::vector<CoefficientSource> provenance = {});

struct NonidentityReport {
    double measure = 0.0;
    std::vector<double> worst_point;
    std::vector<SkippedSample> skipped;
};

// Max |commutator entry| (p = 1) or max |coefficient of d omega| (p >= 2) over
// the samples. Zero means the relation is identical on the sampled region.
NonidentityReport nonidentity_measure(const EvolutionaryRelation& rel, const std::vector<std::vector<double>>& samples);

struct LocusPoint {
    std::vector<double> coords;
    double abs_value = 0.0;
};

// Grid scan of the box with `resolution` cells per axis, then bisection along
// every cell edge whose endpoint values change sign, until |D| <= tol. Nodes
// already within tol are reported directly. Every returned point satisfies
// |D| <= tol.
std::vector<LocusPoint> detect_degenerate_loci(const Expression& D, const Chart& chart,
                                               const std::vector<double>& lower, const std::vector<double>& upper,
                                               std::size_t resolution, double tol);

void write_loci_csv(std::ostream& out, const Chart& chart, const std::vector<LocusPoint>& points);

// Explicit parametrization x^mu = phi^mu(tau_1..tau_d) of a d-dimensional
// structure inside the chart.
struct Pseudostructure {
    std::vector<std::string> parameters;
    std::vector<std::pair<double, double>> parameter_box;
    std::vector<Expression> parametrization;  // one per chart coordinate
    std::optional<Expression> determinant_function;

    std::size_t dimension() const noexcept { return parameters.size(); }
    Chart parameter_chart() const { return Chart(parameters); }
};

struct Restriction {
    DifferentialForm pullback;  // on the parameter chart
    // d of a top-degree form on the structure vanishes identically.
    bool closed = false;
    std::vector<Expression> coefficients;
};

// Pullback of omega through the parametrization. Requires (p, d) = (1, 1) or (2, 2).
Restriction restrict_to_pseudostructure(const EvolutionaryRelation& rel, const Pseudostructure& ps);

struct StateFunction {
    std::vector<double> tau;
    std::vector<double> psi;
    double error_estimate = 0.0;
};

// psi(tau) = psi0 + integral_{tau0}^{tau} a(s) ds at `intervals` + 1 equally
// spaced nodes of [tau0, tau1], composite Simpson on each interval. The error
// estimate is the Richardson difference against the same rule on halved
// intervals.
StateFunction extract_state_function(const DifferentialForm& restricted, double tau0, double psi0, double tau1,
                                     std::size_t intervals);

// Line integral of a 1-form along the polygon through `vertices`, each leg
// restricted as a straight pseudostructure and integrated with
// extract_state_function.
double path_integral(const EvolutionaryRelation& rel, const std::vector<std::vector<double>>& vertices,
                     std::size_t intervals_per_leg);

enum class Interaction { strong, weak, electromagnetic, gravitational };

Interaction classify_interaction(int degree);
std::string_view to_string(Interaction i);

}  // namespace formflow
