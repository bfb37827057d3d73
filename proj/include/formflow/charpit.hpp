#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "formflow/expr.hpp"
#include "formflow/forms.hpp"

namespace formflow {

class StationaryCharacteristic : public Error {
public:
    using Error::Error;
};

// Point of the (x, u, p) jet space.
struct JetPoint {
    std::vector<double> x;
    double u = 0.0;
    std::vector<double> p;
};

// F(x^i, u, p_i) = 0 together with its first partials.
class FirstOrderPDE {
public:
    // p_names defaults to p1..pn.
    FirstOrderPDE(Chart chart, Expression F, std::string u_name = "u", std::vector<std::string> p_names = {});

    const Chart& chart() const noexcept { return chart_; }
    std::size_t dimension() const noexcept { return chart_.dimension(); }
    const Expression& F() const noexcept { return F_; }
    const Expression& dF_dx(std::size_t i) const { return dF_dx_.at(i); }
    const Expression& dF_du() const noexcept { return dF_du_; }
    const Expression& dF_dp(std::size_t i) const { return dF_dp_.at(i); }
    const std::string& u_name() const noexcept { return u_name_; }
    const std::vector<std::string>& p_names() const noexcept { return p_names_; }

    // Jet variable ordering used by the compiled partials: x..., u, p...
    const std::vector<std::string>& jet_names() const noexcept { return jet_names_; }

    double value(const JetPoint& jp) const;

    struct Partials {
        std::vector<double> F_x;
        double F_u;
        std::vector<double> F_p;
    };
    Partials partials(const JetPoint& jp) const;

private:
    std::vector<double> pack(const JetPoint& jp) const;

    Chart chart_;
    Expression F_;
    std::string u_name_;
    std::vector<std::string> p_names_;
    std::vector<std::string> jet_names_;
    std::vector<Expression> dF_dx_;
    Expression dF_du_;
    std::vector<Expression> dF_dp_;
    CompiledExpression F_c_;
    std::vector<CompiledExpression> dF_dx_c_;
    CompiledExpression dF_du_c_;
    std::vector<CompiledExpression> dF_dp_c_;
};

// Commutator of theta = p_i dx^i for a prescribed derivative field. Vanishes
// exactly when the field is a differential.
CommutatorTensor nonidentity_residual(const Chart& chart, std::vector<Expression> p_field);

struct CharacteristicDirection {
    std::vector<double> dx;
    double du = 0.0;
    std::vector<double> dp;
};

// dx_i = F_{p_i}, dp_i = -(F_{x_i} + p_i F_u), du = p . dx.
// Throws StationaryCharacteristic when every dx_i is zero.
CharacteristicDirection characteristic_direction(const FirstOrderPDE& pde, const JetPoint& jp);

// sum_i (F_{x_i} + p_i F_u) dx_i + sum_i F_{p_i} dp_i
double degenerate_condition(const FirstOrderPDE& pde, const JetPoint& jp, std::span<const double> dx,
                            std::span<const double> dp);

struct StripDiagnostics {
    double max_abs_F = 0.0;
    double max_strip_residual = 0.0;
};

struct CharacteristicStrip {
    double ds = 0.0;
    std::vector<JetPoint> samples;
    StripDiagnostics diagnostics;
};

// Fixed-step RK4 along the characteristic direction. The start must satisfy
// |F| <= 1e-8.
CharacteristicStrip integrate_strip(const FirstOrderPDE& pde, const JetPoint& start, double ds, int steps);

// |F| at every sample.
std::vector<double> equation_residuals(const FirstOrderPDE& pde, const CharacteristicStrip& strip);

// Per-step mismatch of du = p_i dx^i: |delta u - integral p . dx/ds ds| / ds
// over each step, the integral taken along the cubic Hermite interpolant of the
// samples (slopes from the characteristic direction). Entry 0 is 0.
std::vector<double> strip_condition_residuals(const FirstOrderPDE& pde, const CharacteristicStrip& strip);

StripDiagnostics compute_diagnostics(const FirstOrderPDE& pde, const CharacteristicStrip& strip);

struct SolutionCertificate {
    bool generalized_solution = false;
    double max_abs_F = 0.0;
    std::size_t worst_F_sample = 0;
    double max_strip_residual = 0.0;
    std::size_t worst_strip_sample = 0;
};

SolutionCertificate generalized_solution_certificate(const CharacteristicStrip& strip, const FirstOrderPDE& pde,
                                                     double tol);

// Columns: s, x1..xn, u, p1..pn, F_residual, strip_residual
void write_strip_csv(std::ostream& out, const FirstOrderPDE& pde, const CharacteristicStrip& strip);

}  // namespace formflow
