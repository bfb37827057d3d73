#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "formflow/expr.hpp"
#include "formflow/forms.hpp"
#include "formflow/numerics.hpp"

namespace testing {

using namespace formflow;

inline Expression var(const std::string& name) { return Expression::variable(name); }
inline Expression num(double v) { return Expression::constant(v); }

// Random polynomial with small integer coefficients, total degree <= max_degree.
inline Expression random_polynomial(Sampler& rng, const std::vector<std::string>& vars, int max_degree,
                                    int terms = 4) {
    Expression sum;
    for (int t = 0; t < terms; ++t) {
        Expression mono = num(static_cast<double>(static_cast<int>(rng.index(9)) - 4));
        const int degree = static_cast<int>(rng.index(static_cast<std::size_t>(max_degree) + 1));
        for (int d = 0; d < degree; ++d) mono = mono * var(vars[rng.index(vars.size())]);
        sum = sum + mono;
    }
    return sum;
}

// Random smooth expression tree of bounded depth. Every function application
// is wrapped so that it stays finite on [-2, 2]^n.
inline Expression random_expression(Sampler& rng, const std::vector<std::string>& vars, int depth) {
    if (depth <= 0 || rng.unit() < 0.2) {
        if (rng.unit() < 0.7) return var(vars[rng.index(vars.size())]);
        return num(std::round(rng.uniform(-3.0, 3.0) * 4.0) / 4.0);
    }
    const auto sub = [&] { return random_expression(rng, vars, depth - 1); };
    const auto square = [&] {
        const Expression s = sub();
        return s * s;
    };
    switch (rng.index(10)) {
    case 0: return sub() + sub();
    case 1: return sub() - sub();
    case 2: return sub() * sub();
    case 3: return sub() / (num(2.0) + square());
    case 4: return pow(sub(), num(static_cast<double>(rng.index(3) + 2)));
    case 5: return -sub();
    case 6: return sin(sub());
    case 7: return cos(sub());
    case 8: return ln(num(1.0) + square());
    default: return sqrt(num(1.0) + square());
    }
}

inline double central_difference(const Expression& e, const std::string& v, Point p, double h) {
    const double x = p[v];
    p[v] = x + h;
    const double fp = e.evaluate(p);
    p[v] = x - h;
    const double fm = e.evaluate(p);
    return (fp - fm) / (2.0 * h);
}

inline DifferentialForm random_form(Sampler& rng, const Chart& chart, std::size_t degree, int max_degree) {
    std::vector<Expression> coeffs;
    for (std::size_t i = 0; i < binomial(chart.dimension(), degree); ++i) {
        coeffs.push_back(random_polynomial(rng, chart.names(), max_degree));
    }
    return DifferentialForm(chart, degree, std::move(coeffs));
}

inline double max_abs_coefficient(const DifferentialForm& f, std::span<const double> at) {
    double m = 0.0;
    for (const double c : evaluate_coefficients(f, at)) m = std::max(m, std::abs(c));
    return m;
}

// Coefficient-wise difference of two forms of the same degree at a point.
inline double max_difference(const DifferentialForm& a, const DifferentialForm& b, std::span<const double> at,
                             double scale_b = 1.0) {
    const auto ca = evaluate_coefficients(a, at);
    const auto cb = evaluate_coefficients(b, at);
    double m = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) m = std::max(m, std::abs(ca[i] - scale_b * cb[i]));
    return m;
}

}  // namespace testing
