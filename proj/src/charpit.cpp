#include "formflow/charpit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "formflow/io.hpp"
#include "formflow/numerics.hpp"

namespace formflow {

namespace {

constexpr double kSurfaceTolerance = 1e-8;

bool all_finite(const JetPoint& jp) {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::isfinite(jp.u) && std::all_of(jp.x.begin(), jp.x.end(), finite) &&
           std::all_of(jp.p.begin(), jp.p.end(), finite);
}

}  // namespace

FirstOrderPDE::FirstOrderPDE(Chart chart, Expression F, std::string u_name, std::vector<std::string> p_names)
    : chart_(std::move(chart)), F_(std::move(F)), u_name_(std::move(u_name)), p_names_(std::move(p_names)) {
    const std::size_t n = chart_.dimension();
    if (p_names_.empty()) {
        for (std::size_t i = 1; i <= n; ++i) p_names_.push_back("p" + std::to_string(i));
    }
    if (p_names_.size() != n) throw InvalidArgument("PDE needs one derivative name per coordinate");

    jet_names_ = chart_.names();
    jet_names_.push_back(u_name_);
    jet_names_.insert(jet_names_.end(), p_names_.begin(), p_names_.end());
    std::set<std::string> unique(jet_names_.begin(), jet_names_.end());
    if (unique.size() != jet_names_.size()) throw InvalidArgument("PDE jet variable names must be distinct");
    for (const auto& v : F_.free_variables()) {
        if (!unique.contains(v)) throw InvalidArgument("F references undeclared variable '" + v + "'");
    }

    for (std::size_t i = 0; i < n; ++i) {
        dF_dx_.push_back(differentiate(F_, chart_.name(i)));
        dF_dp_.push_back(differentiate(F_, p_names_[i]));
    }
    dF_du_ = differentiate(F_, u_name_);
    if (std::all_of(dF_dp_.begin(), dF_dp_.end(), [](const Expression& e) { return e.is_zero(); })) {
        throw InvalidArgument("F does not depend on any derivative p_i; not a PDE in u");
    }

    F_c_ = CompiledExpression(F_, jet_names_);
    dF_du_c_ = CompiledExpression(dF_du_, jet_names_);
    for (std::size_t i = 0; i < n; ++i) {
        dF_dx_c_.emplace_back(dF_dx_[i], jet_names_);
        dF_dp_c_.emplace_back(dF_dp_[i], jet_names_);
    }
}

std::vector<double> FirstOrderPDE::pack(const JetPoint& jp) const {
    const std::size_t n = dimension();
    if (jp.x.size() != n || jp.p.size() != n) throw InvalidArgument("jet point dimension does not match PDE");
    std::vector<double> v;
    v.reserve(2 * n + 1);
    v.insert(v.end(), jp.x.begin(), jp.x.end());
    v.push_back(jp.u);
    v.insert(v.end(), jp.p.begin(), jp.p.end());
    return v;
}

double FirstOrderPDE::value(const JetPoint& jp) const { return F_c_(pack(jp)); }

FirstOrderPDE::Partials FirstOrderPDE::partials(const JetPoint& jp) const {
    const auto v = pack(jp);
    Partials out;
    out.F_u = dF_du_c_(v);
    for (std::size_t i = 0; i < dimension(); ++i) {
        out.F_x.push_back(dF_dx_c_[i](v));
        out.F_p.push_back(dF_dp_c_[i](v));
    }
    return out;
}

CommutatorTensor nonidentity_residual(const Chart& chart, std::vector<Expression> p_field) {
    for (const auto& p : p_field) {
        for (const auto& v : p.free_variables()) {
            if (!chart.index_of(v)) {
                throw InvalidArgument("derivative field references '" + v + "', which is not a chart coordinate");
            }
        }
    }
    return commutator(one_form(chart, std::move(p_field)));
}

CharacteristicDirection characteristic_direction(const FirstOrderPDE& pde, const JetPoint& jp) {
    const auto d = pde.partials(jp);
    CharacteristicDirection dir;
    dir.dx = d.F_p;
    bool stationary = true;
    for (std::size_t i = 0; i < pde.dimension(); ++i) {
        dir.dp.push_back(-(d.F_x[i] + jp.p[i] * d.F_u));
        dir.du += jp.p[i] * dir.dx[i];
        stationary = stationary && dir.dx[i] == 0.0;
    }
    if (stationary) throw StationaryCharacteristic("stationary characteristic point: all dF/dp_i vanish");
    return dir;
}

double degenerate_condition(const FirstOrderPDE& pde, const JetPoint& jp, std::span<const double> dx,
                            std::span<const double> dp) {
    const std::size_t n = pde.dimension();
    if (dx.size() != n || dp.size() != n) throw InvalidArgument("direction dimension does not match PDE");
    const auto d = pde.partials(jp);
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += (d.F_x[i] + jp.p[i] * d.F_u) * dx[i];
    for (std::size_t i = 0; i < n; ++i) r += d.F_p[i] * dp[i];
    return r;
}

CharacteristicStrip integrate_strip(const FirstOrderPDE& pde, const JetPoint& start, double ds, int steps) {
    if (!(ds > 0.0)) throw InvalidArgument("integrate_strip: ds must be positive");
    if (steps < 1) throw InvalidArgument("integrate_strip: steps must be at least 1");
    const double f0 = pde.value(start);
    if (!(std::abs(f0) <= kSurfaceTolerance)) {
        throw InvalidArgument("integrate_strip: start is off the equation surface, |F| = " + format_double(std::abs(f0)));
    }

    const std::size_t n = pde.dimension();
    auto unpack = [n](const std::vector<double>& y) {
        JetPoint jp;
        jp.x.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
        jp.u = y[n];
        jp.p.assign(y.begin() + static_cast<std::ptrdiff_t>(n + 1), y.end());
        return jp;
    };
    auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
        const auto dir = characteristic_direction(pde, unpack(y));
        std::copy(dir.dx.begin(), dir.dx.end(), dy.begin());
        dy[n] = dir.du;
        std::copy(dir.dp.begin(), dir.dp.end(), dy.begin() + static_cast<std::ptrdiff_t>(n + 1));
    };

    CharacteristicStrip strip;
    strip.ds = ds;
    strip.samples.reserve(static_cast<std::size_t>(steps) + 1);
    strip.samples.push_back(start);
    std::vector<double> y(start.x);
    y.push_back(start.u);
    y.insert(y.end(), start.p.begin(), start.p.end());
    for (int s = 0; s < steps; ++s) {
        y = rk4_step(rhs, y, ds);
        JetPoint jp = unpack(y);
        if (!all_finite(jp)) throw Error("integrate_strip: non-finite state after step " + std::to_string(s + 1));
        strip.samples.push_back(std::move(jp));
    }
    strip.diagnostics = compute_diagnostics(pde, strip);
    return strip;
}

std::vector<double> equation_residuals(const FirstOrderPDE& pde, const CharacteristicStrip& strip) {
    std::vector<double> out;
    out.reserve(strip.samples.size());
    for (const auto& jp : strip.samples) out.push_back(std::abs(pde.value(jp)));
    return out;
}

std::vector<double> strip_condition_residuals(const FirstOrderPDE& pde, const CharacteristicStrip& strip) {
    const std::size_t n = pde.dimension();
    const double h = strip.ds;
    std::vector<double> out(strip.samples.size(), 0.0);
    if (strip.samples.size() < 2) return out;

    // Three-point Gauss-Legendre on [0, 1]; exact for the degree-5 integrand
    // (cubic p times quadratic x').
    const double g = std::sqrt(15.0) / 10.0;
    const double nodes[3] = {0.5 - g, 0.5, 0.5 + g};
    const double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

    std::vector<CharacteristicDirection> slopes;
    slopes.reserve(strip.samples.size());
    for (const auto& jp : strip.samples) slopes.push_back(characteristic_direction(pde, jp));

    for (std::size_t k = 1; k < strip.samples.size(); ++k) {
        const JetPoint& a = strip.samples[k - 1];
        const JetPoint& b = strip.samples[k];
        const auto& ma = slopes[k - 1];
        const auto& mb = slopes[k];
        double integral = 0.0;
        for (int q = 0; q < 3; ++q) {
            const double t = nodes[q];
            const double t2 = t * t;
            const double t3 = t2 * t;
            const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
            const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1, d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
            double integrand = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double p = h00 * a.p[i] + h10 * h * ma.dp[i] + h01 * b.p[i] + h11 * h * mb.dp[i];
                const double xdot = (d00 * a.x[i] + d01 * b.x[i]) / h + d10 * ma.dx[i] + d11 * mb.dx[i];
                integrand += p * xdot;
            }
            integral += weights[q] * integrand;
        }
        integral *= h;
        out[k] = std::abs((b.u - a.u) - integral) / h;
    }
    return out;
}

StripDiagnostics compute_diagnostics(const FirstOrderPDE& pde, const CharacteristicStrip& strip) {
    StripDiagnostics d;
    for (double r : equation_residuals(pde, strip)) d.max_abs_F = std::max(d.max_abs_F, r);
    for (double r : strip_condition_residuals(pde, strip)) d.max_strip_residual = std::max(d.max_strip_residual, r);
    return d;
}

SolutionCertificate generalized_solution_certificate(const CharacteristicStrip& strip, const FirstOrderPDE& pde,
                                                     double tol) {
    if (strip.samples.empty()) throw InvalidArgument("certificate: strip is empty");
    SolutionCertificate c;
    const auto f = equation_residuals(pde, strip);
    const auto s = strip_condition_residuals(pde, strip);
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f[k] > c.max_abs_F) {
            c.max_abs_F = f[k];
            c.worst_F_sample = k;
        }
        if (s[k] > c.max_strip_residual) {
            c.max_strip_residual = s[k];
            c.worst_strip_sample = k;
        }
    }
    c.generalized_solution = c.max_abs_F <= tol && c.max_strip_residual <= tol;
    return c;
}

void write_strip_csv(std::ostream& out, const FirstOrderPDE& pde, const CharacteristicStrip& strip) {
    const std::size_t n = pde.dimension();
    out << "s";
    for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
    out << ",u";
    for (std::size_t i = 1; i <= n; ++i) out << ",p" << i;
    out << ",F_residual,strip_residual\n";
    const auto f = equation_residuals(pde, strip);
    const auto s = strip_condition_residuals(pde, strip);
    for (std::size_t k = 0; k < strip.samples.size(); ++k) {
        const auto& jp = strip.samples[k];
        out << format_double(static_cast<double>(k) * strip.ds);
        for (double v : jp.x) out << ',' << format_double(v);
        out << ',' << format_double(jp.u);
        for (double v : jp.p) out << ',' << format_double(v);
        out << ',' << format_double(f[k]) << ',' << format_double(s[k]) << '\n';
    }
}

}  // namespace formflow
