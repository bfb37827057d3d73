#include "formflow/forms.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace formflow {

Chart::Chart(std::vector<std::string> names, std::vector<int> signature)
    : names_(std::move(names)), signature_(std::move(signature)) {
    if (names_.empty()) throw InvalidArgument("chart needs at least one coordinate");
    if (signature_.empty()) signature_.assign(names_.size(), 1);
    if (signature_.size() != names_.size()) throw InvalidArgument("chart signature length must equal dimension");
    for (int s : signature_) {
        if (s != 1 && s != -1) throw InvalidArgument("chart signature entries must be +1 or -1");
    }
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty() || is_function_name(n)) throw InvalidArgument("invalid coordinate name '" + n + "'");
        if (!seen.insert(n).second) throw InvalidArgument("duplicate coordinate name '" + n + "'");
    }
}

Chart Chart::minkowski(std::vector<std::string> names) {
    std::vector<int> signature(names.size(), -1);
    if (!signature.empty()) signature[0] = 1;
    return Chart(std::move(names), std::move(signature));
}

std::optional<std::size_t> Chart::index_of(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

Point Chart::bind(std::span<const double> coords) const {
    if (coords.size() != names_.size()) throw InvalidArgument("point dimension does not match chart");
    Point p;
    for (std::size_t i = 0; i < coords.size(); ++i) p.emplace(names_[i], coords[i]);
    return p;
}

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

std::vector<MultiIndex> basis_indices(std::size_t n, std::size_t k) {
    std::vector<MultiIndex> out;
    if (k > n) return out;
    MultiIndex current(k);
    for (std::size_t i = 0; i < k; ++i) current[i] = i;
    for (;;) {
        out.push_back(current);
        // Advance to the next combination in lexicographic order.
        std::size_t i = k;
        while (i > 0 && current[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++current[i - 1];
        for (std::size_t j = i; j < k; ++j) current[j] = current[j - 1] + 1;
    }
    return out;
}

std::size_t basis_position(std::size_t n, const MultiIndex& index) {
    const std::size_t k = index.size();
    std::size_t position = 0;
    std::size_t previous = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (index[i] >= n || (i > 0 && index[i] <= index[i - 1])) {
            throw InvalidArgument("multi-index must be strictly increasing and within the chart");
        }
        // Count combinations that start with a smaller value in slot i.
        for (std::size_t v = (i == 0 ? 0 : previous + 1); v < index[i]; ++v) {
            position += binomial(n - v - 1, k - i - 1);
        }
        previous = index[i];
    }
    return position;
}

int permutation_sign(const std::vector<std::size_t>& indices) {
    int sign = 1;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t j = i + 1; j < indices.size(); ++j) {
            if (indices[i] == indices[j]) return 0;
            if (indices[i] > indices[j]) sign = -sign;
        }
    }
    return sign;
}

std::vector<std::vector<DerivativeTerm>> exterior_derivative_stencil(std::size_t n, std::size_t k) {
    std::vector<std::vector<DerivativeTerm>> stencil;
    for (const auto& target : basis_indices(n, k + 1)) {
        std::vector<DerivativeTerm> terms;
        for (std::size_t m = 0; m < target.size(); ++m) {
            MultiIndex rest;
            rest.reserve(k);
            for (std::size_t j = 0; j < target.size(); ++j) {
                if (j != m) rest.push_back(target[j]);
            }
            terms.push_back({target[m], basis_position(n, rest), m % 2 == 0 ? 1 : -1});
        }
        stencil.push_back(std::move(terms));
    }
    return stencil;
}

HodgeTerm hodge_dual(const Chart& chart, const MultiIndex& index) {
    const std::size_t n = chart.dimension();
    std::vector<bool> used(n, false);
    int sign = 1;
    for (std::size_t i : index) {
        if (i >= n || used[i]) throw InvalidArgument("hodge_dual: invalid multi-index");
        used[i] = true;
        sign *= chart.signature()[i];
    }
    HodgeTerm term{{}, sign};
    for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) term.dual.push_back(i);
    }
    std::vector<std::size_t> permutation(index);
    permutation.insert(permutation.end(), term.dual.begin(), term.dual.end());
    term.sign *= permutation_sign(permutation);
    return term;
}

DifferentialForm zero_form(const Chart& chart, std::size_t degree) {
    return DifferentialForm(chart, degree, std::vector<Expression>(binomial(chart.dimension(), degree)));
}

DifferentialForm scalar_form(const Chart& chart, Expression f) {
    return DifferentialForm(chart, 0, {std::move(f)});
}

DifferentialForm one_form(const Chart& chart, std::vector<Expression> coefficients) {
    return DifferentialForm(chart, 1, std::move(coefficients));
}

DifferentialForm make_form(const Chart& chart, std::size_t degree,
                           const std::vector<std::pair<std::vector<std::size_t>, Expression>>& terms) {
    const std::size_t n = chart.dimension();
    std::vector<Expression> coefficients(binomial(n, degree));
    for (const auto& [raw, coefficient] : terms) {
        if (raw.size() != degree) throw InvalidArgument("make_form: index length differs from degree");
        for (std::size_t i : raw) {
            if (i >= n) throw InvalidArgument("make_form: index outside chart");
        }
        const int sign = permutation_sign(raw);
        if (sign == 0) continue;
        MultiIndex sorted(raw);
        std::sort(sorted.begin(), sorted.end());
        auto& slot = coefficients[basis_position(n, sorted)];
        slot = sign > 0 ? slot + coefficient : slot - coefficient;
    }
    return DifferentialForm(chart, degree, std::move(coefficients));
}

DifferentialForm basis_form(const Chart& chart, std::vector<std::size_t> indices) {
    const std::size_t degree = indices.size();
    return make_form(chart, degree, {{std::move(indices), Expression::constant(1.0)}});
}

std::vector<double> evaluate_coefficients(const DifferentialForm& form, std::span<const double> coords) {
    const Point p = form.chart().bind(coords);
    std::vector<double> values;
    values.reserve(form.coefficients().size());
    for (const auto& c : form.coefficients()) values.push_back(c.evaluate(p));
    return values;
}

DifferentialForm wedge(const DifferentialForm& a, const DifferentialForm& b) {
    if (!(a.chart() == b.chart())) throw InvalidArgument("wedge: chart mismatch");
    const std::size_t n = a.dimension();
    const std::size_t degree = a.degree() + b.degree();
    if (degree > n) return zero_form(a.chart(), degree);
    std::vector<Expression> coefficients(binomial(n, degree));
    const auto basis_a = a.basis();
    const auto basis_b = b.basis();
    for (std::size_t i = 0; i < basis_a.size(); ++i) {
        if (a[i].is_zero()) continue;
        for (std::size_t j = 0; j < basis_b.size(); ++j) {
            if (b[j].is_zero()) continue;
            std::vector<std::size_t> joined(basis_a[i]);
            joined.insert(joined.end(), basis_b[j].begin(), basis_b[j].end());
            const int sign = permutation_sign(joined);
            if (sign == 0) continue;
            std::sort(joined.begin(), joined.end());
            auto& slot = coefficients[basis_position(n, joined)];
            const Expression product = a[i] * b[j];
            slot = sign > 0 ? slot + product : slot - product;
        }
    }
    return DifferentialForm(a.chart(), degree, std::move(coefficients));
}

DifferentialForm exterior_derivative(const DifferentialForm& a) {
    const std::size_t n = a.dimension();
    if (a.degree() >= n) return zero_form(a.chart(), a.degree() + 1);
    std::vector<Expression> coefficients;
    for (const auto& terms : exterior_derivative_stencil(n, a.degree())) {
        Expression sum;
        for (const auto& t : terms) {
            const Expression partial = differentiate(a[t.source], a.chart().name(t.axis));
            sum = t.sign > 0 ? sum + partial : sum - partial;
        }
        coefficients.push_back(std::move(sum));
    }
    return DifferentialForm(a.chart(), a.degree() + 1, std::move(coefficients));
}

CommutatorTensor::CommutatorTensor(Chart chart, std::vector<std::vector<Expression>> entries)
    : chart_(std::move(chart)), entries_(std::move(entries)) {
    const std::size_t n = chart_.dimension();
    if (entries_.size() != n) throw InvalidArgument("commutator tensor must be n x n");
    for (const auto& row : entries_) {
        if (row.size() != n) throw InvalidArgument("commutator tensor must be n x n");
    }
}

std::vector<std::vector<double>> CommutatorTensor::evaluate(std::span<const double> coords) const {
    const Point p = chart_.bind(coords);
    std::vector<std::vector<double>> out(dimension(), std::vector<double>(dimension(), 0.0));
    for (std::size_t i = 0; i < dimension(); ++i) {
        for (std::size_t j = i + 1; j < dimension(); ++j) {
            out[i][j] = entries_[i][j].evaluate(p);
            out[j][i] = -out[i][j];
        }
    }
    return out;
}

double CommutatorTensor::max_abs(std::span<const double> coords) const {
    double m = 0.0;
    for (const auto& row : evaluate(coords)) {
        for (double v : row) m = std::max(m, std::abs(v));
    }
    return m;
}

bool CommutatorTensor::is_symbolically_zero() const {
    for (const auto& row : entries_) {
        for (const auto& e : row) {
            if (!e.is_zero()) return false;
        }
    }
    return true;
}

CommutatorTensor commutator(const DifferentialForm& theta) {
    if (theta.degree() != 1) throw InvalidArgument("commutator: form must have degree 1");
    const std::size_t n = theta.dimension();
    const auto& chart = theta.chart();
    std::vector<std::vector<Expression>> k(n, std::vector<Expression>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            k[i][j] = differentiate(theta[j], chart.name(i)) - differentiate(theta[i], chart.name(j));
            k[j][i] = -k[i][j];
        }
    }
    return CommutatorTensor(chart, std::move(k));
}

ClosureReport is_closed(const DifferentialForm& a, const std::vector<std::vector<double>>& sample_points,
                        double tol) {
    const DifferentialForm da = exterior_derivative(a);
    const auto basis = da.basis();
    ClosureReport report;
    for (std::size_t s = 0; s < sample_points.size(); ++s) {
        std::vector<double> values;
        try {
            values = evaluate_coefficients(da, sample_points[s]);
        } catch (const SingularEvaluation& e) {
            report.skipped.push_back({s, e.what()});
            continue;
        }
        for (std::size_t c = 0; c < values.size(); ++c) {
            const double r = std::abs(values[c]);
            if (report.worst_point.empty() || r > report.max_residual) {
                report.max_residual = r;
                report.worst_point = sample_points[s];
                report.worst_component = basis[c];
            }
        }
    }
    report.closed = report.max_residual <= tol;
    return report;
}

}  // namespace formflow
