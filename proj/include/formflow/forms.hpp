#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "formflow/error.hpp"
#include "formflow/expr.hpp"

namespace formflow {

// Coordinates of a chart with a diagonal metric signature (+1/-1 per axis).
class Chart {
public:
    explicit Chart(std::vector<std::string> names, std::vector<int> signature = {});

    static Chart euclidean(std::vector<std::string> names) { return Chart(std::move(names)); }
    // First coordinate timelike: (+1, -1, -1, ...).
    static Chart minkowski(std::vector<std::string> names);

    std::size_t dimension() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<int>& signature() const noexcept { return signature_; }
    std::optional<std::size_t> index_of(std::string_view name) const;

    // Binds a coordinate tuple (chart order) to names.
    Point bind(std::span<const double> coords) const;

    friend bool operator==(const Chart&, const Chart&) = default;

private:
    std::vector<std::string> names_;
    std::vector<int> signature_;
};

// Strictly increasing list of axis positions.
using MultiIndex = std::vector<std::size_t>;

// All strictly increasing k-subsets of {0..n-1}, lexicographic. This order is
// the storage order of form coefficients, e.g. for n = 4, k = 2:
// (0,1) (0,2) (0,3) (1,2) (1,3) (2,3).
std::vector<MultiIndex> basis_indices(std::size_t n, std::size_t k);
std::size_t basis_position(std::size_t n, const MultiIndex& index);
std::size_t binomial(std::size_t n, std::size_t k);

// Sign of the permutation sorting `indices`, or 0 if an index repeats.
int permutation_sign(const std::vector<std::size_t>& indices);

// One term of d applied to a stored coefficient: the derivative along `axis`
// of coefficient `source` (a k-index position), times `sign`.
struct DerivativeTerm {
    std::size_t axis;
    std::size_t source;
    int sign;
};

// For every (k+1)-basis index J (in storage order) the terms whose sum is
// (d a)_J = sum_m (-1)^m d_{J_m} a_{J \ J_m}. Shared by the symbolic and the
// finite-difference derivative so both use one sign convention.
std::vector<std::vector<DerivativeTerm>> exterior_derivative_stencil(std::size_t n, std::size_t k);

// *(dx^I) = sign * dx^J with J the sorted complement of I, sign the product of
// the metric signs over I times the parity of the permutation (I, J).
struct HodgeTerm {
    MultiIndex dual;
    int sign;
};
HodgeTerm hodge_dual(const Chart& chart, const MultiIndex& index);

// Degree-k form stored as C(n,k) coefficients in basis_indices order. A degree
// above the chart dimension is allowed and is necessarily the zero form.
// Coeff is Expression for the analytic backend and a node array for sampled
// data (see maxwell.hpp).
template <class Coeff>
class BasicForm {
public:
    BasicForm(Chart chart, std::size_t degree, std::vector<Coeff> coefficients)
        : chart_(std::move(chart)), degree_(degree), coefficients_(std::move(coefficients)) {
        if (coefficients_.size() != binomial(chart_.dimension(), degree_)) {
            throw InvalidArgument("form needs " + std::to_string(binomial(chart_.dimension(), degree_)) +
                                  " coefficients, got " + std::to_string(coefficients_.size()));
        }
    }

    const Chart& chart() const noexcept { return chart_; }
    std::size_t degree() const noexcept { return degree_; }
    std::size_t dimension() const noexcept { return chart_.dimension(); }
    const std::vector<Coeff>& coefficients() const noexcept { return coefficients_; }
    std::vector<MultiIndex> basis() const { return basis_indices(chart_.dimension(), degree_); }

    const Coeff& coefficient(const MultiIndex& index) const {
        return coefficients_.at(basis_position(chart_.dimension(), index));
    }
    const Coeff& operator[](std::size_t position) const { return coefficients_.at(position); }

private:
    Chart chart_;
    std::size_t degree_;
    std::vector<Coeff> coefficients_;
};

inline Expression negated(const Expression& e) { return -e; }
inline std::vector<double> negated(std::vector<double> v) {
    for (auto& x : v) x = -x;
    return v;
}

template <class Coeff>
BasicForm<Coeff> hodge_star(const BasicForm<Coeff>& form) {
    const std::size_t n = form.dimension();
    if (form.degree() > n) throw InvalidArgument("hodge_star: degree exceeds chart dimension");
    const auto basis = form.basis();
    std::vector<std::optional<Coeff>> out(binomial(n, n - form.degree()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const HodgeTerm term = hodge_dual(form.chart(), basis[i]);
        out[basis_position(n, term.dual)] = term.sign > 0 ? form[i] : negated(form[i]);
    }
    std::vector<Coeff> coefficients;
    coefficients.reserve(out.size());
    for (auto& c : out) coefficients.push_back(std::move(*c));
    return BasicForm<Coeff>(form.chart(), n - form.degree(), std::move(coefficients));
}

using DifferentialForm = BasicForm<Expression>;

// Constructors for analytic forms. Coefficient expressions are not restricted
// to chart coordinates, so extra symbols act as constant parameters.
DifferentialForm zero_form(const Chart& chart, std::size_t degree);
DifferentialForm scalar_form(const Chart& chart, Expression f);
DifferentialForm one_form(const Chart& chart, std::vector<Expression> coefficients);
// Form from (possibly unsorted) index/coefficient pairs. Permutation signs are
// applied here; repeated indices contribute nothing.
DifferentialForm make_form(const Chart& chart, std::size_t degree,
                           const std::vector<std::pair<std::vector<std::size_t>, Expression>>& terms);
// dx^{i1} ^ ... ^ dx^{ik} with unit coefficient (zero form if an index repeats).
DifferentialForm basis_form(const Chart& chart, std::vector<std::size_t> indices);

// Coefficient values at a chart point (chart order coordinates).
std::vector<double> evaluate_coefficients(const DifferentialForm& form, std::span<const double> coords);

DifferentialForm wedge(const DifferentialForm& a, const DifferentialForm& b);
DifferentialForm exterior_derivative(const DifferentialForm& a);

// K[i][j] = d(coeff_j)/dx^i - d(coeff_i)/dx^j of a 1-form. For i < j this is
// exactly the (i,j) coefficient of d(theta).
class CommutatorTensor {
public:
    CommutatorTensor(Chart chart, std::vector<std::vector<Expression>> entries);

    const Chart& chart() const noexcept { return chart_; }
    std::size_t dimension() const noexcept { return chart_.dimension(); }
    const Expression& at(std::size_t i, std::size_t j) const { return entries_.at(i).at(j); }
    std::vector<std::vector<double>> evaluate(std::span<const double> coords) const;
    double max_abs(std::span<const double> coords) const;
    // True when every entry simplified to the literal zero.
    bool is_symbolically_zero() const;

private:
    Chart chart_;
    std::vector<std::vector<Expression>> entries_;
};

CommutatorTensor commutator(const DifferentialForm& theta);

struct SkippedSample {
    std::size_t index;
    std::string reason;
};

struct ClosureReport {
    bool closed = true;
    double max_residual = 0.0;
    std::vector<double> worst_point;  // empty when no sample was usable
    MultiIndex worst_component;
    std::vector<SkippedSample> skipped;
};

// Samples every coefficient of d(a); points where evaluation is singular are
// skipped and listed in the report.
ClosureReport is_closed(const DifferentialForm& a, const std::vector<std::vector<double>>& sample_points,
                        double tol = 1e-10);

}  // namespace formflow
