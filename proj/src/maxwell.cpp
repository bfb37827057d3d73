#include "formflow/maxwell.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "formflow/io.hpp"

namespace formflow {

namespace {

constexpr std::size_t kMinNodesPerAxis = 5;

}  // namespace

SpacetimeGrid::SpacetimeGrid(std::array<double, 4> origin, std::array<double, 4> spacing,
                             std::array<std::size_t, 4> counts)
    : origin_(origin), spacing_(spacing), counts_(counts) {
    for (std::size_t a = 0; a < 4; ++a) {
        if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
            throw InvalidArgument("grid spacing must be positive and finite");
        }
        if (counts_[a] < kMinNodesPerAxis) throw InvalidArgument("grid needs at least 5 nodes per axis");
    }
    strides_[3] = 1;
    for (std::size_t a = 3; a > 0; --a) strides_[a - 1] = strides_[a] * counts_[a];
}

SpacetimeGrid SpacetimeGrid::periodic(std::array<double, 4> origin, std::array<double, 4> extent,
                                      std::array<std::size_t, 4> counts) {
    std::array<double, 4> spacing{};
    for (std::size_t a = 0; a < 4; ++a) {
        if (counts[a] == 0) throw InvalidArgument("grid needs at least 5 nodes per axis");
        spacing[a] = extent[a] / static_cast<double>(counts[a]);
    }
    return SpacetimeGrid(origin, spacing, counts);
}

std::size_t SpacetimeGrid::index(const std::array<std::size_t, 4>& ijkl) const {
    std::size_t n = 0;
    for (std::size_t a = 0; a < 4; ++a) n += ijkl[a] * strides_[a];
    return n;
}

std::array<std::size_t, 4> SpacetimeGrid::multi_index(std::size_t node) const {
    std::array<std::size_t, 4> ijkl{};
    for (std::size_t a = 0; a < 4; ++a) {
        ijkl[a] = node / strides_[a];
        node %= strides_[a];
    }
    return ijkl;
}

std::array<double, 4> SpacetimeGrid::coordinates(std::size_t node) const {
    const auto ijkl = multi_index(node);
    std::array<double, 4> c{};
    for (std::size_t a = 0; a < 4; ++a) c[a] = origin_[a] + static_cast<double>(ijkl[a]) * spacing_[a];
    return c;
}

Chart SpacetimeGrid::chart() { return Chart::minkowski({"t", "x", "y", "z"}); }

NodeMask make_mask(const SpacetimeGrid& grid, const std::function<bool(const std::array<double, 4>&)>& keep) {
    NodeMask mask(grid.node_count());
    for (std::size_t n = 0; n < mask.size(); ++n) mask[n] = keep(grid.coordinates(n)) ? 1 : 0;
    return mask;
}

FieldStrength2Form::FieldStrength2Form(SpacetimeGrid grid, SampledForm form)
    : grid_(std::move(grid)), form_(std::move(form)) {
    if (form_.degree() != 2 || !(form_.chart() == SpacetimeGrid::chart())) {
        throw InvalidArgument("field strength must be a 2-form on (t, x, y, z)");
    }
    for (const auto& c : form_.coefficients()) {
        if (c.size() != grid_.node_count()) throw InvalidArgument("field component size does not match grid");
    }
}

FieldStrength2Form assemble_from_EB(const SpacetimeGrid& grid, std::array<NodeField, 3> E, std::array<NodeField, 3> B) {
    for (const auto* set : {&E, &B}) {
        for (const auto& c : *set) {
            if (c.size() != grid.node_count()) throw InvalidArgument("E/B array size does not match grid");
        }
    }
    std::vector<NodeField> components;
    components.reserve(6);
    components.push_back(std::move(E[0]));
    components.push_back(std::move(E[1]));
    components.push_back(std::move(E[2]));
    components.push_back(negated(std::move(B[2])));
    components.push_back(std::move(B[1]));
    components.push_back(negated(std::move(B[0])));
    return FieldStrength2Form(grid, SampledForm(SpacetimeGrid::chart(), 2, std::move(components)));
}

FieldStrength2Form sample_fields(const SpacetimeGrid& grid, const std::array<Expression, 3>& E,
                                 const std::array<Expression, 3>& B, const NodeMask* mask) {
    const auto names = SpacetimeGrid::chart().names();
    std::array<CompiledExpression, 6> compiled;
    for (std::size_t i = 0; i < 3; ++i) {
        compiled[i] = CompiledExpression(E[i], names);
        compiled[3 + i] = CompiledExpression(B[i], names);
    }
    std::array<NodeField, 6> values;
    for (auto& v : values) v.assign(grid.node_count(), 0.0);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        if (mask && !(*mask)[n]) continue;
        const auto c = grid.coordinates(n);
        for (std::size_t i = 0; i < 6; ++i) values[i][n] = compiled[i](c);
    }
    return assemble_from_EB(grid, {std::move(values[0]), std::move(values[1]), std::move(values[2])},
                            {std::move(values[3]), std::move(values[4]), std::move(values[5])});
}

namespace {

struct MaxResidual {
    double value = 0.0;
    std::size_t node = 0;
};

bool node_usable(const SpacetimeGrid& grid, std::size_t node, const NodeMask* mask) {
    if (!mask) return true;
    if (!(*mask)[node]) return false;
    for (std::size_t a = 0; a < 4; ++a) {
        if (!(*mask)[node + grid.stride(a)] || !(*mask)[node - grid.stride(a)]) return false;
    }
    return true;
}

// Max |coefficient| of the central-difference exterior derivative over usable
// interior nodes. Uses the same stencil as the symbolic derivative.
MaxResidual max_derivative(const SampledForm& form, const SpacetimeGrid& grid, const NodeMask* mask,
                           std::size_t& checked) {
    const auto stencil = exterior_derivative_stencil(4, form.degree());
    MaxResidual best;
    checked = 0;
    const auto& counts = grid.counts();
    std::array<double, 4> inv_two_h{};
    for (std::size_t a = 0; a < 4; ++a) inv_two_h[a] = 1.0 / (2.0 * grid.spacing()[a]);
    for (std::size_t i = 1; i + 1 < counts[0]; ++i) {
        for (std::size_t j = 1; j + 1 < counts[1]; ++j) {
            for (std::size_t k = 1; k + 1 < counts[2]; ++k) {
                for (std::size_t l = 1; l + 1 < counts[3]; ++l) {
                    const std::size_t node = grid.index({i, j, k, l});
                    if (!node_usable(grid, node, mask)) continue;
                    ++checked;
                    for (const auto& terms : stencil) {
                        double sum = 0.0;
                        for (const auto& t : terms) {
                            const NodeField& a = form[t.source];
                            const std::size_t s = grid.stride(t.axis);
                            const double diff = (a[node + s] - a[node - s]) * inv_two_h[t.axis];
                            sum += t.sign > 0 ? diff : -diff;
                        }
                        if (std::abs(sum) > best.value) {
                            best.value = std::abs(sum);
                            best.node = node;
                        }
                    }
                }
            }
        }
    }
    return best;
}

}  // namespace

ClosureResiduals closure_residuals(const FieldStrength2Form& f, const NodeMask* mask) {
    const auto& grid = f.grid();
    if (mask && mask->size() != grid.node_count()) throw InvalidArgument("mask size does not match grid");
    ClosureResiduals r;
    std::size_t checked = 0;
    const MaxResidual closed = max_derivative(f.form(), grid, mask, checked);
    const MaxResidual dual = max_derivative(hodge_star(f.form()), grid, mask, checked);
    r.closed = closed.value;
    r.dual = dual.value;
    r.worst_closed_node = grid.coordinates(closed.node);
    r.worst_dual_node = grid.coordinates(dual.node);
    r.nodes_checked = checked;
    return r;
}

PhysicalStructureReport certify_physical_structure(const FieldStrength2Form& f, double tol, const NodeMask* mask) {
    PhysicalStructureReport report;
    report.residuals = closure_residuals(f, mask);
    report.physical = report.residuals.closed <= tol && report.residuals.dual <= tol;
    return report;
}

namespace {

constexpr const char* kFieldHeader = "t,x,y,z,Ex,Ey,Ez,Bx,By,Bz";

std::vector<double> split_numbers(const std::string& line, std::size_t line_no) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw InvalidArgument("field CSV line " + std::to_string(line_no) + ": malformed number '" + cell + "'");
        }
    }
    return out;
}

}  // namespace

FieldStrength2Form read_field_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("field CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string compact;
    for (char c : line) {
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
    }
    if (compact != kFieldHeader) throw InvalidArgument(std::string("field CSV header must be ") + kFieldHeader);

    std::vector<std::array<double, 10>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto values = split_numbers(line, line_no);
        if (values.size() != 10) {
            throw InvalidArgument("field CSV line " + std::to_string(line_no) + ": expected 10 columns");
        }
        std::array<double, 10> row{};
        std::copy(values.begin(), values.end(), row.begin());
        rows.push_back(row);
    }
    if (rows.empty()) throw InvalidArgument("field CSV has no data rows");

    std::array<double, 4> origin{}, spacing{};
    std::array<std::size_t, 4> counts{};
    for (std::size_t a = 0; a < 4; ++a) {
        std::vector<double> axis;
        for (const auto& r : rows) axis.push_back(r[a]);
        std::sort(axis.begin(), axis.end());
        axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
        counts[a] = axis.size();
        if (counts[a] < kMinNodesPerAxis) throw InvalidArgument("field CSV: fewer than 5 nodes along an axis");
        origin[a] = axis.front();
        spacing[a] = (axis.back() - axis.front()) / static_cast<double>(counts[a] - 1);
        for (std::size_t i = 0; i < axis.size(); ++i) {
            const double expected = origin[a] + static_cast<double>(i) * spacing[a];
            if (std::abs(axis[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
                throw InvalidArgument("field CSV: node coordinates are not uniformly spaced");
            }
        }
    }
    SpacetimeGrid grid(origin, spacing, counts);
    if (rows.size() != grid.node_count()) throw InvalidArgument("field CSV does not cover a complete lattice");

    std::array<NodeField, 6> values;
    for (auto& v : values) v.assign(grid.node_count(), 0.0);
    std::vector<bool> seen(grid.node_count(), false);
    for (const auto& r : rows) {
        std::array<std::size_t, 4> ijkl{};
        for (std::size_t a = 0; a < 4; ++a) {
            ijkl[a] = static_cast<std::size_t>(std::llround((r[a] - origin[a]) / spacing[a]));
        }
        const std::size_t node = grid.index(ijkl);
        if (seen[node]) throw InvalidArgument("field CSV: duplicate node");
        seen[node] = true;
        for (std::size_t c = 0; c < 6; ++c) values[c][node] = r[4 + c];
    }
    return assemble_from_EB(grid, {std::move(values[0]), std::move(values[1]), std::move(values[2])},
                            {std::move(values[3]), std::move(values[4]), std::move(values[5])});
}

FieldStrength2Form read_field_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open field CSV '" + path.string() + "'");
    return read_field_csv(in);
}

void write_field_csv(std::ostream& out, const SpacetimeGrid& grid, const std::array<NodeField, 3>& E,
                     const std::array<NodeField, 3>& B) {
    out << kFieldHeader << '\n';
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        const auto c = grid.coordinates(n);
        out << format_double(c[0]) << ',' << format_double(c[1]) << ',' << format_double(c[2]) << ','
            << format_double(c[3]);
        for (const auto* set : {&E, &B}) {
            for (const auto& f : *set) out << ',' << format_double(f[n]);
        }
        out << '\n';
    }
}

}  // namespace formflow
