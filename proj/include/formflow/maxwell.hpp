#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "formflow/expr.hpp"
#include "formflow/forms.hpp"

namespace formflow {

// Uniform (t, x, y, z) node lattice with Minkowski signature (+, -, -, -).
class SpacetimeGrid {
public:
    SpacetimeGrid(std::array<double, 4> origin, std::array<double, 4> spacing, std::array<std::size_t, 4> counts);

    // counts[a] nodes covering [origin, origin + extent) with spacing extent / count,
    // i.e. one full period of a periodic signal of that extent.
    static SpacetimeGrid periodic(std::array<double, 4> origin, std::array<double, 4> extent,
                                  std::array<std::size_t, 4> counts);

    const std::array<double, 4>& origin() const noexcept { return origin_; }
    const std::array<double, 4>& spacing() const noexcept { return spacing_; }
    const std::array<std::size_t, 4>& counts() const noexcept { return counts_; }
    std::size_t node_count() const noexcept { return counts_[0] * counts_[1] * counts_[2] * counts_[3]; }
    std::size_t stride(std::size_t axis) const noexcept { return strides_[axis]; }

    // z varies fastest.
    std::size_t index(const std::array<std::size_t, 4>& ijkl) const;
    std::array<std::size_t, 4> multi_index(std::size_t node) const;
    std::array<double, 4> coordinates(std::size_t node) const;

    static Chart chart();

private:
    std::array<double, 4> origin_;
    std::array<double, 4> spacing_;
    std::array<std::size_t, 4> counts_;
    std::array<std::size_t, 4> strides_;
};

using NodeField = std::vector<double>;
using SampledForm = BasicForm<NodeField>;

// Per-node flag; nonzero keeps the node.
using NodeMask = std::vector<std::uint8_t>;
NodeMask make_mask(const SpacetimeGrid& grid, const std::function<bool(const std::array<double, 4>&)>& keep);

// F_{mu nu} on the grid, stored as a sampled 2-form on (t, x, y, z) in the order
// F_tx, F_ty, F_tz, F_xy, F_xz, F_yz. Relation to the fields:
//   F_tx = Ex, F_ty = Ey, F_tz = Ez, F_xy = -Bz, F_xz = By, F_yz = -Bx.
class FieldStrength2Form {
public:
    FieldStrength2Form(SpacetimeGrid grid, SampledForm form);

    const SpacetimeGrid& grid() const noexcept { return grid_; }
    const SampledForm& form() const noexcept { return form_; }
    const NodeField& component(std::size_t mu, std::size_t nu) const { return form_.coefficient({mu, nu}); }

private:
    SpacetimeGrid grid_;
    SampledForm form_;
};

FieldStrength2Form assemble_from_EB(const SpacetimeGrid& grid, std::array<NodeField, 3> E, std::array<NodeField, 3> B);

// Samples E and B given as expressions in t, x, y, z. Masked-out nodes are set
// to zero without evaluation, so fields may be singular there.
FieldStrength2Form sample_fields(const SpacetimeGrid& grid, const std::array<Expression, 3>& E,
                                 const std::array<Expression, 3>& B, const NodeMask* mask = nullptr);

struct ClosureResiduals {
    double closed = 0.0;  // max |d theta^2|
    double dual = 0.0;    // max |d * theta^2|
    std::array<double, 4> worst_closed_node{};
    std::array<double, 4> worst_dual_node{};
    std::size_t nodes_checked = 0;
};

// Central differences at interior nodes. With a mask, a node counts only if it
// and its eight axis neighbours are kept.
ClosureResiduals closure_residuals(const FieldStrength2Form& f, const NodeMask* mask = nullptr);

struct PhysicalStructureReport {
    bool physical = false;
    ClosureResiduals residuals;
};

PhysicalStructureReport certify_physical_structure(const FieldStrength2Form& f, double tol,
                                                   const NodeMask* mask = nullptr);

// Node-per-row CSV with header t,x,y,z,Ex,Ey,Ez,Bx,By,Bz. Rows may come in any
// order but must cover a complete uniform lattice.
FieldStrength2Form read_field_csv(std::istream& in);
FieldStrength2Form read_field_csv(const std::filesystem::path& path);
void write_field_csv(std::ostream& out, const SpacetimeGrid& grid, const std::array<NodeField, 3>& E,
                     const std::array<NodeField, 3>& B);

}  // namespace formflow
