#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "formflow/charpit.hpp"
#include "formflow/evolution.hpp"
#include "formflow/expr.hpp"
#include "formflow/forms.hpp"
#include "formflow/hamilton.hpp"
#include "formflow/maxwell.hpp"

namespace formflow {

inline constexpr const char* kVersion = "0.1.0";

// Schema violation in a problem spec. The message names the field.
class SpecError : public Error {
public:
    SpecError(const std::string& field, const std::string& reason)
        : Error("schema violation: " + field + ": " + reason), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class ProblemKind { pde_analysis, characteristics, hamilton, maxwell_check, evolution };

std::string_view to_string(ProblemKind kind);

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct PdeAnalysisSpec {
    Chart chart;
    std::optional<std::vector<Expression>> p_field;
    std::optional<Expression> F;
    std::string u_name = "u";
    std::vector<std::string> p_names;
    Box box;
    std::pair<double, double> u_range{-1.0, 1.0};
    std::pair<double, double> p_range{-1.0, 1.0};
    std::size_t samples = 100;
    double tolerance = 1e-10;
};

struct CharacteristicsSpec {
    Chart chart;
    Expression F;
    std::string u_name = "u";
    std::vector<std::string> p_names;
    JetPoint start;
    double ds = 0.0;
    int steps = 0;
    double tolerance = 1e-8;
    std::optional<std::filesystem::path> csv;
};

struct ActionFieldSpec {
    Expression s;
    Box box;  // over (t, q_1..q_m)
    std::size_t samples = 100;
    double tolerance = 1e-10;
};

struct HamiltonSpec {
    Expression H;
    std::vector<std::string> q_names;
    std::vector<std::string> p_names;
    std::string t_name = "t";
    std::vector<double> q0;
    std::vector<double> p0;
    double t0 = 0.0;
    double dt = 0.0;
    int steps = 0;
    double tolerance = 1e-6;
    std::optional<double> energy_tolerance;
    std::optional<ActionFieldSpec> action_field;
    std::optional<std::filesystem::path> csv;
};

struct MaxwellSpec {
    std::optional<std::array<Expression, 3>> E;
    std::optional<std::array<Expression, 3>> B;
    std::optional<std::filesystem::path> field_csv;
    std::array<double, 4> origin{};
    std::array<double, 4> extent{1.0, 1.0, 1.0, 1.0};
    std::vector<std::size_t> resolutions;
    std::optional<std::pair<std::array<double, 3>, double>> exclude_ball;
    double tolerance = 1e-8;
    std::optional<double> expected_order;
};

struct PseudostructureSpec {
    Pseudostructure structure;
    std::optional<double> psi0;  // state extraction requested when set
    std::size_t intervals = 64;
};

struct LociSpec {
    Expression D;
    Box box;
    std::size_t resolution = 64;
    double tolerance = 1e-6;
    std::optional<std::filesystem::path> csv;
};

struct EvolutionSpec {
    Chart chart;
    int degree = 1;
    std::vector<Expression> A;
    std::vector<CoefficientSource> provenance;
    Box box;
    std::size_t samples = 100;
    double tolerance = 1e-10;
    std::optional<PseudostructureSpec> pseudostructure;
    std::optional<LociSpec> loci;
};

struct ProblemSpec {
    ProblemKind kind = ProblemKind::pde_analysis;
    std::uint64_t seed = 0;
    std::filesystem::path source;  // spec file; relative output paths resolve against its directory
    std::variant<PdeAnalysisSpec, CharacteristicsSpec, HamiltonSpec, MaxwellSpec, EvolutionSpec> body{MaxwellSpec{}};
};

// Throws Error (missing file), SpecError, or ParseError (wrapped with the field name).
ProblemSpec load_spec(const std::filesystem::path& path);
ProblemSpec parse_spec(const std::string& json_text, const std::filesystem::path& source = {});

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct AnalysisReport {
    std::vector<std::pair<std::string, std::string>> echo;     // spec echo
    std::vector<std::pair<std::string, std::string>> results;  // residual maxima and locations
    std::vector<Check> checks;
    std::vector<std::filesystem::path> artifacts;
    double elapsed_seconds = 0.0;

    bool all_passed() const;
    // 0 when every check passes, 1 otherwise.
    int exit_status() const { return all_passed() ? 0 : 1; }
};

// Library errors propagate as exceptions; the caller maps them to exit status 2.
AnalysisReport run(const ProblemSpec& spec);

// Plain "key : value" text. Timing is left out unless asked for, so repeated
// runs of one spec print identical bytes.
std::string render(const AnalysisReport& report, bool include_timing = false);

}  // namespace formflow
