#include <cmath>
#include <cstdlib>
#include <set>

#include "formflow/cli.hpp"
#include "formflow/io.hpp"
#include "json.hpp"

namespace formflow {

using nlohmann::json;

std::string_view to_string(ProblemKind kind) {
    switch (kind) {
    case ProblemKind::pde_analysis: return "pde-analysis";
    case ProblemKind::characteristics: return "characteristics";
    case ProblemKind::hamilton: return "hamilton";
    case ProblemKind::maxwell_check: return "maxwell-check";
    case ProblemKind::evolution: return "evolution";
    }
    return "unknown";
}

namespace {

std::string join(const std::string& parent, const std::string& key) { return parent.empty() ? key : parent + "." + key; }

// Thin cursor over a JSON object that reports errors with the full field path
// and rejects keys nobody asked for.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw SpecError(path_.empty() ? "<root>" : path_, "must be an object");
    }

    std::string path(const std::string& key) const { return join(path_, key); }
    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const json& at(const std::string& key) {
        used_.insert(key);
        if (!has(key)) throw SpecError(path(key), "required field missing");
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number()) throw SpecError(path(key), "must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw SpecError(path(key), "must be finite");
        return d;
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : (used_.insert(key), fallback); }

    double positive(const std::string& key, const char* reason) {
        const double d = number(key);
        if (!(d > 0.0)) throw SpecError(path(key), reason);
        return d;
    }
    double tolerance(const std::string& key, double fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        return positive(key, "tolerances > 0");
    }

    long long integer(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number_integer()) throw SpecError(path(key), "must be an integer");
        return v.get<long long>();
    }
    std::size_t count(const std::string& key, std::size_t minimum, std::size_t fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const long long v = integer(key);
        if (v < static_cast<long long>(minimum)) {
            throw SpecError(path(key), "must be >= " + std::to_string(minimum));
        }
        return static_cast<std::size_t>(v);
    }

    std::string string(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) throw SpecError(path(key), "must be a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& fallback) {
        return has(key) ? string(key) : (used_.insert(key), fallback);
    }

    std::vector<double> numbers(const std::string& key, std::optional<std::size_t> size = std::nullopt) {
        const json& v = at(key);
        if (!v.is_array()) throw SpecError(path(key), "must be an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw SpecError(path(key) + "[" + std::to_string(i) + "]", "must be a number");
            out.push_back(v[i].get<double>());
        }
        if (size && out.size() != *size) {
            throw SpecError(path(key), "must have " + std::to_string(*size) + " entries, got " + std::to_string(out.size()));
        }
        return out;
    }

    std::vector<std::string> strings(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) throw SpecError(path(key), "must be an array of strings");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string()) throw SpecError(path(key) + "[" + std::to_string(i) + "]", "must be a string");
            out.push_back(v[i].get<std::string>());
        }
        return out;
    }

    Expression expression(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) throw SpecError(path(key), "must be an expression string");
        return parse_expression(v.get<std::string>(), path(key));
    }

    std::vector<Expression> expressions(const std::string& key, std::optional<std::size_t> size = std::nullopt) {
        const auto texts = strings(key);
        if (size && texts.size() != *size) {
            throw SpecError(path(key), "must have " + std::to_string(*size) + " entries, got " + std::to_string(texts.size()));
        }
        std::vector<Expression> out;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            out.push_back(parse_expression(texts[i], path(key) + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    Fields object(const std::string& key) { return Fields(at(key), path(key)); }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.contains(key)) throw SpecError(path(key), "unknown field");
        }
    }

    static Expression parse_expression(const std::string& text, const std::string& field) {
        try {
            return parse(text);
        } catch (const ParseError& e) {
            throw ParseError("expression syntax error in field '" + field + "'", e);
        }
    }

    void mark(const std::string& key) { used_.insert(key); }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Chart read_chart(Fields& f) {
    const auto names = f.strings("coordinates");
    std::vector<int> signature;
    if (f.has("signature")) {
        for (double s : f.numbers("signature", names.size())) {
            if (s != 1.0 && s != -1.0) throw SpecError(f.path("signature"), "entries must be +1 or -1");
            signature.push_back(static_cast<int>(s));
        }
    } else {
        f.mark("signature");
    }
    try {
        return Chart(names, signature);
    } catch (const InvalidArgument& e) {
        throw SpecError(f.path("coordinates"), e.what());
    }
}

Box read_box(Fields& parent, const std::string& key, std::size_t dimension) {
    Fields f = parent.object(key);
    Box b{f.numbers("lower", dimension), f.numbers("upper", dimension)};
    for (std::size_t i = 0; i < dimension; ++i) {
        if (!(b.upper[i] > b.lower[i])) throw SpecError(f.path("upper"), "upper bounds must exceed lower bounds");
    }
    f.finish();
    return b;
}

std::pair<double, double> read_range(Fields& f, const std::string& key, std::pair<double, double> fallback) {
    if (!f.has(key)) {
        f.mark(key);
        return fallback;
    }
    const auto r = f.numbers(key, 2);
    if (!(r[1] > r[0])) throw SpecError(f.path(key), "range must be increasing");
    return {r[0], r[1]};
}

std::optional<std::filesystem::path> read_output(Fields& f, const std::string& key) {
    if (!f.has(key)) {
        f.mark(key);
        return std::nullopt;
    }
    return std::filesystem::path(f.string(key));
}

void check_variables(const Expression& e, const std::set<std::string>& allowed, const std::string& field) {
    for (const auto& v : e.free_variables()) {
        if (!allowed.contains(v)) throw SpecError(field, "expression references undeclared variable '" + v + "'");
    }
}

std::vector<std::string> default_names(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

PdeAnalysisSpec read_pde_analysis(Fields& f) {
    PdeAnalysisSpec s{.chart = read_chart(f)};
    const std::size_t n = s.chart.dimension();
    std::set<std::string> coords(s.chart.names().begin(), s.chart.names().end());
    if (f.has("p_field")) {
        s.p_field = f.expressions("p_field", n);
        for (std::size_t i = 0; i < n; ++i) check_variables((*s.p_field)[i], coords, f.path("p_field"));
    } else {
        f.mark("p_field");
    }
    s.u_name = f.string("u_name", "u");
    s.p_names = f.has("p_names") ? f.strings("p_names") : (f.mark("p_names"), default_names("p", n));
    if (s.p_names.size() != n) throw SpecError(f.path("p_names"), "needs one name per coordinate");
    if (f.has("F")) {
        s.F = f.expression("F");
        std::set<std::string> jet(coords);
        jet.insert(s.u_name);
        jet.insert(s.p_names.begin(), s.p_names.end());
        check_variables(*s.F, jet, f.path("F"));
    } else {
        f.mark("F");
    }
    if (!s.p_field && !s.F) throw SpecError(f.path("p_field"), "at least one of p_field or F is required");
    s.box = read_box(f, "box", n);
    s.u_range = read_range(f, "u_range", s.u_range);
    s.p_range = read_range(f, "p_range", s.p_range);
    s.samples = f.count("samples", 1, 100);
    s.tolerance = f.tolerance("tolerance", 1e-10);
    return s;
}

CharacteristicsSpec read_characteristics(Fields& f) {
    CharacteristicsSpec s{.chart = read_chart(f), .F = f.expression("F")};
    const std::size_t n = s.chart.dimension();
    s.u_name = f.string("u_name", "u");
    s.p_names = f.has("p_names") ? f.strings("p_names") : (f.mark("p_names"), default_names("p", n));
    if (s.p_names.size() != n) throw SpecError(f.path("p_names"), "needs one name per coordinate");
    std::set<std::string> jet(s.chart.names().begin(), s.chart.names().end());
    jet.insert(s.u_name);
    jet.insert(s.p_names.begin(), s.p_names.end());
    check_variables(s.F, jet, f.path("F"));
    Fields start = f.object("start");
    s.start.x = start.numbers("x", n);
    s.start.u = start.number("u");
    s.start.p = start.numbers("p", n);
    start.finish();
    s.ds = f.positive("ds", "ds > 0");
    const long long steps = f.integer("steps");
    if (steps < 1 || steps > 100'000'000) throw SpecError(f.path("steps"), "steps must be in [1, 1e8]");
    s.steps = static_cast<int>(steps);
    s.tolerance = f.tolerance("tolerance", 1e-8);
    s.csv = read_output(f, "csv");
    return s;
}

HamiltonSpec read_hamilton(Fields& f) {
    HamiltonSpec s{.H = f.expression("H")};
    if (f.has("q_names")) {
        s.q_names = f.strings("q_names");
        s.p_names = f.strings("p_names");
    } else {
        f.mark("q_names");
        const std::size_t m = f.has("q0") ? f.at("q0").size() : 1;
        s.q_names = default_names("q", m);
        s.p_names = f.has("p_names") ? f.strings("p_names") : (f.mark("p_names"), default_names("p", m));
    }
    const std::size_t m = s.q_names.size();
    if (m == 0) throw SpecError(f.path("q_names"), "at least one degree of freedom is required");
    if (s.p_names.size() != m) throw SpecError(f.path("p_names"), "needs one name per q");
    s.t_name = f.string("t_name", "t");
    std::set<std::string> phase(s.q_names.begin(), s.q_names.end());
    phase.insert(s.p_names.begin(), s.p_names.end());
    phase.insert(s.t_name);
    if (phase.size() != 2 * m + 1) throw SpecError(f.path("q_names"), "phase variable names must be distinct");
    check_variables(s.H, phase, f.path("H"));
    s.q0 = f.numbers("q0", m);
    s.p0 = f.numbers("p0", m);
    s.t0 = f.number("t0", 0.0);
    s.dt = f.positive("dt", "dt > 0");
    const long long steps = f.integer("steps");
    if (steps < 1 || steps > 100'000'000) throw SpecError(f.path("steps"), "steps must be in [1, 1e8]");
    s.steps = static_cast<int>(steps);
    s.tolerance = f.tolerance("tolerance", 1e-6);
    if (f.has("energy_tolerance")) {
        s.energy_tolerance = f.positive("energy_tolerance", "tolerances > 0");
    } else {
        f.mark("energy_tolerance");
    }
    if (f.has("action_field")) {
        Fields a = f.object("action_field");
        ActionFieldSpec spec{.s = a.expression("s")};
        std::set<std::string> allowed(s.q_names.begin(), s.q_names.end());
        allowed.insert(s.t_name);
        check_variables(spec.s, allowed, a.path("s"));
        spec.box = read_box(a, "box", m + 1);
        spec.samples = a.count("samples", 1, 100);
        spec.tolerance = a.tolerance("tolerance", 1e-10);
        a.finish();
        s.action_field = std::move(spec);
    } else {
        f.mark("action_field");
    }
    s.csv = read_output(f, "csv");
    return s;
}

MaxwellSpec read_maxwell(Fields& f) {
    MaxwellSpec s;
    const std::set<std::string> spacetime{"t", "x", "y", "z"};
    if (f.has("field_csv")) {
        s.field_csv = std::filesystem::path(f.string("field_csv"));
        if (f.has("E") || f.has("B")) throw SpecError(f.path("field_csv"), "give either field_csv or E/B, not both");
        f.mark("E");
        f.mark("B");
        f.mark("grid");
    } else {
        f.mark("field_csv");
        const auto E = f.expressions("E", 3);
        const auto B = f.expressions("B", 3);
        for (const auto& e : E) check_variables(e, spacetime, f.path("E"));
        for (const auto& b : B) check_variables(b, spacetime, f.path("B"));
        s.E = std::array<Expression, 3>{E[0], E[1], E[2]};
        s.B = std::array<Expression, 3>{B[0], B[1], B[2]};
        Fields g = f.object("grid");
        if (g.has("origin")) {
            const auto o = g.numbers("origin", 4);
            std::copy(o.begin(), o.end(), s.origin.begin());
        } else {
            g.mark("origin");
        }
        const auto e = g.numbers("extent", 4);
        for (std::size_t a = 0; a < 4; ++a) {
            if (!(e[a] > 0.0)) throw SpecError(g.path("extent"), "extents must be > 0");
            s.extent[a] = e[a];
        }
        const json& res = g.at("resolutions");
        if (!res.is_array() || res.empty()) throw SpecError(g.path("resolutions"), "must be a non-empty array of integers");
        for (const auto& r : res) {
            if (!r.is_number_integer() || r.get<long long>() < 5) {
                throw SpecError(g.path("resolutions"), "resolutions must be integers >= 5");
            }
            if (r.get<long long>() > 128) throw SpecError(g.path("resolutions"), "resolutions above 128 are not supported");
            s.resolutions.push_back(r.get<std::size_t>());
        }
        g.finish();
    }
    if (f.has("exclude_ball")) {
        Fields b = f.object("exclude_ball");
        const auto c = b.numbers("center", 3);
        const double r = b.positive("radius", "radius > 0");
        b.finish();
        s.exclude_ball = std::make_pair(std::array<double, 3>{c[0], c[1], c[2]}, r);
    } else {
        f.mark("exclude_ball");
    }
    s.tolerance = f.tolerance("tolerance", 1e-8);
    if (f.has("expected_order")) {
        s.expected_order = f.positive("expected_order", "expected_order > 0");
    } else {
        f.mark("expected_order");
    }
    return s;
}

EvolutionSpec read_evolution(Fields& f) {
    EvolutionSpec s{.chart = read_chart(f)};
    const std::size_t n = s.chart.dimension();
    const long long degree = f.integer("degree");
    if (degree < 0 || degree > 3) throw SpecError(f.path("degree"), "degree must be 0, 1, 2 or 3");
    s.degree = static_cast<int>(degree);
    if (static_cast<std::size_t>(degree) > n) throw SpecError(f.path("degree"), "degree exceeds chart dimension");
    s.A = f.expressions("A", binomial(n, static_cast<std::size_t>(degree)));
    const std::set<std::string> coords(s.chart.names().begin(), s.chart.names().end());
    for (const auto& a : s.A) check_variables(a, coords, f.path("A"));
    if (f.has("provenance")) {
        for (const auto& tag : f.strings("provenance")) {
            try {
                s.provenance.push_back(coefficient_source_from_string(tag));
            } catch (const InvalidArgument& e) {
                throw SpecError(f.path("provenance"), e.what());
            }
        }
        if (s.provenance.size() != s.A.size()) throw SpecError(f.path("provenance"), "one tag per coefficient");
    } else {
        f.mark("provenance");
    }
    s.box = read_box(f, "box", n);
    s.samples = f.count("samples", 1, 100);
    s.tolerance = f.tolerance("tolerance", 1e-10);

    if (f.has("pseudostructure")) {
        Fields p = f.object("pseudostructure");
        PseudostructureSpec ps;
        ps.structure.parameters = p.strings("parameters");
        const std::size_t d = ps.structure.parameters.size();
        if (d < 1 || d >= n) throw SpecError(p.path("parameters"), "structure dimension must satisfy 1 <= d < n");
        const json& box = p.at("box");
        if (!box.is_array() || box.size() != d) throw SpecError(p.path("box"), "needs one [lo, hi] per parameter");
        for (const auto& interval : box) {
            if (!interval.is_array() || interval.size() != 2 || !interval[0].is_number() || !interval[1].is_number() ||
                !(interval[1].get<double>() > interval[0].get<double>())) {
                throw SpecError(p.path("box"), "each interval must be [lo, hi] with hi > lo");
            }
            ps.structure.parameter_box.emplace_back(interval[0].get<double>(), interval[1].get<double>());
        }
        ps.structure.parametrization = p.expressions("map", n);
        const std::set<std::string> params(ps.structure.parameters.begin(), ps.structure.parameters.end());
        if (params.size() != d) throw SpecError(p.path("parameters"), "parameter names must be distinct");
        for (const auto& e : ps.structure.parametrization) check_variables(e, params, p.path("map"));
        if (p.has("determinant")) {
            ps.structure.determinant_function = p.expression("determinant");
            check_variables(*ps.structure.determinant_function, coords, p.path("determinant"));
        } else {
            p.mark("determinant");
        }
        if (p.has("psi0")) {
            ps.psi0 = p.number("psi0");
        } else {
            p.mark("psi0");
        }
        ps.intervals = p.count("intervals", 1, 64);
        p.finish();
        if (!((s.degree == 1 && d == 1) || (s.degree == 2 && d == 2))) {
            throw SpecError(p.path("parameters"), "structure dimension must equal the form degree (1 or 2)");
        }
        if (ps.psi0 && d != 1) throw SpecError(p.path("psi0"), "state extraction needs a one-parameter structure");
        s.pseudostructure = std::move(ps);
    } else {
        f.mark("pseudostructure");
    }

    if (f.has("loci")) {
        Fields l = f.object("loci");
        LociSpec loci{.D = l.expression("D")};
        check_variables(loci.D, coords, l.path("D"));
        loci.box = read_box(l, "box", n);
        loci.resolution = l.count("resolution", 1, 64);
        loci.tolerance = l.tolerance("tolerance", 1e-6);
        loci.csv = read_output(l, "csv");
        l.finish();
        s.loci = std::move(loci);
    } else {
        f.mark("loci");
    }
    return s;
}

}  // namespace

ProblemSpec parse_spec(const std::string& json_text, const std::filesystem::path& source) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SpecError("<document>", std::string("invalid JSON: ") + e.what());
    }
    Fields f(root, "");
    ProblemSpec spec;
    spec.source = source;
    const std::string kind = f.string("kind");
    if (kind == "pde-analysis") {
        spec.kind = ProblemKind::pde_analysis;
    } else if (kind == "characteristics") {
        spec.kind = ProblemKind::characteristics;
    } else if (kind == "hamilton") {
        spec.kind = ProblemKind::hamilton;
    } else if (kind == "maxwell-check") {
        spec.kind = ProblemKind::maxwell_check;
    } else if (kind == "evolution") {
        spec.kind = ProblemKind::evolution;
    } else {
        throw SpecError("kind", "must be one of pde-analysis, characteristics, hamilton, maxwell-check, evolution");
    }
    if (f.has("seed")) {
        const long long seed = f.integer("seed");
        if (seed < 0) throw SpecError("seed", "must be non-negative");
        spec.seed = static_cast<std::uint64_t>(seed);
    } else {
        f.mark("seed");
    }
    f.mark("description");

    switch (spec.kind) {
    case ProblemKind::pde_analysis: spec.body = read_pde_analysis(f); break;
    case ProblemKind::characteristics: spec.body = read_characteristics(f); break;
    case ProblemKind::hamilton: spec.body = read_hamilton(f); break;
    case ProblemKind::maxwell_check: spec.body = read_maxwell(f); break;
    case ProblemKind::evolution: spec.body = read_evolution(f); break;
    }
    f.finish();

    if (const char* env = std::getenv("FORMFLOW_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long seed = std::strtoull(env, &end, 10);
        if (*end != '\0') throw SpecError("FORMFLOW_SEED", "must be a non-negative integer");
        spec.seed = seed;
    }
    return spec;
}

ProblemSpec load_spec(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("spec file '" + path.string() + "' does not exist");
    return parse_spec(read_file(path), path);
}

}  // namespace formflow
