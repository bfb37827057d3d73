#include <numbers>
#include <sstream>

#include "doctest.h"
#include "formflow/evolution.hpp"
#include "support.hpp"

using namespace testing;

namespace {

const Chart xy({"x", "y"});
const Chart xyz({"x", "y", "z"});

std::vector<std::vector<double>> square_samples(std::uint64_t seed, std::size_t count = 50) {
    Sampler rng(seed);
    return rng.box(std::vector<double>{-1, -1}, std::vector<double>{1, 1}, count);
}

Pseudostructure curve(const char* x, const char* y, double lo, double hi) {
    return {{"tau"}, {{lo, hi}}, {parse(x), parse(y)}, std::nullopt};
}

}  // namespace

TEST_CASE("relation assembly") {
    const EvolutionaryRelation exact = build_relation(xy, {var("y"), var("x")}, 1);
    CHECK(exact.degree() == 1);
    CHECK(exact.omega().coefficient({0}).name() == "y");
    CHECK(exact.provenance() ==
          std::vector<CoefficientSource>{CoefficientSource::unspecified, CoefficientSource::unspecified});
    const EvolutionaryRelation tagged =
        build_relation(xy, {-var("y"), var("x")}, 1, {CoefficientSource::energy, CoefficientSource::force});
    CHECK(tagged.provenance()[0] == CoefficientSource::energy);
    CHECK(build_relation(xy, {var("x")}, 0).omega().degree() == 0);
    CHECK(build_relation(xyz, {var("z"), num(0), num(0)}, 2).degree() == 2);
    CHECK_THROWS_AS(build_relation(xy, {var("x")}, 4), InvalidArgument);
    CHECK_THROWS_AS(build_relation(xy, {var("x")}, -1), InvalidArgument);
    CHECK_THROWS_AS(build_relation(xy, {var("x")}, 1), InvalidArgument);
    CHECK_THROWS_AS(build_relation(xy, {var("x"), var("y")}, 1, {CoefficientSource::force}), InvalidArgument);
    CHECK(coefficient_source_from_string("energy") == CoefficientSource::energy);
    CHECK(to_string(CoefficientSource::force) == "force");
    CHECK_THROWS_AS(coefficient_source_from_string("mass"), InvalidArgument);
}

TEST_CASE("nonidentity measure examples") {
    const auto samples = square_samples(1);
    CHECK(nonidentity_measure(build_relation(xy, {var("y"), var("x")}, 1), samples).measure == 0.0);
    const NonidentityReport rot = nonidentity_measure(build_relation(xy, {-var("y"), var("x")}, 1), samples);
    CHECK(rot.measure == 2.0);
    CHECK(rot.worst_point.size() == 2);

    Sampler rng(2);
    const auto cube = rng.box(std::vector<double>{-1, -1, -1}, std::vector<double>{1, 1, 1}, 30);
    // omega = z dx^dy: d omega = dz^dx^dy = dx^dy^dz
    CHECK(nonidentity_measure(build_relation(xyz, {var("z"), num(0), num(0)}, 2), cube).measure == 1.0);
    CHECK(nonidentity_measure(build_relation(xyz, {var("x"), num(0), num(0)}, 2), cube).measure == 0.0);
    CHECK_THROWS_AS(nonidentity_measure(build_relation(xy, {var("x")}, 0), samples), InvalidArgument);
}

TEST_CASE("locus detection on the unit circle") {
    const auto points = detect_degenerate_loci(parse("x^2 + y^2 - 1"), xy, {-2, -2}, {2, 2}, 64, 1e-6);
    CHECK(points.size() >= 100);
    double hausdorff = 0.0;
    for (const auto& p : points) {
        const double D = p.coords[0] * p.coords[0] + p.coords[1] * p.coords[1] - 1;
        CHECK(std::abs(D) <= 1e-6);
        CHECK(p.abs_value == std::abs(D));
        hausdorff = std::max(hausdorff, std::abs(std::hypot(p.coords[0], p.coords[1]) - 1));
    }
    CHECK(hausdorff <= 1e-4);
    // every direction of the circle is represented
    double widest_gap = 0.0;
    std::vector<double> angles;
    for (const auto& p : points) angles.push_back(std::atan2(p.coords[1], p.coords[0]));
    std::sort(angles.begin(), angles.end());
    for (std::size_t i = 1; i < angles.size(); ++i) widest_gap = std::max(widest_gap, angles[i] - angles[i - 1]);
    widest_gap = std::max(widest_gap, angles.front() + 2 * std::numbers::pi - angles.back());
    CHECK(widest_gap < 0.1);
}

TEST_CASE("locus detection edge cases") {
    CHECK(detect_degenerate_loci(num(1.0), xy, {-1, -1}, {1, 1}, 16, 1e-6).empty());
    const auto plane = detect_degenerate_loci(var("x"), xy, {-1, -1}, {1, 1}, 16, 1e-6);
    REQUIRE_FALSE(plane.empty());
    double ymin = 1, ymax = -1;
    for (const auto& p : plane) {
        CHECK(std::abs(p.coords[0]) <= 1e-6);
        ymin = std::min(ymin, p.coords[1]);
        ymax = std::max(ymax, p.coords[1]);
    }
    CHECK(ymin == -1.0);
    CHECK(ymax == 1.0);
    // a sign change across a pole is not a zero
    for (const auto& p : detect_degenerate_loci(parse("1/x"), xy, {-1.05, -1}, {0.95, 1}, 8, 1e-6)) {
        CHECK(p.abs_value <= 1e-6);
    }
    // three dimensions: the unit sphere
    const auto sphere = detect_degenerate_loci(parse("x^2 + y^2 + z^2 - 1"), xyz, {-2, -2, -2}, {2, 2, 2}, 12, 1e-8);
    CHECK(sphere.size() > 50);
    for (const auto& p : sphere) CHECK(p.abs_value <= 1e-8);
    CHECK_THROWS_AS(detect_degenerate_loci(var("x"), xy, {1, -1}, {-1, 1}, 8, 1e-6), InvalidArgument);
}

TEST_CASE("restriction examples") {
    const EvolutionaryRelation rot = build_relation(xy, {-var("y"), var("x")}, 1);
    const Restriction circle = restrict_to_pseudostructure(rot, curve("cos(tau)", "sin(tau)", 0, 2 * std::numbers::pi));
    CHECK(circle.closed);
    REQUIRE(circle.coefficients.size() == 1);
    Sampler rng(6);
    for (int k = 0; k < 20; ++k) {
        CHECK(std::abs(circle.coefficients[0].evaluate({{"tau", rng.uniform(0, 7)}}) - 1.0) <= 1e-15);
    }

    const EvolutionaryRelation exact = build_relation(xy, {var("y"), var("x")}, 1);
    const Restriction diag = restrict_to_pseudostructure(exact, curve("tau", "tau", 0, 1));
    CHECK(diag.coefficients[0].evaluate({{"tau", 0.75}}) == 1.5);

    const EvolutionaryRelation dx = build_relation(xy, {num(1), num(0)}, 1);
    CHECK(restrict_to_pseudostructure(dx, curve("0.3", "tau", 0, 1)).coefficients[0].is_zero());

    // a 2-form on a surface in three dimensions
    const EvolutionaryRelation flux = build_relation(xyz, {var("z"), num(0), num(0)}, 2);
    const Pseudostructure sheet{{"a", "b"}, {{0, 1}, {0, 1}}, {parse("a"), parse("b"), parse("a*b")}, std::nullopt};
    const Restriction r2 = restrict_to_pseudostructure(flux, sheet);
    CHECK(r2.closed);
    CHECK(r2.coefficients[0].evaluate({{"a", 0.5}, {"b", 0.25}}) == 0.125);

    CHECK_THROWS_AS(restrict_to_pseudostructure(flux, curve("tau", "tau", 0, 1)), InvalidArgument);
    CHECK_THROWS_AS(restrict_to_pseudostructure(build_relation(xy, {var("x")}, 0), curve("tau", "tau", 0, 1)),
                    InvalidArgument);
}

TEST_CASE("pullbacks of one-forms are closed on curves") {
    Sampler rng(10);
    const std::vector<std::string> vars{"x", "y", "z"};
    for (int k = 0; k < 20; ++k) {
        const EvolutionaryRelation rel = build_relation(
            xyz, {random_expression(rng, vars, 3), random_expression(rng, vars, 3), random_expression(rng, vars, 3)}, 1);
        const Pseudostructure c{{"s"}, {{0, 1}}, {parse("cos(s)"), parse("s^2"), parse("s - 1")}, std::nullopt};
        const Restriction r = restrict_to_pseudostructure(rel, c);
        CHECK(r.closed);
        CHECK(differentiate(r.coefficients[0], "absent").is_zero());
        CHECK(r.pullback.chart().names() == std::vector<std::string>{"s"});
    }
}

TEST_CASE("state function extraction") {
    const Chart tau({"tau"});
    const StateFunction line = extract_state_function(one_form(tau, {num(1)}), 0, 0, 2 * std::numbers::pi, 64);
    REQUIRE(line.tau.size() == 65);
    for (std::size_t i = 0; i < line.tau.size(); ++i) CHECK(std::abs(line.psi[i] - line.tau[i]) <= 1e-10);

    const StateFunction quad = extract_state_function(one_form(tau, {parse("2*tau")}), 0, 0, 1.5, 32);
    for (std::size_t i = 0; i < quad.tau.size(); ++i) CHECK(std::abs(quad.psi[i] - quad.tau[i] * quad.tau[i]) <= 1e-10);
    CHECK(quad.error_estimate <= 1e-14);

    const StateFunction flat = extract_state_function(zero_form(tau, 1), 0, 3.5, 1, 8);
    for (const double p : flat.psi) CHECK(p == 3.5);

    const StateFunction wave = extract_state_function(one_form(tau, {parse("cos(tau)")}), 0, 1, 3, 40);
    double err = 0.0;
    for (std::size_t i = 0; i < wave.tau.size(); ++i) err = std::max(err, std::abs(wave.psi[i] - 1 - std::sin(wave.tau[i])));
    CHECK(err <= 1e-7);
    CHECK(wave.error_estimate > 0.0);
    CHECK(wave.error_estimate <= 1e-7);

    // central differences of psi recover the coefficient
    for (std::size_t i = 1; i + 1 < wave.tau.size(); ++i) {
        const double d = (wave.psi[i + 1] - wave.psi[i - 1]) / (wave.tau[i + 1] - wave.tau[i - 1]);
        CHECK(std::abs(d - std::cos(wave.tau[i])) <= 2e-3);
    }
    const StateFunction fine = extract_state_function(one_form(tau, {parse("cos(tau)")}), 0, 1, 3, 4000);
    for (std::size_t i = 1; i + 1 < fine.tau.size(); ++i) {
        const double d = (fine.psi[i + 1] - fine.psi[i - 1]) / (fine.tau[i + 1] - fine.tau[i - 1]);
        CHECK(std::abs(d - std::cos(fine.tau[i])) <= 1e-6);
    }

    CHECK_THROWS_AS(extract_state_function(one_form(tau, {parse("1/tau")}), 0, 0, 1, 8), SingularEvaluation);
    CHECK_THROWS_AS(extract_state_function(basis_form(xy, {0}), 0, 0, 1, 8), InvalidArgument);
}

TEST_CASE("circle bridge: nonidentical relation becomes identical on the structure") {
    const EvolutionaryRelation rot = build_relation(xy, {-var("y"), var("x")}, 1);
    CHECK(nonidentity_measure(rot, square_samples(3)).measure == 2.0);
    const Restriction r = restrict_to_pseudostructure(rot, curve("cos(tau)", "sin(tau)", 0, 2 * std::numbers::pi));
    const StateFunction psi = extract_state_function(r.pullback, 0, 0, 2 * std::numbers::pi, 64);
    for (std::size_t i = 0; i < psi.tau.size(); ++i) CHECK(std::abs(psi.psi[i] - psi.tau[i]) <= 1e-10);
}

TEST_CASE("exact relations integrate path-independently") {
    Sampler rng(15);
    for (int k = 0; k < 10; ++k) {
        const Expression f = random_polynomial(rng, {"x", "y"}, 4, 5) + sin(var("x") * var("y"));
        const DifferentialForm df = exterior_derivative(scalar_form(xy, f));
        const EvolutionaryRelation rel = build_relation(xy, df.coefficients(), 1);
        REQUIRE(nonidentity_measure(rel, square_samples(k)).measure <= 1e-12);
        const std::vector<double> a{-0.75, -0.5}, b{0.5, 0.75};
        const double via_x = path_integral(rel, {a, {b[0], a[1]}, b}, 64);
        const double via_y = path_integral(rel, {a, {a[0], b[1]}, b}, 64);
        const double stair = path_integral(rel, {a, {-0.25, -0.5}, {-0.25, 0.0}, {0.25, 0.0}, {0.25, 0.75}, b}, 64);
        CHECK(std::abs(via_x - via_y) <= 1e-8);
        CHECK(std::abs(via_x - stair) <= 1e-8);
        const double exact = f.evaluate({{"x", b[0]}, {"y", b[1]}}) - f.evaluate({{"x", a[0]}, {"y", a[1]}});
        CHECK(std::abs(via_x - exact) <= 1e-8);
    }
    // the rotation form is path dependent
    const EvolutionaryRelation rot = build_relation(xy, {-var("y"), var("x")}, 1);
    const double l = path_integral(rot, {{0, 0}, {1, 0}, {1, 1}}, 16);
    const double u = path_integral(rot, {{0, 0}, {0, 1}, {1, 1}}, 16);
    CHECK(std::abs(l - u - 2.0) <= 1e-12);
}

TEST_CASE("interaction classes") {
    CHECK(to_string(classify_interaction(0)) == "strong");
    CHECK(to_string(classify_interaction(1)) == "weak");
    CHECK(to_string(classify_interaction(2)) == "electromagnetic");
    CHECK(to_string(classify_interaction(3)) == "gravitational");
    CHECK_THROWS_AS(classify_interaction(4), InvalidArgument);
}

TEST_CASE("loci csv layout") {
    std::ostringstream out;
    write_loci_csv(out, xy, {{{1, 0}, 0}, {{0.5, -0.25}, 1e-7}});
    CHECK(out.str() == "x,y,abs_D\n1,0,0\n0.5,-0.25,1e-07\n");
}
