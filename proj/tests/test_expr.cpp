#include <bit>
#include <thread>

#include "doctest.h"
#include "support.hpp"

using namespace testing;

TEST_CASE("parse builds the expected trees") {
    const Expression e = parse("x*y + 1");
    CHECK(e.op() == Op::Add);
    CHECK(e.child(0).op() == Op::Mul);
    CHECK(e.child(1).is_one());
    CHECK(e.free_variables() == std::vector<std::string>{"x", "y"});

    const Expression s = parse("sin(x)^2");
    CHECK(s.op() == Op::Pow);
    CHECK(s.child(0).op() == Op::Sin);
    CHECK(s.child(1).value() == 2.0);
}

TEST_CASE("precedence and associativity") {
    CHECK(parse("2^3^2").evaluate({}) == 512.0);
    CHECK(parse("-x^2").evaluate({{"x", 3.0}}) == -9.0);
    CHECK(parse("2^-1").evaluate({}) == 0.5);
    CHECK(parse("8/4/2").evaluate({}) == 1.0);
    CHECK(parse("1 - 2 - 3").evaluate({}) == -4.0);
    CHECK(parse("1.5e2 + .5").evaluate({}) == 150.5);
}

TEST_CASE("syntax errors carry the byte offset") {
    try {
        (void)parse("x + * y");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
    }
    CHECK_THROWS_AS((void)parse("2x"), ParseError);
    CHECK_THROWS_AS((void)parse("(x"), ParseError);
    CHECK_THROWS_AS((void)parse(""), ParseError);
    CHECK_THROWS_AS((void)parse("sin x"), ParseError);
    try {
        (void)parse("1 + tan(x)");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
        CHECK(std::string(e.what()).find("unknown function") != std::string::npos);
    }
}

TEST_CASE("evaluation and its failure modes") {
    CHECK(parse("x*y+1").evaluate({{"x", 2.0}, {"y", 3.0}}) == 7.0);
    CHECK(parse("sin(x)").evaluate({{"x", 0.0}}) == 0.0);
    CHECK_THROWS_AS(parse("1/x").evaluate({{"x", 0.0}}), SingularEvaluation);
    CHECK_THROWS_AS(parse("ln(x)").evaluate({{"x", 0.0}}), SingularEvaluation);
    CHECK_THROWS_AS(parse("ln(x)").evaluate({{"x", -1.0}}), SingularEvaluation);
    CHECK_THROWS_AS(parse("sqrt(x)").evaluate({{"x", -1.0}}), SingularEvaluation);
    CHECK_THROWS_AS(parse("x^0.5").evaluate({{"x", -1.0}}), SingularEvaluation);
    CHECK_THROWS_AS(parse("exp(x)").evaluate({{"x", 1000.0}}), SingularEvaluation);
    CHECK_THROWS_AS(parse("x + y").evaluate({{"x", 1.0}}), UnboundVariableError);
    CHECK(parse("(-2)^3").evaluate({}) == -8.0);
}

TEST_CASE("singular constants are not folded away") {
    const Expression e = parse("1/0");
    CHECK_FALSE(e.is_constant());
    CHECK_THROWS_AS(e.evaluate({}), SingularEvaluation);
}

TEST_CASE("simplification removes literal zeros and ones") {
    const Expression x = var("x");
    CHECK(identical(x + num(0.0), x));
    CHECK(identical(num(1.0) * x, x));
    CHECK(identical(x / num(1.0), x));
    CHECK((num(0.0) * x).is_zero());
    CHECK((num(2.0) * num(3.0)).value() == 6.0);
    CHECK(identical(pow(x, num(1.0)), x));
}

TEST_CASE("derivatives from the rule table") {
    const Expression x2y = parse("x^2*y");
    const Expression d = differentiate(x2y, "x");
    CHECK(d.evaluate({{"x", 3.0}, {"y", 2.0}}) == 12.0);
    CHECK(d.evaluate({{"x", -1.5}, {"y", 0.25}}) == doctest::Approx(2.0 * -1.5 * 0.25).epsilon(1e-15));
    CHECK(differentiate(parse("sin(x)"), "y").is_zero());

    const Expression q = parse("x/(x^2+1)");
    const Expression dq = differentiate(q, "x");
    CHECK(std::abs(dq.evaluate({{"x", 1.0}})) <= 1e-15);
    const double fd = central_difference(q, "x", {{"x", 1.0}}, 1e-5);
    CHECK(std::abs(dq.evaluate({{"x", 1.0}}) - fd) <= 1e-8);
    // (1 - x^2) / (x^2 + 1)^2 at x = 2
    CHECK(dq.evaluate({{"x", 2.0}}) == doctest::Approx(-3.0 / 25.0).epsilon(1e-14));

    // general power a^b
    const Expression g = parse("x^y");
    const Point p{{"x", 1.7}, {"y", 2.3}};
    CHECK(differentiate(g, "y").evaluate(p) == doctest::Approx(std::pow(1.7, 2.3) * std::log(1.7)).epsilon(1e-14));
    CHECK(differentiate(g, "x").evaluate(p) == doctest::Approx(2.3 * std::pow(1.7, 1.3)).epsilon(1e-14));
}

TEST_CASE("print and parse round trip bitwise") {
    Sampler rng(11);
    const std::vector<std::string> vars{"x", "y", "z"};
    for (int k = 0; k < 200; ++k) {
        const Expression e = random_expression(rng, vars, 5);
        const Expression back = parse(e.to_string());
        INFO(e.to_string());
        CHECK(identical(back, e));
        for (int s = 0; s < 5; ++s) {
            const Point p{{"x", rng.uniform(-2, 2)}, {"y", rng.uniform(-2, 2)}, {"z", rng.uniform(-2, 2)}};
            double a = 0.0, b = 0.0;
            try {
                a = e.evaluate(p);
            } catch (const SingularEvaluation&) {
                continue;
            }
            b = back.evaluate(p);
            CHECK(std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b));
        }
    }
}

TEST_CASE("derivatives agree with central differences") {
    Sampler rng(5);
    const std::vector<std::string> vars{"x", "y"};
    int checked = 0;
    for (int k = 0; k < 100; ++k) {
        const Expression e = random_expression(rng, vars, 5);
        const Expression dx = differentiate(e, "x");
        const Point p{{"x", rng.uniform(-1.5, 1.5)}, {"y", rng.uniform(-1.5, 1.5)}};
        double exact = 0.0, fd = 0.0;
        try {
            exact = dx.evaluate(p);
            fd = central_difference(e, "x", p, 1e-5);
        } catch (const SingularEvaluation&) {
            continue;
        }
        ++checked;
        INFO(e.to_string());
        CHECK(std::abs(exact - fd) <= 1e-6 * (1.0 + std::abs(exact)));
    }
    CHECK(checked >= 90);
}

TEST_CASE("differentiation is linear") {
    Sampler rng(17);
    const std::vector<std::string> vars{"x", "y"};
    for (int k = 0; k < 50; ++k) {
        const Expression e1 = random_expression(rng, vars, 4);
        const Expression e2 = random_expression(rng, vars, 4);
        const double a = rng.uniform(-3, 3);
        const Expression lhs = differentiate(a * e1 + e2, "x");
        const Expression d1 = differentiate(e1, "x");
        const Expression d2 = differentiate(e2, "x");
        const Point p{{"x", rng.uniform(-1, 1)}, {"y", rng.uniform(-1, 1)}};
        try {
            const double l = lhs.evaluate(p);
            const double r = a * d1.evaluate(p) + d2.evaluate(p);
            CHECK(std::abs(l - r) <= 1e-12 * (1.0 + std::abs(l)));
        } catch (const SingularEvaluation&) {
        }
    }
}

TEST_CASE("free variables cover every referenced name") {
    Sampler rng(23);
    const std::vector<std::string> vars{"a", "b", "c", "d"};
    for (int k = 0; k < 100; ++k) {
        const Expression e = random_expression(rng, vars, 5);
        const auto& fv = e.free_variables();
        CHECK(std::is_sorted(fv.begin(), fv.end()));
        for (const auto& v : vars) {
            const bool listed = std::find(fv.begin(), fv.end(), v) != fv.end();
            CHECK(listed == e.depends_on(v));
            if (!listed) CHECK(differentiate(e, v).is_zero());
        }
    }
}

TEST_CASE("compiled evaluation matches tree evaluation") {
    Sampler rng(29);
    const std::vector<std::string> vars{"x", "y", "z"};
    for (int k = 0; k < 100; ++k) {
        const Expression e = random_expression(rng, vars, 5);
        const CompiledExpression c(e, vars);
        const std::vector<double> v{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const Point p{{"x", v[0]}, {"y", v[1]}, {"z", v[2]}};
        try {
            const double a = e.evaluate(p);
            CHECK(std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(c(v)));
        } catch (const SingularEvaluation&) {
            CHECK_THROWS_AS(c(v), SingularEvaluation);
        }
    }
    CHECK_THROWS_AS(CompiledExpression(parse("x + w"), vars), UnboundVariableError);
}

TEST_CASE("substitution") {
    const Expression e = parse("x^2 + y");
    const Expression s = e.substitute({{"x", parse("cos(t)")}});
    CHECK(s.evaluate({{"t", 0.0}, {"y", 1.0}}) == 2.0);
    CHECK_FALSE(s.depends_on("x"));
}

TEST_CASE("expressions are shareable across threads") {
    const Expression e = parse("sin(x)*cos(y) + x^3");
    std::vector<double> out(4);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            double acc = 0.0;
            for (int i = 0; i < 1000; ++i) acc += e.evaluate({{"x", 0.001 * i}, {"y", 0.5}});
            out[t] = acc;
        });
    }
    for (auto& th : threads) th.join();
    CHECK(out[0] == out[1]);
    CHECK(out[2] == out[3]);
    CHECK(out[0] == out[3]);
}
