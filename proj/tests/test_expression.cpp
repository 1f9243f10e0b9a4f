#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ppde/expression.hpp"
#include "ppde/functional.hpp"

using namespace ppde;

namespace {

const TimeGrid kGrid = TimeGrid::uniform(2.0, 10);

DiscretePath ramp2() {
    DiscretePath p(kGrid, 2);
    for (std::size_t k = 0; k < kGrid.node_count(); ++k) {
        p.at(k, 0) = kGrid.node(k);          // x1(s) = s
        p.at(k, 1) = 1.0 - kGrid.node(k);    // x2(s) = 1 - s
    }
    return p;
}

}  // namespace

TEST_CASE("constants, precedence, unary minus, power association") {
    const DiscretePath x = ramp2();
    auto ev = [&](const std::string& s) { return parse_expression(s, 2.0).eval(0.5, x.view()); };
    CHECK(ev("1 + 2 * 3") == 7.0);
    CHECK(ev("(1 + 2) * 3") == 9.0);
    CHECK(ev("-2^2") == -4.0);
    CHECK(ev("2^3^2") == 512.0);  // right associative
    CHECK(ev("6 / 3 / 2") == 1.0);
    CHECK(ev("min(2, max(3, 1))") == 2.0);
    CHECK(ev("exp(0)") == 1.0);
    CHECK(ev("T - t") == 1.5);
}

TEST_CASE("path variables and running integrals") {
    const DiscretePath x = ramp2();
    auto at = [&](const std::string& s, double t) {
        return parse_expression(s, 2.0).eval(t, x.view());
    };
    CHECK(at("x1", 0.6) == doctest::Approx(0.6));
    CHECK(at("x1(t)", 0.6) == doctest::Approx(0.6));
    CHECK(at("x", 0.6) == doctest::Approx(0.6));  // alias for x1
    CHECK(at("x2", 0.6) == doctest::Approx(0.4));
    // left-endpoint integral of s over [0, 0.6]: sum s_k (s_{k+1}-s_k)
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < kGrid.node_count(); ++k) {
        if (kGrid.node(k) >= 0.6) break;
        acc += kGrid.node(k) * (std::min(kGrid.node(k + 1), 0.6) - kGrid.node(k));
    }
    CHECK(at("ix1", 0.6) == doctest::Approx(acc).epsilon(1e-14));
    CHECK(at("ix", 0.6) == doctest::Approx(acc).epsilon(1e-14));
    CHECK(at("x1^2 + (T - t)", 0.6) == doctest::Approx(0.36 + 1.4));
}

TEST_CASE("dependence metadata") {
    CHECK_FALSE(parse_expression("1 + t", 1.0).depends_on_path());
    CHECK(parse_expression("x1", 1.0).depends_on_path());
    CHECK(parse_expression("ix3", 1.0).max_coordinate() == 3);
    CHECK(parse_expression("exp(-t)", 1.0).max_coordinate() == 0);
}

TEST_CASE("terminal payoff evaluates at the horizon") {
    const DiscretePath x = ramp2();
    const TerminalFunctional g = parse_expression("x1^2", 2.0).to_terminal();
    CHECK(g.eval(x.view()) == doctest::Approx(4.0));
    CHECK_FALSE(g.path_independent);
    const TerminalFunctional c = parse_expression("2.5", 2.0).to_terminal();
    CHECK(c.path_independent);
    CHECK(c.eval(x.view()) == 2.5);
}

TEST_CASE("expression-built functionals are exactly non-anticipative") {
    for (const char* text : {"x1^2 + (T - t)", "ix1 * x1", "min(x1, 2) + exp(-ix1)",
                             "max(x1, x2) / (1 + t)"}) {
        const FunctionalHandle h = parse_expression(text, 2.0).to_functional();
        CHECK(anticipation_gap(h, kGrid, 2, 100, 61) == 0.0);
    }
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse_expression("1 +", 1.0), std::invalid_argument);
    CHECK_THROWS_AS(parse_expression("foo(2)", 1.0), std::invalid_argument);
    CHECK_THROWS_AS(parse_expression("min(1)", 1.0), std::invalid_argument);
    CHECK_THROWS_AS(parse_expression("x12", 1.0), std::invalid_argument);
    CHECK_THROWS_AS(parse_expression("(1 + 2", 1.0), std::invalid_argument);
    CHECK_THROWS_AS(parse_expression("1 2", 1.0), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_expression("2 * @", 1.0), doctest::Contains("position"),
                         std::invalid_argument);
}
