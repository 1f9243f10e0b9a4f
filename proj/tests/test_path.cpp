#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ppde/path.hpp"
#include "ppde/rng.hpp"

using namespace ppde;

namespace {

DiscretePath brownian_like(const TimeGrid& g, int dim, std::uint64_t seed) {
    RngStream rng(seed);
    DiscretePath p(g, dim);
    for (int i = 0; i < dim; ++i) p.at(0, i) = rng.normal();
    for (std::size_t k = 1; k < g.node_count(); ++k)
        for (int i = 0; i < dim; ++i)
            p.at(k, i) = p.at(k - 1, i) + std::sqrt(g.node(k) - g.node(k - 1)) * rng.normal();
    return p;
}

}  // namespace

TEST_CASE("uniform grid invariants") {
    const TimeGrid g = TimeGrid::uniform(1.0, 7);
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(7) == 1.0);
    for (std::size_t k = 0; k + 1 < g.node_count(); ++k) {
        CHECK(g.node(k) < g.node(k + 1));
        CHECK(std::abs(g.node(k + 1) - g.node(k) - 1.0 / 7.0) < 1e-14);
    }
    CHECK(g.floor_index(0.0) == 0);
    CHECK(g.floor_index(1.0) == 7);
    CHECK(g.floor_index(0.142857142857) == 0);
    CHECK(g.floor_index(g.node(3)) == 3);
    CHECK_THROWS_AS(TimeGrid::uniform(-1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::from_nodes({0.0, 0.5, 0.4, 1.0}), std::invalid_argument);
}

TEST_CASE("stop: identity at horizon, freeze at zero, linear ramp") {
    const TimeGrid g = TimeGrid::uniform(1.0, 10);
    DiscretePath x(g, 1);
    for (std::size_t k = 0; k < g.node_count(); ++k) x.at(k, 0) = g.node(k);  // x(s) = s

    const DiscretePath xT = stop(x, 1.0);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(xT.at(k, 0) == x.at(k, 0));

    const DiscretePath x0 = stop(x, 0.0);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(x0.at(k, 0) == x.at(0, 0));

    const DiscretePath xh = stop(x, 0.5);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        CHECK(xh.at(k, 0) == doctest::Approx(std::min(g.node(k), 0.5)).epsilon(1e-15));

    CHECK_THROWS_AS(stop(x, 1.5), std::domain_error);
    CHECK_THROWS_AS(stop(x, -0.1), std::domain_error);
}

TEST_CASE("stop idempotence on grid nodes") {
    const TimeGrid g = TimeGrid::uniform(2.0, 16);
    const DiscretePath x = brownian_like(g, 2, 11);
    for (std::size_t a = 0; a < g.node_count(); a += 3)
        for (std::size_t b = 0; b < g.node_count(); b += 5) {
            const double t = g.node(a), s = g.node(b);
            const DiscretePath lhs = stop(stop(x, t), s);
            const DiscretePath rhs = stop(x, std::min(s, t));
            for (std::size_t k = 0; k < g.node_count(); ++k)
                for (int i = 0; i < 2; ++i) CHECK(lhs.at(k, i) == rhs.at(k, i));
        }
}

TEST_CASE("sup_norm examples and monotonicity under stopping") {
    const TimeGrid g = TimeGrid::uniform(1.0, 10);
    const DiscretePath c = DiscretePath::constant(g, std::vector<double>{3.0, -4.0});
    CHECK(sup_norm(c) == doctest::Approx(5.0));

    DiscretePath ramp(g, 1);
    for (std::size_t k = 0; k < g.node_count(); ++k) ramp.at(k, 0) = g.node(k);
    CHECK(sup_norm(ramp) == doctest::Approx(1.0));

    DiscretePath two(g, 2);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        two.at(k, 0) = g.node(k);
        two.at(k, 1) = -2.0 * g.node(k);
    }
    CHECK(sup_norm(two) == doctest::Approx(std::sqrt(5.0)));

    const DiscretePath x = brownian_like(g, 2, 5);
    const double full = sup_norm(x);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(sup_norm(stop(x, g.node(k))) <= full);
    CHECK(sup_norm(stop(x, 0.333)) <= full);
}

TEST_CASE("d_infinity examples, symmetry, triangle inequality") {
    const TimeGrid g = TimeGrid::uniform(1.0, 20);
    const DiscretePath x = brownian_like(g, 1, 3);
    CHECK(d_infinity(0.4, x, 0.4, x) == 0.0);

    const DiscretePath c = DiscretePath::constant(g, std::vector<double>{1.5});
    CHECK(d_infinity(0.0, c, 1.0, c) == doctest::Approx(1.0));

    const DiscretePath zero = DiscretePath::constant(g, std::vector<double>{0.0});
    const DiscretePath one = DiscretePath::constant(g, std::vector<double>{1.0});
    CHECK(d_infinity(0.3, zero, 0.3, one) == doctest::Approx(1.0));

    const TimeGrid g7 = TimeGrid::uniform(1.0, 7);
    const DiscretePath other = brownian_like(g7, 1, 4);
    CHECK_THROWS_AS(d_infinity(0.1, x, 0.1, other), std::invalid_argument);

    RngStream rng(99);
    for (int n = 0; n < 1000; ++n) {
        const DiscretePath a = brownian_like(g, 1, 1000 + n);
        const DiscretePath b = brownian_like(g, 1, 2000 + n);
        const DiscretePath d = brownian_like(g, 1, 3000 + n);
        const double r = rng.uniform(), s = rng.uniform(), q = rng.uniform();
        const double dab = d_infinity(r, a, s, b);
        const double dba = d_infinity(s, b, r, a);
        CHECK(dab == doctest::Approx(dba).epsilon(1e-12));
        CHECK(dab <= d_infinity(r, a, q, d) + d_infinity(q, d, s, b) + 1e-12);
    }
}

TEST_CASE("vertical_bump examples and prefix exactness") {
    const TimeGrid g3 = TimeGrid::from_nodes({0.0, 0.5, 1.0});
    const DiscretePath zero = DiscretePath::constant(g3, std::vector<double>{0.0});
    const DiscretePath b = vertical_bump(zero, 0.5, std::vector<double>{1.0});
    CHECK(b.at(0, 0) == 0.0);
    CHECK(b.at(1, 0) == 1.0);
    CHECK(b.at(2, 0) == 1.0);

    const TimeGrid g = TimeGrid::uniform(1.0, 16);
    const DiscretePath x = brownian_like(g, 2, 8);
    const std::vector<double> h0{0.0, 0.0};
    const DiscretePath same = vertical_bump(x, 0.7, h0);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        for (int i = 0; i < 2; ++i) CHECK(same.at(k, i) == x.at(k, i));

    const std::vector<double> h{0.25, -1.0};
    const DiscretePath whole = vertical_bump(x, 0.0, h);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        for (int i = 0; i < 2; ++i) CHECK(whole.at(k, i) == x.at(k, i) + h[i]);

    const double t = 0.53;  // off-grid: snaps to the first node >= t
    const DiscretePath bumped = vertical_bump(x, t, h);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        for (int i = 0; i < 2; ++i) {
            if (g.node(k) < t)
                CHECK(bumped.at(k, i) == x.at(k, i));
            else
                CHECK(bumped.at(k, i) == x.at(k, i) + h[i]);
        }
    CHECK_THROWS_AS(vertical_bump(x, 1.2, h), std::domain_error);
}

TEST_CASE("views match materialized stops exactly at grid times") {
    const TimeGrid g = TimeGrid::uniform(1.0, 12);
    const DiscretePath x = brownian_like(g, 1, 21);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const double t = g.node(k);
        const PathView v = stopped_view(x.view(), t);
        const DiscretePath m = stop(x, t);
        for (std::size_t j = 0; j < g.node_count(); ++j) CHECK(v.coord(j, 0) == m.at(j, 0));
        CHECK(v.value_at1(0.77) == doctest::Approx(m.value_at1(std::min(0.77, t))).epsilon(1e-15));
    }
}

TEST_CASE("resample preserves piecewise-linear values") {
    const TimeGrid coarse = TimeGrid::uniform(1.0, 4);
    const TimeGrid fine = TimeGrid::uniform(1.0, 12);
    const DiscretePath x = brownian_like(coarse, 1, 13);
    const DiscretePath y = resample(x, fine);
    for (std::size_t k = 0; k < fine.node_count(); ++k)
        CHECK(y.at(k, 0) == doctest::Approx(x.value_at1(fine.node(k))).epsilon(1e-14));
}
