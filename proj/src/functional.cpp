#include "ppde/functional.hpp"

#include <cmath>
#include <stdexcept>

#include "ppde/rng.hpp"

namespace ppde {

FunctionalHandle constant_functional(double c) {
    return {[c](double, const PathView&) { return c; }, "const"};
}

VectorFunctional constant_vector(std::vector<double> v) {
    return {[v = std::move(v)](double, const PathView&, double* out) {
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
            },
            "const-vector"};
}

MatrixFunctional constant_matrix(std::vector<double> colmajor, int dim) {
    if (colmajor.size() != static_cast<std::size_t>(dim) * dim)
        throw std::invalid_argument("constant_matrix: wrong element count");
    return {[m = std::move(colmajor)](double, const PathView&, double* out) {
                for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i];
            },
            "const-matrix"};
}

MatrixFunctional scalar_matrix(FunctionalHandle scale, int dim) {
    return {[scale = std::move(scale), dim](double t, const PathView& x, double* out) {
                const double s = scale.eval(t, x);
                for (int j = 0; j < dim; ++j)
                    for (int i = 0; i < dim; ++i) out[j * dim + i] = (i == j) ? s : 0.0;
            },
            "scalar*I"};
}

VectorFunctional zero_vector(int dim) {
    return {[dim](double, const PathView&, double* out) {
                for (int i = 0; i < dim; ++i) out[i] = 0.0;
            },
            "zero"};
}

TerminalFunctional constant_terminal(double c) {
    return {[c](const PathView&) { return c; }, "const", true};
}

namespace {

DiscretePath random_path(const TimeGrid& grid, int dim, RngStream& rng) {
    DiscretePath p(grid, dim);
    for (int i = 0; i < dim; ++i) p.at(0, i) = rng.normal();
    for (std::size_t k = 1; k < grid.node_count(); ++k) {
        const double sdt = std::sqrt(grid.node(k) - grid.node(k - 1));
        for (int i = 0; i < dim; ++i) p.at(k, i) = p.at(k - 1, i) + sdt * rng.normal();
    }
    return p;
}

template <typename Eval>
double gap_impl(const Eval& eval, const TimeGrid& grid, int dim, int trials, std::uint64_t seed) {
    RngStream root(seed);
    double worst = 0.0;
    for (int n = 0; n < trials; ++n) {
        RngStream rng = root.child(static_cast<std::uint64_t>(n));
        DiscretePath x = random_path(grid, dim, rng);
        // grid times exercise the exact stopped-path contract
        const std::size_t k = grid.floor_index(rng.uniform() * grid.horizon());
        const double t = grid.node(k);
        const DiscretePath xs = stop(x, t);
        const double g = eval(t, x.view(), xs.view());
        if (g > worst) worst = g;
    }
    return worst;
}

}  // namespace

double anticipation_gap(const FunctionalHandle& u, const TimeGrid& grid, int dim,
                        int trials, std::uint64_t seed) {
    return gap_impl(
        [&](double t, const PathView& full, const PathView& stopped) {
            return std::abs(u.eval(t, full) - u.eval(t, stopped));
        },
        grid, dim, trials, seed);
}

double anticipation_gap(const VectorFunctional& u, const TimeGrid& grid, int dim,
                        int trials, std::uint64_t seed) {
    std::vector<double> a(static_cast<std::size_t>(dim)), b(static_cast<std::size_t>(dim));
    return gap_impl(
        [&](double t, const PathView& full, const PathView& stopped) {
            u.eval(t, full, a.data());
            u.eval(t, stopped, b.data());
            double m = 0.0;
            for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(a[i] - b[i]));
            return m;
        },
        grid, dim, trials, seed);
}

namespace {

void assert_gap(double gap, double tol, const std::string& label) {
    if (gap > tol)
        throw std::logic_error("functional '" + label + "' is anticipative: gap " +
                               std::to_string(gap));
}

}  // namespace

void assert_nonanticipative(const FunctionalHandle& u, const TimeGrid& grid, int dim,
                            int trials, std::uint64_t seed, double tol) {
    assert_gap(anticipation_gap(u, grid, dim, trials, seed), tol, u.label);
}

void assert_nonanticipative(const VectorFunctional& u, const TimeGrid& grid, int dim,
                            int trials, std::uint64_t seed, double tol) {
    assert_gap(anticipation_gap(u, grid, dim, trials, seed), tol, u.label);
}

}  // namespace ppde
