#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ppde/path.hpp"

namespace ppde {

/// A non-anticipative functional u(t, x). The evaluator must satisfy
/// u(t, x) = u(t, x stopped at t); assert_nonanticipative samples that
/// contract. Evaluators must be safe for concurrent invocation and must be
/// well-defined on paths carrying a single vertical jump (bumped paths).
struct FunctionalHandle {
    std::function<double(double, const PathView&)> eval;
    std::string label;

    double operator()(double t, const PathView& x) const { return eval(t, x); }
};

/// d-vector valued coefficient functional; writes into out[0..dim).
struct VectorFunctional {
    std::function<void(double, const PathView&, double*)> eval;
    std::string label;
};

/// d x d matrix valued coefficient functional; writes column-major into out.
struct MatrixFunctional {
    std::function<void(double, const PathView&, double*)> eval;
    std::string label;
};

/// Terminal payoff g(x). `path_independent` marks payoffs that ignore the
/// path entirely (a constant), which enables the ODE solver fast path.
struct TerminalFunctional {
    std::function<double(const PathView&)> eval;
    std::string label;
    bool path_independent = false;

    double operator()(const PathView& x) const { return eval(x); }
};

FunctionalHandle constant_functional(double c);
VectorFunctional constant_vector(std::vector<double> v);
MatrixFunctional constant_matrix(std::vector<double> colmajor, int dim);
MatrixFunctional scalar_matrix(FunctionalHandle scale, int dim);
VectorFunctional zero_vector(int dim);
TerminalFunctional constant_terminal(double c);

/// Largest |u(t,x) - u(t, x^t)| over random Brownian-like paths and times.
/// Functionals built from the library primitives come out exactly zero.
double anticipation_gap(const FunctionalHandle& u, const TimeGrid& grid, int dim,
                        int trials, std::uint64_t seed);
double anticipation_gap(const VectorFunctional& u, const TimeGrid& grid, int dim,
                        int trials, std::uint64_t seed);

/// Throws std::logic_error naming the functional if the gap exceeds tol.
void assert_nonanticipative(const FunctionalHandle& u, const TimeGrid& grid, int dim,
                            int trials, std::uint64_t seed, double tol = 0.0);
void assert_nonanticipative(const VectorFunctional& u, const TimeGrid& grid, int dim,
                            int trials, std::uint64_t seed, double tol = 0.0);

}  // namespace ppde
