#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ppde/diffusion.hpp"
#include "ppde/diffusion_spec.hpp"
#include "ppde/estimate.hpp"
#include "ppde/functional.hpp"
#include "ppde/nonlinearity.hpp"

namespace ppde {

/// Terminal value problem in mild (integral equation) form:
/// u(r,x) = E_{r,x}[ g(X^T) ] - E_{r,x}[ int_r^T f(s, X^s, u(s, X^s)) ds ].
struct MildProblem {
    DiffusionSpec spec;
    Nonlinearity f;
    TerminalFunctional g;
};

enum class SolverBackend { nested_mc, regression, ode_fast_path };

/// Successive-substitution solver configuration.
///
/// nested_mc runs `picard_iters` nested ensemble levels with sizes
/// `budgets[0..picard_iters)`; each path estimates the time integral at one
/// uniformly drawn time and spawns one sub-ensemble there. The deepest level
/// closes the recursion with the path's own terminal sample standing in for
/// the zeroth iterate, so the bottom ensemble already realizes the first
/// substitution. Total cost is the product of the budgets.
///
/// regression keeps one outer ensemble of `outer_paths` paths and represents
/// each iterate at each grid time as a least-squares fit on `features`
/// (default: 1, x_i, x_i x_j, prefix integrals of x_i).
///
/// ode_fast_path integrates the backward equation u' = f(t, u), u(T) = g with
/// classical fourth-order Runge-Kutta; valid only when f and g are tagged
/// path independent, where it is the exact reduction of the integral equation.
struct SolverConfig {
    SolverBackend backend = SolverBackend::regression;
    int picard_iters = 4;
    std::size_t outer_paths = 4096;
    std::vector<std::size_t> budgets = {1024, 256, 64, 16};
    std::vector<FunctionalHandle> features;  // regression basis; empty selects the default
    double tolerance = 1e-3;
    TimeGrid grid;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

struct SolveDiagnostics {
    int iterations = 0;
    std::vector<double> iteration_changes;  // successive-iterate changes at the probe point
    double fixed_point_residual = std::numeric_limits<double>::quiet_NaN();
    std::size_t clamp_count = 0;
    double terminal_abs_max = 0.0;  // running max of |g| over sampled paths
    bool converged = true;
    double runtime_ms = 0.0;
    std::string backend_name;
};

struct SolveResult {
    EstimateWithError estimate;
    SolveDiagnostics diagnostics;
    /// Iterate as a functional of (t, path): regression and ODE backends only.
    FunctionalHandle u_hat;
    bool has_u_hat = false;
};

/// Approximate the mild solution value at (r, x).
SolveResult solve_point(double r, const DiscretePath& x, const MildProblem& prob,
                        const SolverConfig& cfg);

/// Project z onto the (eps-shrunk on open ends) domain interval.
double clamp_to_domain(double z, const DomainInterval& D, double eps);

struct ProbePoint {
    double r = 0.0;
    DiscretePath x;
};

struct ResidualReport {
    double worst_abs_residual = 0.0;
    double std_error = 0.0;  // of the worst probe
    std::vector<EstimateWithError> per_probe;
};

/// Defect of the integral equation for a candidate u_hat, by fresh simulation
/// at each probe: E[g] - u_hat(r,x) - E[int f(., ., u_hat)].
ResidualReport fixed_point_residual(const FunctionalHandle& u_hat, const MildProblem& prob,
                                    const std::vector<ProbePoint>& probes, const SimConfig& cfg);

}  // namespace ppde
