#pragma once

#include <Eigen/Core>

#include "ppde/diffusion_spec.hpp"
#include "ppde/functional.hpp"
#include "ppde/nonlinearity.hpp"

namespace ppde {

/// Finite-difference steps for the path-space derivatives.
/// step_h <= 0 or time_step_h <= 0 selects the defaults: one grid step for
/// the horizontal bump and 1e-4 * max(1, sup_norm(x)) for the vertical one.
struct DerivativeConfig {
    enum class Scheme { forward, central };
    double step_h = -1.0;
    double time_step_h = -1.0;
    Scheme horizontal_scheme = Scheme::forward;

    double vertical_step(const PathView& x) const {
        return step_h > 0.0 ? step_h : 1e-4 * std::max(1.0, sup_norm(x));
    }
    double horizontal_step(const TimeGrid& grid) const {
        return time_step_h > 0.0 ? time_step_h : grid.dt();
    }
};

/// d/dh u(t + h, x^t) at h = 0. Forward difference by default; the central
/// scheme additionally requires t - h >= 0 and a functional defined there.
double horizontal_derivative(const FunctionalHandle& u, double t, const PathView& x,
                             const DerivativeConfig& cfg);

/// d/dh u(t, x + h e_i 1_{[t,T]}) at h = 0, central differences per coordinate.
Eigen::VectorXd vertical_gradient(const FunctionalHandle& u, double t, const PathView& x,
                                  const DerivativeConfig& cfg);

/// Second vertical derivative from central second differences on doubly
/// bumped paths, symmetrized as (H + H^T)/2. If asymmetry_out is given it
/// receives the largest |H_ij - H_ji| before symmetrization.
Eigen::MatrixXd vertical_hessian(const FunctionalHandle& u, double t, const PathView& x,
                                 const DerivativeConfig& cfg, double* asymmetry_out = nullptr);

/// (1/2) tr(a H) + b . grad with a = sigma sigma^T from the spec.
double apply_generator(const DiffusionSpec& spec, const FunctionalHandle& u, double t,
                       const PathView& x, const DerivativeConfig& cfg);

/// (d_t + L)(u)(t,x) - f(t, x, u(t,x)); zero, up to discretization error,
/// exactly when u solves the equation at (t, x).
double ppde_residual(const DiffusionSpec& spec, const Nonlinearity& f,
                     const FunctionalHandle& u, double t, const PathView& x,
                     const DerivativeConfig& cfg);

/// d_t + L applied to one functional, shared by the martingale checks.
double generator_plus_dt(const DiffusionSpec& spec, const FunctionalHandle& u, double t,
                         const PathView& x, const DerivativeConfig& cfg);

}  // namespace ppde
