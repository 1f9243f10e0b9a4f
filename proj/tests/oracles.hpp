#pragma once

// Test-only reference computations, independent of the library code paths
// they are used to check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracles {

/// Classical 4-stage Runge-Kutta for the scalar terminal value problem
/// u'(s) = rhs(s, u(s)), u(horizon) = terminal, marched backward on a
/// uniform grid with `steps` intervals. Returns u at every node.
inline std::vector<double> rk4_backward(const std::function<double(double, double)>& rhs,
                                        double terminal, double horizon, std::size_t steps) {
    std::vector<double> u(steps + 1);
    const double dt = horizon / static_cast<double>(steps);
    u[steps] = terminal;
    for (std::size_t k = steps; k-- > 0;) {
        const double t1 = static_cast<double>(k + 1) * dt;
        const double h = -dt;  // backward step
        const double y = u[k + 1];
        const double k1 = rhs(t1, y);
        const double k2 = rhs(t1 + 0.5 * h, y + 0.5 * h * k1);
        const double k3 = rhs(t1 + 0.5 * h, y + 0.5 * h * k2);
        const double k4 = rhs(t1 + h, y + h * k3);
        u[k] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return u;
}

/// Closed form for u' = u^2, u(horizon) = c: u(s) = c / (1 + c (horizon - s)).
inline double riccati_exact(double c, double horizon, double s) {
    return c / (1.0 + c * (horizon - s));
}

/// Plain one-dimensional Markovian Euler scheme with its own generator-free
/// bookkeeping: X_{k+1} = X_k + b(t_k, X_k) dt + s(t_k, X_k) sqrt(dt) Z.
/// Returns terminal values for n paths; `normal` supplies the draws.
inline std::vector<double> markov_euler_terminals(
    const std::function<double(double, double)>& drift,
    const std::function<double(double, double)>& vol, double x0, double horizon,
    std::size_t steps, std::size_t n_paths, const std::function<double()>& normal) {
    std::vector<double> out(n_paths);
    const double dt = horizon / static_cast<double>(steps);
    const double sdt = std::sqrt(dt);
    for (std::size_t p = 0; p < n_paths; ++p) {
        double x = x0;
        double t = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            x += drift(t, x) * dt + vol(t, x) * sdt * normal();
            t += dt;
        }
        out[p] = x;
    }
    return out;
}

}  // namespace oracles
