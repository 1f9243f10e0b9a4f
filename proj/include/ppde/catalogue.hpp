#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "ppde/functional.hpp"

namespace ppde {
namespace catalogue {

/// A functional together with its closed-form path-space derivatives, used to
/// pin the finite-difference operators against known values.
struct AnalyticFunctional {
    FunctionalHandle u;
    int dim = 1;
    std::function<double(double, const PathView&)> dt;
    std::function<Eigen::VectorXd(double, const PathView&)> grad;
    std::function<Eigen::MatrixXd(double, const PathView&)> hess;
};

/// u(t,x) = x_i(t).
AnalyticFunctional coordinate(int i = 0, int dim = 1);

/// u(t,x) = integral_0^t x_1(s) ds by left-endpoint quadrature on the grid.
AnalyticFunctional running_integral(int dim = 1);

/// u(t,x) = x(t)^2 + (horizon - t); solves the one-dimensional heat equation
/// along Brownian paths.
AnalyticFunctional heat_functional(double horizon);

/// u(t,x) = |x(t)|^2 in d dimensions.
AnalyticFunctional squared_norm(int dim);

/// u(t,x) = x_1(t) * x_2(t) in d = 2.
AnalyticFunctional coordinate_product();

/// u(t,x) = c / (1 + c (horizon - t)); path independent, solves u' = u^2
/// backward from u(horizon) = c.
AnalyticFunctional riccati(double c, double horizon);

/// The five path functionals exercised by check-derivs.
std::vector<AnalyticFunctional> standard_battery(double horizon);

/// Left-endpoint prefix integral of coordinate i up to time t; the quadrature
/// convention shared with the simulator, so its horizontal derivative is
/// exactly x_i(t) at grid times.
double prefix_integral(const PathView& x, int i, double t);

}  // namespace catalogue
}  // namespace ppde
