#include "ppde/derivative.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ppde {

double horizontal_derivative(const FunctionalHandle& u, double t, const PathView& x,
                             const DerivativeConfig& cfg) {
    if (!(t < x.horizon())) throw std::domain_error("horizontal_derivative: t must be < horizon");
    const double h = cfg.horizontal_step(*x.grid);
    if (t + h > x.horizon())
        throw std::domain_error("horizontal_derivative: t + step exceeds horizon");
    const PathView xs = stopped_view(x, t);
    if (cfg.horizontal_scheme == DerivativeConfig::Scheme::central) {
        if (t - h < 0.0)
            throw std::domain_error("horizontal_derivative: central scheme needs t - step >= 0");
        return (u.eval(t + h, xs) - u.eval(t - h, xs)) / (2.0 * h);
    }
    return (u.eval(t + h, xs) - u.eval(t, xs)) / h;
}

Eigen::VectorXd vertical_gradient(const FunctionalHandle& u, double t, const PathView& x,
                                  const DerivativeConfig& cfg) {
    if (!(t < x.horizon())) throw std::domain_error("vertical_gradient: t must be < horizon");
    const int d = x.dim;
    const double h = cfg.vertical_step(x);
    Eigen::VectorXd g(d);
    std::vector<double> e(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
        e[i] = h;
        const double up = u.eval(t, bumped_view(x, t, e.data()));
        e[i] = -h;
        const double dn = u.eval(t, bumped_view(x, t, e.data()));
        e[i] = 0.0;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd vertical_hessian(const FunctionalHandle& u, double t, const PathView& x,
                                 const DerivativeConfig& cfg, double* asymmetry_out) {
    if (!(t < x.horizon())) throw std::domain_error("vertical_hessian: t must be < horizon");
    const int d = x.dim;
    const double h = cfg.vertical_step(x);
    Eigen::MatrixXd H(d, d);
    std::vector<double> e(static_cast<std::size_t>(d), 0.0);
    const double u0 = u.eval(t, x);
    for (int i = 0; i < d; ++i) {
        e[i] = h;
        const double up = u.eval(t, bumped_view(x, t, e.data()));
        e[i] = -h;
        const double dn = u.eval(t, bumped_view(x, t, e.data()));
        e[i] = 0.0;
        H(i, i) = (up - 2.0 * u0 + dn) / (h * h);
        for (int j = i + 1; j < d; ++j) {
            // standard 4-point cross stencil
            e[i] = h;
            e[j] = h;
            const double pp = u.eval(t, bumped_view(x, t, e.data()));
            e[j] = -h;
            const double pm = u.eval(t, bumped_view(x, t, e.data()));
            e[i] = -h;
            const double mm = u.eval(t, bumped_view(x, t, e.data()));
            e[j] = h;
            const double mp = u.eval(t, bumped_view(x, t, e.data()));
            e[i] = 0.0;
            e[j] = 0.0;
            const double v = (pp - pm - mp + mm) / (4.0 * h * h);
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    if (asymmetry_out) {
        double a = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) a = std::max(a, std::abs(H(i, j) - H(j, i)));
        *asymmetry_out = a;
    }
    Eigen::MatrixXd sym = 0.5 * (H + H.transpose());
    return sym;
}

double apply_generator(const DiffusionSpec& spec, const FunctionalHandle& u, double t,
                       const PathView& x, const DerivativeConfig& cfg) {
    const int d = x.dim;
    Eigen::MatrixXd sigma(d, d);
    Eigen::VectorXd b(d);
    spec.sigma.eval(t, x, sigma.data());
    spec.drift.eval(t, x, b.data());
    const Eigen::MatrixXd a = sigma * sigma.transpose();
    const Eigen::MatrixXd H = vertical_hessian(u, t, x, cfg);
    const Eigen::VectorXd g = vertical_gradient(u, t, x, cfg);
    return 0.5 * (a * H).trace() + b.dot(g);
}

double generator_plus_dt(const DiffusionSpec& spec, const FunctionalHandle& u, double t,
                         const PathView& x, const DerivativeConfig& cfg) {
    return horizontal_derivative(u, t, x, cfg) + apply_generator(spec, u, t, x, cfg);
}

double ppde_residual(const DiffusionSpec& spec, const Nonlinearity& f,
                     const FunctionalHandle& u, double t, const PathView& x,
                     const DerivativeConfig& cfg) {
    const double z = u.eval(t, x);
    if (!f.domain.contains(z))
        throw std::domain_error("ppde_residual: u(t,x) = " + std::to_string(z) +
                                " outside the reaction domain " + f.domain.describe());
    return generator_plus_dt(spec, u, t, x, cfg) - f.eval(t, x, z);
}

}  // namespace ppde
