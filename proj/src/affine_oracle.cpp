#include "ppde/affine_oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "ppde/parallel.hpp"

namespace ppde {

EstimateWithError fk_solve_on(const Ensemble& ens, double r, const FunctionalHandle& alpha,
                              const FunctionalHandle& beta, const TerminalFunctional& g,
                              unsigned workers) {
    const TimeGrid& grid = ens.grid();
    const std::size_t K0 = grid.floor_index(r);
    std::vector<double> vals(ens.size());
    double alpha_max = 0.0, beta_max = 0.0;  // running coefficient bounds
    std::vector<double> amax(ens.size(), 0.0), bmax(ens.size(), 0.0);
    parallel_chunks(ens.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const PathView p = ens.view(i);
            double discount_log = 0.0;  // -int_r^t beta ds, left endpoints
            double source = 0.0;        // int_r^t e^{...} alpha dt
            double tau = r;
            for (std::size_t k = K0 + 1; k < grid.node_count(); ++k) {
                const double dt = grid.node(k) - tau;
                const PathView ps = stopped_view(p, tau);
                const double a = alpha.eval(tau, ps);
                const double b = beta.eval(tau, ps);
                amax[i] = std::max(amax[i], std::abs(a));
                bmax[i] = std::max(bmax[i], std::abs(b));
                source += std::exp(discount_log) * a * dt;
                discount_log -= b * dt;
                tau = grid.node(k);
            }
            vals[i] = std::exp(discount_log) * g.eval(p) - source;
        }
    });
    for (std::size_t i = 0; i < ens.size(); ++i) {
        alpha_max = std::max(alpha_max, amax[i]);
        beta_max = std::max(beta_max, bmax[i]);
        if (!std::isfinite(vals[i]))
            throw std::runtime_error("fk_solve: non-finite value on path " + std::to_string(i));
    }
    if (!std::isfinite(alpha_max) || !std::isfinite(beta_max))
        throw std::runtime_error("fk_solve: unbounded coefficients on the ensemble");
    return estimate_from_samples(vals);
}

EstimateWithError fk_solve(double r, const DiscretePath& x, const FunctionalHandle& alpha,
                           const FunctionalHandle& beta, const TerminalFunctional& g,
                           const DiffusionSpec& spec, const SimConfig& cfg) {
    const Ensemble ens = simulate_from(r, x, spec, cfg);
    return fk_solve_on(ens, r, alpha, beta, g, cfg.workers);
}

}  // namespace ppde
