#include "ppde/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ppde/parallel.hpp"
#include "ppde/rng.hpp"

namespace ppde {

namespace {

constexpr int kMaxDim = 16;

void check_sim_config(const SimConfig& cfg) {
    if (cfg.n_paths < 2) throw std::invalid_argument("SimConfig: need at least two paths");
    if (cfg.antithetic && cfg.n_paths % 2 != 0)
        throw std::invalid_argument("SimConfig: antithetic mode needs an even path count");
    if (cfg.grid.node_count() < 2) throw std::invalid_argument("SimConfig: grid not set");
}

}  // namespace

void simulate_single(double r, const PathView& history, const DiffusionSpec& spec,
                     const TimeGrid& grid, RngStream rng, double normal_sign, double* out) {
    const int d = spec.dim;
    if (d > kMaxDim) throw std::invalid_argument("simulate_single: dimension too large");
    const std::size_t K = grid.floor_index(r);
    for (std::size_t j = 0; j <= K; ++j)
        for (int i = 0; i < d; ++i) out[j * d + i] = history.coord(j, i);

    double v[kMaxDim], b[kMaxDim], z[kMaxDim];
    double sig[kMaxDim * kMaxDim];
    history.value_at(r, v);

    double tau = r;
    PathView cur = stopped_view(history, r);
    for (std::size_t k = K + 1; k < grid.node_count(); ++k) {
        const double tk = grid.node(k);
        const double dt = tk - tau;
        spec.drift.eval(tau, cur, b);
        spec.sigma.eval(tau, cur, sig);
        const double sdt = std::sqrt(dt);
        for (int i = 0; i < d; ++i) z[i] = normal_sign * rng.normal();
        for (int i = 0; i < d; ++i) {
            double diff = 0.0;
            for (int j = 0; j < d; ++j) diff += sig[j * d + i] * z[j];
            v[i] += b[i] * dt + sdt * diff;
            if (!std::isfinite(v[i]))
                throw std::runtime_error("simulate_single: non-finite state at t=" +
                                         std::to_string(tk));
            out[k * d + i] = v[i];
        }
        tau = tk;
        cur = PathView{};
        cur.grid = &grid;
        cur.data = out;
        cur.dim = d;
        cur.stop_time = tau;
    }
}

Ensemble simulate_from(double r, const DiscretePath& x, const DiffusionSpec& spec,
                       const SimConfig& cfg) {
    check_sim_config(cfg);
    if (!(r >= 0.0 && r <= cfg.grid.horizon()))
        throw std::domain_error("simulate_from: start time outside [0, horizon]");
    if (x.dim() != spec.dim) throw std::invalid_argument("simulate_from: dimension mismatch");

    const DiscretePath xg = resample(x, cfg.grid);
    Ensemble ens(cfg.grid, spec.dim, cfg.n_paths);
    const PathView hist = xg.view();
    RngStream root(cfg.seed);

    parallel_chunks(cfg.n_paths, cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint64_t stream_index = cfg.antithetic ? i / 2 : i;
            const double sign = (cfg.antithetic && i % 2 == 1) ? -1.0 : 1.0;
            try {
                simulate_single(r, hist, spec, ens.grid(), root.child(stream_index), sign,
                                ens.path_data(i));
            } catch (const std::runtime_error& e) {
                throw std::runtime_error(std::string(e.what()) + " (path " + std::to_string(i) +
                                         ")");
            }
        }
    });
    return ens;
}

namespace {

template <typename Fn>
EstimateWithError mean_over_paths(const Ensemble& ens, unsigned workers, Fn&& fn) {
    std::vector<double> vals(ens.size());
    parallel_chunks(ens.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) vals[i] = fn(i);
    });
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (!std::isfinite(vals[i]))
            throw std::runtime_error("expectation: non-finite evaluation on path " +
                                     std::to_string(i));
    return estimate_from_samples(vals);
}

}  // namespace

EstimateWithError expectation(const FunctionalHandle& u, double t, const Ensemble& ens,
                              unsigned workers) {
    return mean_over_paths(ens, workers, [&](std::size_t i) { return u.eval(t, ens.view(i)); });
}

EstimateWithError expectation_terminal(const TerminalFunctional& g, const Ensemble& ens,
                                       unsigned workers) {
    return mean_over_paths(ens, workers, [&](std::size_t i) { return g.eval(ens.view(i)); });
}

MartingaleReport martingale_check(const FunctionalHandle& phi, const DiffusionSpec& spec,
                                  double r, const DiscretePath& x, const SimConfig& cfg,
                                  const DerivativeConfig& dcfg,
                                  const MartingaleCheckConfig& mcfg) {
    const Ensemble ens = simulate_from(r, x, spec, cfg);
    const TimeGrid& grid = ens.grid();
    const std::size_t Kr = grid.floor_index(r);
    const std::size_t M = grid.steps();

    std::vector<std::size_t> cps;
    if (mcfg.checkpoint_times.empty()) {
        for (int j = 1; j <= 5; ++j) {
            const std::size_t k =
                Kr + static_cast<std::size_t>(std::llround((double)(M - Kr) * j / 5.0));
            if (k > Kr && k <= M) cps.push_back(k);
        }
    } else {
        for (double t : mcfg.checkpoint_times) {
            const std::size_t k = grid.floor_index(t);
            if (k > Kr && k <= M) cps.push_back(k);
        }
    }
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    if (cps.empty()) throw std::invalid_argument("martingale_check: no usable checkpoints");

    const double allowance = mcfg.bias_allowance >= 0.0 ? mcfg.bias_allowance : 5.0 * grid.dt();
    const DiscretePath xg = resample(x, grid);
    const double n_r = phi.eval(r, stopped_view(xg.view(), r));

    std::vector<std::vector<double>> samples(cps.size(), std::vector<double>(ens.size()));
    parallel_chunks(ens.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const PathView p = ens.view(i);
            double integral = 0.0;
            double tau = r;
            std::size_t cp = 0;
            for (std::size_t k = Kr + 1; k <= M && cp < cps.size(); ++k) {
                const double tk = grid.node(k);
                integral += generator_plus_dt(spec, phi, tau, stopped_view(p, tau), dcfg) *
                            (tk - tau);
                tau = tk;
                if (k == cps[cp]) {
                    const double n_t = phi.eval(tk, stopped_view(p, tk)) - integral;
                    samples[cp][i] = n_t - n_r;
                    ++cp;
                }
            }
        }
    });

    MartingaleReport rep;
    rep.bias_allowance = allowance;
    rep.n_paths = ens.size();
    for (std::size_t c = 0; c < cps.size(); ++c) {
        const EstimateWithError e = estimate_from_samples(samples[c]);
        CheckpointDrift d;
        d.time = grid.node(cps[c]);
        d.mean = e.value;
        d.std_error = e.std_error;
        d.threshold = 3.0 * e.std_error + allowance;
        d.flagged = std::abs(d.mean) > d.threshold;
        rep.any_flagged = rep.any_flagged || d.flagged;
        rep.checkpoints.push_back(d);
    }
    return rep;
}

namespace {

/// log of the stochastic exponential along one path, left-point sums.
double log_exponential_along(const VectorFunctional& beta, double r, const PathView& p,
                             const DiffusionSpec& spec, const TimeGrid& grid, double t_end) {
    const int d = spec.dim;
    double bvec[kMaxDim], drift[kMaxDim], sig[kMaxDim * kMaxDim], w[kMaxDim];
    double xprev[kMaxDim], xnext[kMaxDim];
    const std::size_t Kend = grid.floor_index(t_end);
    double acc = 0.0;
    double tau = r;
    p.value_at(r, xprev);
    for (std::size_t k = grid.floor_index(r) + 1; k <= Kend; ++k) {
        const double tk = grid.node(k);
        const double dt = tk - tau;
        const PathView stopped = stopped_view(p, tau);
        beta.eval(tau, stopped, bvec);
        spec.drift.eval(tau, stopped, drift);
        spec.sigma.eval(tau, stopped, sig);
        for (int i = 0; i < d; ++i) xnext[i] = p.coord(k, i);
        // beta . dX  -  beta . b dt  -  1/2 |sigma^T beta|^2 dt
        double ito = 0.0, comp = 0.0, quad = 0.0;
        for (int i = 0; i < d; ++i) {
            ito += bvec[i] * (xnext[i] - xprev[i]);
            comp += bvec[i] * drift[i];
        }
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += sig[j * d + i] * bvec[i];
            w[j] = s;
        }
        for (int j = 0; j < d; ++j) quad += w[j] * w[j];
        acc += ito - comp * dt - 0.5 * quad * dt;
        for (int i = 0; i < d; ++i) xprev[i] = xnext[i];
        tau = tk;
    }
    return acc;
}

}  // namespace

EstimateWithError stochastic_exponential(const VectorFunctional& beta, double r,
                                         const DiscretePath& x, const DiffusionSpec& spec,
                                         const SimConfig& cfg, double t_end) {
    const Ensemble ens = simulate_from(r, x, spec, cfg);
    const double te = t_end < 0.0 ? cfg.grid.horizon() : t_end;
    if (te < r) throw std::domain_error("stochastic_exponential: t_end before start");
    return mean_over_paths(ens, cfg.workers, [&](std::size_t i) {
        const double lg = log_exponential_along(beta, r, ens.view(i), spec, ens.grid(), te);
        if (lg > 700.0)
            throw std::runtime_error(
                "stochastic_exponential: overflow; use a smaller integrand bound or a finer grid");
        return std::exp(lg);
    });
}

std::vector<double> stochastic_exponential_weights(const VectorFunctional& beta, double r,
                                                   const Ensemble& ens,
                                                   const DiffusionSpec& spec, unsigned workers) {
    std::vector<double> w(ens.size());
    parallel_chunks(ens.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double lg =
                log_exponential_along(beta, r, ens.view(i), spec, ens.grid(), ens.grid().horizon());
            if (lg > 700.0)
                throw std::runtime_error(
                    "stochastic_exponential: overflow; use a smaller integrand bound or a finer "
                    "grid");
            w[i] = std::exp(lg);
        }
    });
    return w;
}

double hitting_time(double gamma, double r, const DiscretePath& x, const PathView& path) {
    if (gamma < 0.0) throw std::domain_error("hitting_time: gamma must be nonnegative");
    if (x.dim() != path.dim) throw std::invalid_argument("hitting_time: dimension mismatch");
    const TimeGrid& grid = *path.grid;
    const DiscretePath xg = resample(x, grid);
    const int d = path.dim;
    const std::size_t K = grid.floor_index(r);

    double xr[kMaxDim];
    xg.value_at(r, xr);
    double m2 = 0.0;
    for (std::size_t j = 0; j <= K; ++j) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            const double dv = path.coord(j, i) - xg.at(j, i);
            s += dv * dv;
        }
        m2 = std::max(m2, s);
    }
    {
        double pr[kMaxDim];
        path.value_at(r, pr);
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            const double dv = pr[i] - xr[i];
            s += dv * dv;
        }
        m2 = std::max(m2, s);
    }
    if (std::sqrt(m2) >= gamma) return r;

    for (std::size_t k = K + 1; k < grid.node_count(); ++k) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            const double dv = path.coord(k, i) - xr[i];
            s += dv * dv;
        }
        m2 = std::max(m2, s);
        if (std::sqrt(m2) >= gamma) return grid.node(k);
    }
    return grid.horizon();
}

}  // namespace ppde
