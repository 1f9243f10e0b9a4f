#include "ppde/mild_solver.hpp"

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ppde/parallel.hpp"
#include "ppde/rng.hpp"

namespace ppde {

double clamp_to_domain(double z, const DomainInterval& D, double eps) {
    const double lo = D.bounded_below() ? D.lower + (D.closed_lower ? 0.0 : eps) : -1e308;
    const double hi = D.bounded_above() ? D.upper - (D.closed_upper ? 0.0 : eps) : 1e308;
    if (z < lo) return lo;
    if (z > hi) return hi;
    return z;
}

namespace {

struct Clamper {
    const DomainInterval* domain;
    double tolerance;
    std::atomic<std::size_t>* count;

    double operator()(double z, int iteration, double time) const {
        const double c = clamp_to_domain(z, *domain, 0.0);
        if (c != z) {
            const double escape = std::abs(c - z);
            if (escape > tolerance)
                throw std::runtime_error(
                    "solve_point: iterate escaped the reaction domain by " +
                    std::to_string(escape) + " (iteration " + std::to_string(iteration) +
                    ", t = " + std::to_string(time) + ", value " + std::to_string(z) + ")");
            count->fetch_add(1, std::memory_order_relaxed);
        }
        return c;
    }
};

// ---------------------------------------------------------------------------
// ODE fast path: u'(s) = f(s, u), u(T) = g, classical RK4 marched backward.

std::vector<double> rk4_backward_grid(const MildProblem& prob, const TimeGrid& grid,
                                      double terminal, const PathView& anchor,
                                      const Clamper& clamp) {
    const std::size_t M = grid.steps();
    std::vector<double> u(M + 1);
    u[M] = terminal;
    auto rhs = [&](double t, double z) {
        return prob.f.eval(t, anchor, clamp_to_domain(z, prob.f.domain, 0.0));
    };
    for (std::size_t k = M; k-- > 0;) {
        const double t1 = grid.node(k + 1);
        const double h = grid.node(k) - t1;  // negative
        const double y = u[k + 1];
        const double k1 = rhs(t1, y);
        const double k2 = rhs(t1 + 0.5 * h, y + 0.5 * h * k1);
        const double k3 = rhs(t1 + 0.5 * h, y + 0.5 * h * k2);
        const double k4 = rhs(t1 + h, y + h * k3);
        u[k] = clamp(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), static_cast<int>(M - k),
                     grid.node(k));
    }
    return u;
}

double interp_nodes(const TimeGrid& g, const std::vector<double>& v, double t) {
    const std::size_t k = g.floor_index(t);
    if (k + 1 >= g.node_count() || g.node(k) == t) return v[k];
    const double w = (t - g.node(k)) / (g.node(k + 1) - g.node(k));
    return v[k] + w * (v[k + 1] - v[k]);
}

SolveResult solve_ode(double r, const DiscretePath& x, const MildProblem& prob,
                      const SolverConfig& cfg, Clamper& clamp) {
    if (!prob.f.path_independent || !prob.g.path_independent)
        throw std::invalid_argument(
            "solve_point: the ODE fast path needs path-independent f and g");
    const TimeGrid& grid = cfg.grid;
    const DiscretePath anchor = resample(x, grid);
    const double terminal = prob.g.eval(anchor.view());

    const std::vector<double> u = rk4_backward_grid(prob, grid, terminal, anchor.view(), clamp);

    // Richardson error proxy: re-run at half the step and compare at r
    const TimeGrid fine = TimeGrid::uniform(grid.horizon(), 2 * grid.steps());
    const DiscretePath anchor_fine = resample(x, fine);
    const std::vector<double> uf =
        rk4_backward_grid(prob, fine, terminal, anchor_fine.view(), clamp);

    SolveResult res;
    res.estimate.value = interp_nodes(grid, u, r);
    res.estimate.std_error = 0.0;
    res.estimate.n_samples = 1;
    res.diagnostics.backend_name = "ode_fast_path";
    res.diagnostics.iterations = 0;
    res.diagnostics.fixed_point_residual = std::abs(interp_nodes(fine, uf, r) - res.estimate.value);
    res.diagnostics.terminal_abs_max = std::abs(terminal);
    res.diagnostics.converged = true;
    res.u_hat = {[grid, u](double t, const PathView&) { return interp_nodes(grid, u, t); },
                 "ode-iterate"};
    res.has_u_hat = true;
    return res;
}

// ---------------------------------------------------------------------------
// Regression backend: one outer ensemble, per-node least-squares iterates.

std::vector<FunctionalHandle> default_features(int dim) {
    std::vector<FunctionalHandle> feats;
    feats.push_back(constant_functional(1.0));
    for (int i = 0; i < dim; ++i)
        feats.push_back({[i](double t, const PathView& x) {
                             double out[16];
                             x.value_at(t, out);
                             return out[i];
                         },
                         "x_" + std::to_string(i + 1)});
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j)
            feats.push_back({[i, j](double t, const PathView& x) {
                                 double out[16];
                                 x.value_at(t, out);
                                 return out[i] * out[j];
                             },
                             "x_" + std::to_string(i + 1) + " x_" + std::to_string(j + 1)});
    for (int i = 0; i < dim; ++i)
        feats.push_back({[i](double t, const PathView& x) {
                             const TimeGrid& g = *x.grid;
                             double acc = 0.0;
                             for (std::size_t k = 0; k + 1 < g.node_count(); ++k) {
                                 const double t0 = g.node(k);
                                 if (t0 >= t) break;
                                 acc += x.coord(k, i) * (std::min(g.node(k + 1), t) - t0);
                             }
                             return acc;
                         },
                         "int x_" + std::to_string(i + 1)});
    return feats;
}

struct RegressionModel {
    TimeGrid grid;
    std::vector<FunctionalHandle> features;
    std::vector<Eigen::VectorXd> coeffs;  // per node, zero past the last fit
    std::size_t first_node = 0;

    double eval(double t, const PathView& x) const {
        std::size_t lo = grid.floor_index(t);
        if (lo < first_node) lo = first_node;
        const std::size_t last = grid.node_count() - 1;
        Eigen::VectorXd phi(static_cast<Eigen::Index>(features.size()));
        for (std::size_t f = 0; f < features.size(); ++f)
            phi[static_cast<Eigen::Index>(f)] = features[f].eval(t, x);
        const double vlo = coeffs[lo].dot(phi);
        if (lo >= last || grid.node(lo) == t) return vlo;
        const double w = (t - grid.node(lo)) / (grid.node(lo + 1) - grid.node(lo));
        return vlo + w * (coeffs[lo + 1].dot(phi) - vlo);
    }
};

SolveResult solve_regression(double r, const DiscretePath& x, const MildProblem& prob,
                             const SolverConfig& cfg, Clamper& clamp) {
    const TimeGrid& grid = cfg.grid;
    std::size_t K0 = grid.floor_index(r);
    // snap within one ulp-scale tolerance; reject genuinely off-grid starts
    const double snap_tol = 1e-9 * grid.horizon();
    if (K0 + 1 < grid.node_count() && std::abs(grid.node(K0 + 1) - r) <= snap_tol) ++K0;
    if (std::abs(grid.node(K0) - r) > snap_tol)
        throw std::invalid_argument("solve_point: regression backend needs a grid-aligned start");
    r = grid.node(K0);
    const std::size_t M = grid.steps();
    const std::size_t n = cfg.outer_paths;
    if (n < 8) throw std::invalid_argument("solve_point: regression needs more outer paths");

    SimConfig sim;
    sim.n_paths = n;
    sim.grid = grid;
    sim.seed = cfg.seed;
    sim.workers = cfg.workers;
    const Ensemble ens = simulate_from(r, x, prob.spec, sim);

    std::vector<FunctionalHandle> feats =
        cfg.features.empty() ? default_features(prob.spec.dim) : cfg.features;
    const std::size_t F = feats.size();

    // terminal payoffs and per-node feature matrices on the fitting range
    std::vector<double> gvals(n);
    std::vector<Eigen::MatrixXd> design(M);
    for (std::size_t k = K0; k < M; ++k)
        design[k].resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(F));
    parallel_chunks(n, cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const PathView p = ens.view(i);
            gvals[i] = prob.g.eval(p);
            for (std::size_t k = K0; k < M; ++k) {
                const PathView ps = stopped_view(p, grid.node(k));
                for (std::size_t f = 0; f < F; ++f)
                    design[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
                        feats[f].eval(grid.node(k), ps);
            }
        }
    });
    double gmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(gvals[i]))
            throw std::runtime_error("solve_point: non-finite terminal value on path " +
                                     std::to_string(i));
        gmax = std::max(gmax, std::abs(gvals[i]));
    }

    Eigen::MatrixXd U(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(M));
    std::vector<Eigen::VectorXd> coeffs(grid.node_count(),
                                        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(F)));
    const Eigen::Map<const Eigen::VectorXd> gvec(gvals.data(), static_cast<Eigen::Index>(n));

    auto fit_node = [&](std::size_t k, const Eigen::VectorXd& target) {
        coeffs[k] = design[k].colPivHouseholderQr().solve(target);
        U.col(static_cast<Eigen::Index>(k)) = design[k] * coeffs[k];
    };

    // zeroth iterate: projected conditional expectation of the payoff
    for (std::size_t k = K0; k < M; ++k) fit_node(k, gvec);

    SolveResult res;
    res.diagnostics.backend_name = "regression";
    res.diagnostics.terminal_abs_max = gmax;

    Eigen::MatrixXd targets(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(M));
    auto integrand_pass = [&](int iter) {
        parallel_chunks(n, cfg.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const PathView p = ens.view(i);
                double suffix = 0.0;
                for (std::size_t k = M; k-- > K0;) {
                    const double tk = grid.node(k);
                    const double z =
                        clamp(U(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)),
                              iter, tk);
                    suffix += prob.f.eval(tk, stopped_view(p, tk), z) * (grid.node(k + 1) - tk);
                    targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                        gvals[i] - suffix;
                }
            }
        });
    };

    std::vector<double> y0(n);
    auto start_estimate = [&]() {
        for (std::size_t i = 0; i < n; ++i)
            y0[i] = targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(K0));
        return estimate_from_samples(y0);
    };

    double value = 0.0, se = 0.0;
    double prev_value = std::numeric_limits<double>::quiet_NaN();
    const int N = std::max(cfg.picard_iters, 1);
    for (int iter = 1; iter <= N; ++iter) {
        integrand_pass(iter);
        for (std::size_t k = K0; k < M; ++k)
            fit_node(k, targets.col(static_cast<Eigen::Index>(k)));
        const EstimateWithError e = start_estimate();
        value = e.value;
        se = e.std_error;
        if (iter > 1) res.diagnostics.iteration_changes.push_back(std::abs(value - prev_value));
        prev_value = value;
        res.diagnostics.iterations = iter;
    }

    // one more integrand pass: defect of the final iterate at the start point
    integrand_pass(N + 1);
    res.diagnostics.fixed_point_residual = std::abs(start_estimate().value - value);

    res.estimate.value = value;
    res.estimate.std_error = se;
    res.estimate.n_samples = n;
    res.diagnostics.converged = res.diagnostics.iteration_changes.empty()
                                    ? true
                                    : res.diagnostics.iteration_changes.back() <= cfg.tolerance;

    RegressionModel model{grid, std::move(feats), std::move(coeffs), K0};
    res.u_hat = {[model = std::move(model)](double t, const PathView& p) { return model.eval(t, p); },
                 "regression-iterate"};
    res.has_u_hat = true;
    return res;
}

// ---------------------------------------------------------------------------
// Nested Monte Carlo backend: randomized-time substitution with one
// sub-ensemble per path; cost is the product of the budget list.

struct NestedWorkspace {
    std::vector<std::vector<double>> path_buf;
    std::vector<std::vector<double>> val_buf;

    explicit NestedWorkspace(int levels)
        : path_buf(static_cast<std::size_t>(levels)), val_buf(static_cast<std::size_t>(levels)) {}
};

struct NestedRun {
    const MildProblem* prob;
    const TimeGrid* grid;
    const std::size_t* budgets;
    int levels;
    const Clamper* clamp;
    double horizon;

    double level_value(int level, double r, const PathView& origin, const RngStream& stream,
                       NestedWorkspace& ws) const {
        const std::size_t B = budgets[level];
        auto& vals = ws.val_buf[static_cast<std::size_t>(level)];
        vals.resize(B);
        for (std::size_t i = 0; i < B; ++i)
            vals[i] = path_value(level, r, origin, stream.child(i), ws);
        return pairwise_sum(std::span<const double>(vals)) / static_cast<double>(B);
    }

    double path_value(int level, double r, const PathView& origin, const RngStream& s,
                      NestedWorkspace& ws) const {
        auto& buf = ws.path_buf[static_cast<std::size_t>(level)];
        buf.resize(grid->node_count() * static_cast<std::size_t>(prob->spec.dim));
        simulate_single(r, origin, prob->spec, *grid, s.child(0), 1.0, buf.data());
        PathView p;
        p.grid = grid;
        p.data = buf.data();
        p.dim = prob->spec.dim;

        const double g_i = prob->g.eval(p);
        if (prob->f.tag == Nonlinearity::Tag::zero) return g_i;

        const double theta = r + (horizon - r) * s.child(1).uniform();
        double inner;
        if (level == levels - 1) {
            // terminal-sample closure: the path's own payoff stands in for the
            // zeroth iterate inside one further substitution
            const double theta2 = theta + (horizon - theta) * s.child(2).uniform();
            const double z0 = (*clamp)(g_i, 0, theta2);
            inner =
                g_i - (horizon - theta) * prob->f.eval(theta2, stopped_view(p, theta2), z0);
        } else {
            inner = level_value(level + 1, theta, stopped_view(p, theta), s.child(3), ws);
        }
        const double z = (*clamp)(inner, levels - level, theta);
        return g_i - (horizon - r) * prob->f.eval(theta, stopped_view(p, theta), z);
    }
};

SolveResult solve_nested(double r, const DiscretePath& x, const MildProblem& prob,
                         const SolverConfig& cfg, Clamper& clamp) {
    const int L = cfg.picard_iters;
    if (L < 1) throw std::invalid_argument("solve_point: need at least one nested level");
    if (cfg.budgets.size() < static_cast<std::size_t>(L))
        throw std::invalid_argument("solve_point: nested budget list shorter than picard_iters");
    for (std::size_t b : cfg.budgets)
        if (b == 0) throw std::invalid_argument("solve_point: nested budgets must be positive");
    const TimeGrid& grid = cfg.grid;
    const DiscretePath xg = resample(x, grid);
    const RngStream root(cfg.seed);

    SolveResult res;
    res.diagnostics.backend_name = "nested_mc";

    // deepening runs on the tail budgets chart the iterate sequence cheaply
    std::vector<double> iterate_values;
    for (int n = 1; n < L; ++n) {
        NestedRun run{&prob, &grid, cfg.budgets.data() + (L - n), n, &clamp, grid.horizon()};
        NestedWorkspace ws(n);
        iterate_values.push_back(run.level_value(
            0, r, xg.view(), root.child(0xD1A60000ULL + static_cast<std::uint64_t>(n)), ws));
    }

    NestedRun run{&prob, &grid, cfg.budgets.data(), L, &clamp, grid.horizon()};
    const std::size_t B0 = cfg.budgets[0];
    std::vector<double> vals(B0);
    const RngStream top = root.child(0);
    parallel_chunks(B0, cfg.workers, [&](std::size_t begin, std::size_t end) {
        NestedWorkspace ws(L);
        for (std::size_t i = begin; i < end; ++i)
            vals[i] = run.path_value(0, r, xg.view(), top.child(i), ws);
    });
    res.estimate = estimate_from_samples(vals);

    iterate_values.push_back(res.estimate.value);
    for (std::size_t i = 1; i < iterate_values.size(); ++i)
        res.diagnostics.iteration_changes.push_back(
            std::abs(iterate_values[i] - iterate_values[i - 1]));
    res.diagnostics.iterations = L;
    res.diagnostics.fixed_point_residual = res.diagnostics.iteration_changes.empty()
                                               ? 0.0
                                               : res.diagnostics.iteration_changes.back();
    res.diagnostics.converged = res.diagnostics.iteration_changes.empty()
                                    ? true
                                    : res.diagnostics.iteration_changes.back() <= cfg.tolerance;
    return res;
}

}  // namespace

SolveResult solve_point(double r, const DiscretePath& x, const MildProblem& prob,
                        const SolverConfig& cfg) {
    if (!(r >= 0.0 && r < cfg.grid.horizon()))
        throw std::domain_error("solve_point: start time must lie in [0, horizon)");
    check_domain_interval(prob.f.domain);
    const auto t0 = std::chrono::steady_clock::now();
    std::atomic<std::size_t> clamp_count{0};
    Clamper clamp{&prob.f.domain, cfg.tolerance, &clamp_count};

    SolveResult res;
    switch (cfg.backend) {
        case SolverBackend::ode_fast_path: res = solve_ode(r, x, prob, cfg, clamp); break;
        case SolverBackend::regression: res = solve_regression(r, x, prob, cfg, clamp); break;
        case SolverBackend::nested_mc: res = solve_nested(r, x, prob, cfg, clamp); break;
    }
    res.diagnostics.clamp_count = clamp_count.load();
    res.diagnostics.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

ResidualReport fixed_point_residual(const FunctionalHandle& u_hat, const MildProblem& prob,
                                    const std::vector<ProbePoint>& probes, const SimConfig& cfg) {
    if (probes.empty()) throw std::invalid_argument("fixed_point_residual: no probes");
    ResidualReport rep;
    const TimeGrid& grid = cfg.grid;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
        const auto& probe = probes[pi];
        SimConfig sim = cfg;
        sim.seed = cfg.seed + pi;
        const Ensemble ens = simulate_from(probe.r, probe.x, prob.spec, sim);
        const DiscretePath xg = resample(probe.x, grid);
        const double u_here = u_hat.eval(probe.r, stopped_view(xg.view(), probe.r));
        const std::size_t K0 = grid.floor_index(probe.r);
        std::vector<double> vals(ens.size());
        parallel_chunks(ens.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const PathView p = ens.view(i);
                double integral = 0.0;
                double tau = probe.r;
                for (std::size_t k = K0 + 1; k < grid.node_count(); ++k) {
                    const PathView ps = stopped_view(p, tau);
                    const double z = clamp_to_domain(u_hat.eval(tau, ps), prob.f.domain, 0.0);
                    integral += prob.f.eval(tau, ps, z) * (grid.node(k) - tau);
                    tau = grid.node(k);
                }
                vals[i] = prob.g.eval(p) - integral - u_here;
            }
        });
        const EstimateWithError e = estimate_from_samples(vals);
        rep.per_probe.push_back(e);
        if (std::abs(e.value) >= rep.worst_abs_residual) {
            rep.worst_abs_residual = std::abs(e.value);
            rep.std_error = e.std_error;
        }
    }
    return rep;
}

}  // namespace ppde
