// Acceptance suite: every release gate in one binary. Each criterion prints
// one [PASS]/[FAIL] line with its measured numbers and pinned tolerance; the
// exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ppde/affine_oracle.hpp"
#include "ppde/catalogue.hpp"
#include "ppde/control.hpp"
#include "ppde/mild_solver.hpp"
#include "ppde/nonlinearity.hpp"
#include "ppde/rng.hpp"
#include "ppde/viscosity.hpp"

using namespace ppde;

namespace {

int failures = 0;

void record(const std::string& id, bool pass, const std::string& detail) {
    std::printf("[%s] %-3s %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    if (!pass) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
    return std::string(buf);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const TimeGrid kGrid = TimeGrid::uniform(1.0, 100);
const DiscretePath kOrigin = DiscretePath::constant(kGrid, std::vector<double>{0.0});

SimConfig sim_of(std::size_t n, std::uint64_t seed, unsigned workers) {
    SimConfig c;
    c.n_paths = n;
    c.grid = kGrid;
    c.seed = seed;
    c.workers = workers;
    return c;
}

// ---------------------------------------------------------------------------
// criterion cores: each returns the numbers it gates on, so the determinism
// criterion can re-run them at other worker counts and compare bitwise

std::vector<double> core_riccati(unsigned workers) {
    MildProblem prob;
    prob.spec = brownian_spec(1);
    prob.f = make_power(constant_functional(1.0), 2.0, true);
    prob.g = constant_terminal(1.0);

    SolverConfig ode;
    ode.grid = kGrid;
    ode.backend = SolverBackend::ode_fast_path;
    ode.seed = 101;
    ode.workers = workers;
    const auto ores = solve_point(0.0, kOrigin, prob, ode);

    SolverConfig nested;
    nested.grid = kGrid;
    nested.backend = SolverBackend::nested_mc;
    nested.picard_iters = 3;
    nested.budgets = {1024, 128, 32};
    nested.tolerance = 0.02;
    nested.seed = 101;
    nested.workers = workers;
    const auto nres = solve_point(0.0, kOrigin, prob, nested);

    return {ores.estimate.value, nres.estimate.value, nres.estimate.std_error};
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = core_riccati(1);
    const double elapsed = seconds_since(t0);

    const bool ode_ok = std::abs(v[0] - 0.5) <= 1e-6;
    record("1a", ode_ok, fmt("ode_fast_path u(0) = %.9f, |err| = %.2e <= 1e-6", v[0],
                             std::abs(v[0] - 0.5)));
    const double tol = std::max(0.02, 3.0 * v[2]);
    const bool mc_ok = std::abs(v[1] - 0.5) <= tol;
    record("1b", mc_ok, fmt("nested_mc u(0) = %.5f (se %.5f), |err| = %.5f <= max(0.02, 3 se) = %.5f",
                            v[1], v[2], std::abs(v[1] - 0.5), tol));
    record("1c", elapsed < 60.0, fmt("runtime %.1f s < 60 s", elapsed));
}

std::vector<double> core_fk_crosscheck(unsigned workers) {
    MildProblem prob;
    prob.spec = brownian_spec(1);
    prob.f = make_affine(constant_functional(0.2), constant_functional(0.5), true);
    prob.g = {[](const PathView& x) {
                  const double v = x.coord(x.node_count() - 1, 0);
                  return v * v;
              },
              "x(T)^2", false};

    SolverConfig cfg;
    cfg.grid = kGrid;
    cfg.backend = SolverBackend::regression;
    cfg.outer_paths = 10000;
    cfg.picard_iters = 8;
    cfg.seed = 102;
    cfg.workers = workers;
    const auto sres = solve_point(0.0, kOrigin, prob, cfg);

    const auto fk = fk_solve(0.0, kOrigin, constant_functional(0.2), constant_functional(0.5),
                             prob.g, prob.spec, sim_of(10000, 103, workers));
    return {sres.estimate.value, sres.estimate.std_error, fk.value, fk.std_error};
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = core_fk_crosscheck(1);
    const double elapsed = seconds_since(t0);
    const double tol = 3.0 * std::sqrt(v[1] * v[1] + v[3] * v[3]);
    const bool ok = std::abs(v[0] - v[2]) <= tol;
    record("2", ok && elapsed < 60.0,
           fmt("affine cross-check |solve - fk| = |%.5f - %.5f| = %.5f <= 3 combined se = %.5f",
               v[0], v[2], std::abs(v[0] - v[2]), tol) +
               fmt("; runtime %.1f s < 60 s", elapsed));
}

std::vector<double> core_linear_closed_forms(unsigned workers) {
    // E[x(T)^2] for unit Brownian motion from 0
    MildProblem p1;
    p1.spec = brownian_spec(1);
    p1.f = zero_nonlinearity();
    p1.g = {[](const PathView& x) {
                const double v = x.coord(x.node_count() - 1, 0);
                return v * v;
            },
            "x(T)^2", false};
    SolverConfig cfg;
    cfg.grid = kGrid;
    cfg.backend = SolverBackend::regression;
    cfg.outer_paths = 10000;
    cfg.picard_iters = 1;
    cfg.seed = 104;
    cfg.workers = workers;
    const auto r1 = solve_point(0.0, kOrigin, p1, cfg);

    // path-dependent payoff: prefix integral of x under strong drift
    MildProblem p2;
    p2.spec = scaled_brownian_spec(1, 1e-3, 1.0);
    p2.f = zero_nonlinearity();
    p2.g = {[](const PathView& x) { return catalogue::prefix_integral(x, 0, x.horizon()); },
            "int_0^T x ds", false};
    cfg.seed = 105;
    const auto r2 = solve_point(0.0, kOrigin, p2, cfg);
    return {r1.estimate.value, r1.estimate.std_error, r2.estimate.value, r2.estimate.std_error};
}

void criterion_3() {
    const auto v = core_linear_closed_forms(1);
    const bool a = std::abs(v[0] - 1.0) <= 3.0 * v[1];
    record("3a", a, fmt("E[x(T)^2] = %.4f (se %.4f), |err| = %.4f <= 3 se = %.4f", v[0], v[1],
                        std::abs(v[0] - 1.0), 3.0 * v[1]));
    // left-endpoint quadrature carries an O(dt) defect; allowance pinned at dt
    const double tol = 3.0 * v[3] + kGrid.dt();
    const bool b = std::abs(v[2] - 0.5) <= tol;
    record("3b", b, fmt("E[int x ds] = %.5f (se %.2e), |err| = %.5f <= 3 se + dt = %.5f", v[2],
                        v[3], std::abs(v[2] - 0.5), tol));
}

std::vector<double> core_martingale(unsigned workers) {
    DerivativeConfig dcfg;
    std::vector<double> out;
    const FunctionalHandle coord = catalogue::coordinate(0, 1).u;
    const FunctionalHandle square{[](double t, const PathView& x) {
                                      const double v = x.value_at1(t);
                                      return v * v;
                                  },
                                  "x(t)^2"};
    for (const FunctionalHandle* phi : {&coord, &square}) {
        const auto rep = martingale_check(*phi, brownian_spec(1), 0.0, kOrigin,
                                          sim_of(10000, 106, workers), dcfg);
        for (const auto& c : rep.checkpoints) {
            out.push_back(c.mean);
            out.push_back(c.std_error);
            out.push_back(c.flagged ? 1.0 : 0.0);
        }
    }
    return out;
}

void criterion_4() {
    const auto v = core_martingale(1);
    bool ok = v.size() == 30;  // 2 functionals x 5 checkpoints x 3 numbers
    double worst = 0.0;
    for (std::size_t i = 0; i + 2 < v.size(); i += 3) {
        ok = ok && v[i + 2] == 0.0;
        worst = std::max(worst, std::abs(v[i]));
    }
    record("4", ok, fmt("compensated drift of x(t), x(t)^2 within 3 se + 5 dt at 5 checkpoints "
                        "(worst |mean| %.4f)",
                        worst));
}

std::vector<double> core_doleans(unsigned workers) {
    const VectorFunctional beta{[](double, const PathView&, double* out) { out[0] = 0.8; },
                                "0.8"};
    const auto e = stochastic_exponential(beta, 0.0, kOrigin, brownian_spec(1),
                                          sim_of(10000, 107, workers));
    const auto z = stochastic_exponential(zero_vector(1), 0.0, kOrigin, brownian_spec(1),
                                          sim_of(100, 108, workers));
    return {e.value, e.std_error, z.value, z.std_error};
}

void criterion_5() {
    const auto v = core_doleans(1);
    const bool a = std::abs(v[0] - 1.0) <= 3.0 * v[1];
    record("5a", a, fmt("exponential weight mean = %.4f (se %.4f), |err| <= 3 se = %.4f", v[0],
                        v[1], 3.0 * v[1]));
    record("5b", v[2] == 1.0 && v[3] == 0.0,
           fmt("zero integrand: mean = %.17g, se = %.17g (exact)", v[2], v[3]));
}

std::vector<double> core_power_gap(unsigned) {
    RngStream rng(31);  // pinned: see the nonnegativity degeneracy note
    int bad_nonneg = 0, bad_diag = 0;
    for (int n = 0; n < 100000; ++n) {
        const double p = 1.0 + 4.0 * rng.uniform_open();
        const double y = 10.0 * rng.uniform();
        const double z = 10.0 * rng.uniform();
        const double v = power_bregman_gap(p, y, z);
        if (v < 0.0) ++bad_nonneg;
        if (v <= 1e-12 && std::abs(y - z) > 1e-4) ++bad_diag;
    }
    RngStream r2(44);
    double worst2 = 0.0;
    for (int n = 0; n < 100000; ++n) {
        const double y = 10.0 * r2.uniform();
        const double z = 10.0 * r2.uniform();
        worst2 = std::max(worst2, std::abs(power_bregman_gap(2.0, y, z) - (y - z) * (y - z)));
    }
    return {static_cast<double>(bad_nonneg), static_cast<double>(bad_diag), worst2};
}

void criterion_6() {
    const auto v = core_power_gap(1);
    record("6a", v[0] == 0.0 && v[1] == 0.0,
           fmt("power gap over 1e5 samples: %g negative, %g off-diagonal near-zeros", v[0], v[1]));
    record("6b", v[2] <= 1e-12, fmt("p = 2 vs squared difference: worst |diff| = %.2e <= 1e-12",
                                    v[2]));
}

std::vector<double> core_control(unsigned workers) {
    ControlProblem prob;
    prob.p = 2.0;
    prob.alpha = constant_functional(0.2);
    prob.eta = constant_functional(1.0);
    prob.g = constant_terminal(0.5);
    prob.nu0 = 1.0;
    prob.spec = brownian_spec(1);
    prob.initial = kOrigin;

    MildProblem dual;
    dual.spec = prob.spec;
    dual.f = make_control_dual(prob.alpha, prob.eta, prob.p, true);
    dual.g = prob.g;
    SolverConfig ode;
    ode.grid = kGrid;
    ode.backend = SolverBackend::ode_fast_path;
    ode.seed = 109;
    ode.workers = workers;
    const auto ures = solve_point(0.0, kOrigin, dual, ode);

    const auto perts = default_perturbations(ures.u_hat, prob);
    const OptimalityReport rep =
        verify_optimality(prob, ures.u_hat, perts, sim_of(10000, 110, workers), 0.0);

    std::vector<double> out{rep.j_star, rep.j_star_se, rep.u0, rep.identity_gap,
                            rep.identity_gap_se};
    for (const auto& pr : rep.perturbations) {
        out.push_back(pr.gap_vs_star);
        out.push_back(pr.gap_paired_se);
        out.push_back(pr.decomposition_diff);
        out.push_back(pr.decomposition_se);
    }
    return out;
}

void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = core_control(1);
    const double elapsed = seconds_since(t0);

    const bool a = std::abs(v[3]) <= 3.0 * v[4];
    record("7a", a, fmt("value identity |J(nu*) - nu0^2 u(0)| = %.2e <= 3 combined se = %.2e",
                        std::abs(v[3]), 3.0 * v[4]));
    bool b = true;
    double worst_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 5; i + 3 < v.size(); i += 4) {
        b = b && v[i] >= -3.0 * v[i + 1];
        worst_gap = std::min(worst_gap, v[i]);
    }
    record("7b", b, fmt("perturbation optimality: smallest J(nu) - J(nu*) = %.4f >= -3 paired se",
                        worst_gap));
    bool c = true;
    double worst_diff = 0.0;
    for (std::size_t i = 5; i + 3 < v.size(); i += 4) {
        c = c && std::abs(v[i + 2]) <= 3.0 * v[i + 3];
        worst_diff = std::max(worst_diff, std::abs(v[i + 2]));
    }
    record("7c", c, fmt("decomposition gap vs direct integral: worst |diff| = %.2e <= 3 combined se",
                        worst_diff));
    record("7d", elapsed < 120.0, fmt("runtime %.1f s < 120 s", elapsed));
}

std::vector<double> core_homogeneity(unsigned workers) {
    std::vector<double> out;
    for (double p : {2.0, 3.0}) {
        ControlProblem prob;
        prob.p = p;
        prob.alpha = constant_functional(0.2);
        prob.eta = constant_functional(1.0);
        prob.g = constant_terminal(0.5);
        prob.nu0 = 1.0;
        prob.spec = brownian_spec(1);
        prob.initial = kOrigin;
        // a state-dependent value candidate makes the costs genuinely random
        const FunctionalHandle u{[](double t, const PathView& x) {
                                     return 0.5 + 0.1 * std::tanh(x.value_at1(t)) - 0.05 * t;
                                 },
                                 "u"};
        const ControlProcess star = optimal_feedback_control(u, prob);
        ControlProcess doubled = star;
        doubled.nu0 = 2.0;
        const auto traj = star.trajectory;
        doubled.trajectory = [traj](const PathView& pw, std::vector<double>& l,
                                    std::vector<double>& r) {
            traj(pw, l, r);
            for (auto& x : l) x *= 2.0;
            for (auto& x : r) x *= 2.0;
        };
        const Ensemble ens =
            simulate_from(0.0, prob.initial, prob.spec, sim_of(4000, 111, workers));
        const auto j1 = cost_samples(star, prob, ens, workers);
        const auto j2 = cost_samples(doubled, prob, ens, workers);
        double worst = 0.0;
        for (std::size_t i = 0; i < j1.size(); ++i)
            worst = std::max(worst, std::abs(j2[i] - std::pow(2.0, p) * j1[i]) /
                                        std::abs(j2[i]));
        out.push_back(worst);
    }
    return out;
}

void criterion_8() {
    const auto v = core_homogeneity(1);
    record("8", v[0] <= 1e-10 && v[1] <= 1e-10,
           fmt("pathwise J(2 nu) vs 2^p J(nu): worst relative gap %.2e (p=2), %.2e (p=3) <= 1e-10",
               v[0], v[1]));
}

std::vector<double> core_derivatives(unsigned) {
    RngStream rng(113);
    double worst_vertical_ratio = 0.0;  // |err| / (10 step^2)
    double worst_horizontal_ratio = 0.0;
    for (const auto& a : catalogue::standard_battery(1.0)) {
        DiscretePath x(kGrid, a.dim);
        for (int i = 0; i < a.dim; ++i) x.at(0, i) = 0.3 * rng.normal();
        for (std::size_t k = 1; k < kGrid.node_count(); ++k)
            for (int i = 0; i < a.dim; ++i)
                x.at(k, i) = x.at(k - 1, i) +
                             std::sqrt(kGrid.node(k) - kGrid.node(k - 1)) * rng.normal();
        const double t = kGrid.node(37);
        const PathView xv = x.view();
        for (double step : {1e-3, 1e-4}) {
            DerivativeConfig cfg;
            cfg.step_h = step;
            const auto gn = vertical_gradient(a.u, t, xv, cfg);
            const auto ge = a.grad(t, xv);
            for (int i = 0; i < a.dim; ++i)
                worst_vertical_ratio =
                    std::max(worst_vertical_ratio, std::abs(gn[i] - ge[i]) / (10.0 * step * step));
            const auto Hn = vertical_hessian(a.u, t, xv, cfg);
            const auto He = a.hess(t, xv);
            for (int i = 0; i < a.dim; ++i)
                for (int j = 0; j < a.dim; ++j)
                    worst_vertical_ratio = std::max(
                        worst_vertical_ratio, std::abs(Hn(i, j) - He(i, j)) / (10.0 * step * step));
        }
        DerivativeConfig hcfg;
        const double hd = horizontal_derivative(a.u, t, xv, hcfg);
        worst_horizontal_ratio =
            std::max(worst_horizontal_ratio,
                     std::abs(hd - a.dt(t, xv)) / (10.0 * hcfg.horizontal_step(kGrid)));
    }
    DerivativeConfig dcfg;
    const DiscretePath xr = DiscretePath::constant(kGrid, std::vector<double>{0.4});
    const double resid = ppde_residual(brownian_spec(1), zero_nonlinearity(),
                                       catalogue::heat_functional(1.0).u, kGrid.node(30),
                                       xr.view(), dcfg);
    return {worst_vertical_ratio, worst_horizontal_ratio, std::abs(resid)};
}

void criterion_9() {
    const auto v = core_derivatives(1);
    record("9a", v[0] <= 1.0 && v[1] <= 1.0,
           fmt("derivative battery: worst vertical error at %.2f of 10 step^2, horizontal at %.2f "
               "of 10 step",
               v[0], v[1]));
    record("9b", v[2] <= 1e-3,
           fmt("heat-functional equation residual %.2e <= 1e-3 at default steps", v[2]));
}

std::vector<double> core_validator(unsigned) {
    ValidateConfig cfg;
    cfg.grid = kGrid;
    cfg.seed = 114;
    const auto ok = validate_conditions(make_power(constant_functional(1.0), 2.0, true), cfg);
    Nonlinearity one;
    one.eval = [](double, const PathView&, double) { return 1.0; };
    one.domain = DomainInterval::half_line();
    one.label = "1";
    const auto bad = validate_conditions(one, cfg);
    return {ok.local_regularity.status == ConditionStatus::pass ? 1.0 : 0.0,
            ok.boundary_limits.status == ConditionStatus::pass ? 1.0 : 0.0,
            bad.boundary_limits.status == ConditionStatus::fail ? 1.0 : 0.0,
            bad.boundary_limits.lower_boundary_limit};
}

void criterion_10() {
    const auto v = core_validator(1);
    record("10", v[0] == 1.0 && v[1] == 1.0 && v[2] == 1.0,
           fmt("z^2 passes (i) and (iii); constant 1 fails (iii) with boundary limit %.3f > 0",
               v[3]));
}

void criterion_11() {
    struct Core {
        const char* name;
        std::vector<double> (*fn)(unsigned);
    };
    const Core cores[] = {
        {"riccati", core_riccati},          {"fk-crosscheck", core_fk_crosscheck},
        {"linear", core_linear_closed_forms}, {"martingale", core_martingale},
        {"doleans", core_doleans},          {"power-gap", core_power_gap},
        {"control", core_control},          {"homogeneity", core_homogeneity},
        {"derivatives", core_derivatives},  {"validator", core_validator},
    };
    bool all_ok = true;
    std::string first_bad;
    for (const auto& core : cores) {
        const auto base = core.fn(1);
        for (unsigned workers : {2u, 8u}) {
            const auto other = core.fn(workers);
            if (other != base) {
                all_ok = false;
                if (first_bad.empty())
                    first_bad = std::string(core.name) + " at " + std::to_string(workers) +
                                " workers";
            }
        }
    }
    record("11", all_ok,
           all_ok ? "all criterion cores bitwise identical at 1, 2, 8 workers"
                  : "mismatch: " + first_bad);
}

std::vector<double> core_viscosity(unsigned workers) {
    const double r = 0.2;
    const FunctionalHandle u = catalogue::heat_functional(1.0).u;
    const Nonlinearity f0 = zero_nonlinearity();
    DerivativeConfig dcfg;

    std::vector<FunctionalHandle> battery;
    battery.push_back(u);
    battery.push_back({[r](double t, const PathView& x) {
                           const double v = x.value_at1(t);
                           return v * v + (1.0 - t) + (t - r);
                       },
                       "u+(t-r)"});
    battery.push_back({[r](double t, const PathView& x) {
                           const double v = x.value_at1(t);
                           return v * v + (1.0 - t) - (t - r);
                       },
                       "u-(t-r)"});
    battery.push_back({[r](double t, const PathView& x) {
                           const double v = x.value_at1(t);
                           const double w = x.value_at1(std::min(t, r));
                           return v * v + (1.0 - t) + (v - w) * (v - w);
                       },
                       "u+(x-x_r)^2"});
    battery.push_back({[r](double t, const PathView& x) {
                           const double v = x.value_at1(t);
                           const double w = x.value_at1(std::min(t, r));
                           return v * v + (1.0 - t) - (v - w) * (v - w);
                       },
                       "u-(x-x_r)^2"});
    battery.push_back({[r](double t, const PathView& x) {
                           const double v = x.value_at1(t);
                           return v * v + (1.0 - t) + 0.5 * (t - r) * (t - r);
                       },
                       "u+(t-r)^2/2"});

    std::vector<double> out;
    for (const auto& phi : battery) {
        TestFunctionCandidate cand;
        cand.phi = phi;
        cand.r = r;
        cand.x = kOrigin;
        cand.gamma = 1.0;
        cand.delta = 0.2;
        const auto mem = test_membership(u, cand, brownian_spec(1), sim_of(10000, 115, workers),
                                         MembershipSide::subsolution);
        const auto resid =
            residual_at_test_function(phi, brownian_spec(1), f0, u, r, kOrigin, dcfg, 1e-3);
        out.push_back(mem.any_violated ? 1.0 : 0.0);
        out.push_back(mem.worst_gap_se);
        out.push_back(resid.value);
    }
    return out;
}

void criterion_12() {
    const auto v = core_viscosity(1);
    // battery order: u, u+(t-r), u-(t-r), u+(x-x_r)^2, u-(x-x_r)^2, u+(t-r)^2/2
    int contradictions = 0;
    int members = 0;
    for (std::size_t i = 0; i + 2 < v.size(); i += 3) {
        const bool member = v[i] == 0.0;
        members += member ? 1 : 0;
        if (member && v[i + 2] < -(1e-3 + 3.0 * v[i + 1])) ++contradictions;
    }
    record("12a", contradictions == 0 && members >= 3,
           fmt("heat-functional battery: %g members, %g membership-vs-residual contradictions",
               static_cast<double>(members), static_cast<double>(contradictions)));
    const bool shifts_ok = std::abs(v[5] - 1.0) <= 1e-5 && std::abs(v[8] + 1.0) <= 1e-5;
    record("12b", shifts_ok,
           fmt("time-shifted test functions: residuals %+.6f and %+.6f (expect +1 / -1)", v[5],
               v[8]));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    std::printf("----\n%s: %d criterion(s) failed (total runtime %.1f s)\n",
                failures == 0 ? "SUCCESS" : "FAILURE", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
