#include "ppde/cli_runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ppde/affine_oracle.hpp"
#include "ppde/catalogue.hpp"
#include "ppde/control.hpp"
#include "ppde/derivative.hpp"
#include "ppde/expression.hpp"
#include "ppde/mild_solver.hpp"
#include "ppde/nonlinearity.hpp"
#include "ppde/serialization.hpp"
#include "ppde/viscosity.hpp"

namespace ppde::cli {

using nlohmann::json;

namespace {

struct SchemaError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw SchemaError(where + ": unknown key '" + item.key() + "'");
    }
}

const json& require(const json& j, const std::string& where, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(where + ": missing required key '" + key + "'");
    return *it;
}

double num(const json& j, const std::string& where) {
    if (!j.is_number()) throw SchemaError(where + ": expected a number");
    return j.get<double>();
}

std::int64_t integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw SchemaError(where + ": expected an integer");
    return j.get<std::int64_t>();
}

std::string str(const json& j, const std::string& where) {
    if (!j.is_string()) throw SchemaError(where + ": expected a string");
    return j.get<std::string>();
}

// ---------------------------------------------------------------------------

struct CommonSetup {
    TimeGrid grid;
    int dim = 1;
    DiffusionSpec spec;
    DiscretePath initial;
    std::uint64_t seed = 0;
    std::size_t n_paths = 10000;
    unsigned threads = 1;
    bool antithetic = false;
    std::string output_path;
    std::string trajectories_csv;
    json resolved;
};

Expression parse_expr(const json& j, const std::string& where, double horizon, int dim) {
    const Expression e = parse_expression(str(j, where), horizon);
    if (e.max_coordinate() > dim)
        throw SchemaError(where + ": expression uses coordinate x" +
                          std::to_string(e.max_coordinate()) + " beyond dimension " +
                          std::to_string(dim));
    return e;
}

CommonSetup parse_common(const json& cfg, const std::string& sub) {
    CommonSetup s;

    const json grid_j = cfg.value("grid", json{{"horizon", 1.0}, {"steps", 100}});
    check_keys(grid_j, sub + ".grid", {"horizon", "steps"});
    const double horizon = num(grid_j.value("horizon", json(1.0)), sub + ".grid.horizon");
    const auto steps = integer(grid_j.value("steps", json(100)), sub + ".grid.steps");
    if (steps <= 0) throw SchemaError(sub + ".grid.steps: must be positive");
    s.grid = TimeGrid::uniform(horizon, static_cast<std::size_t>(steps));
    s.resolved["grid"] = {{"horizon", horizon}, {"steps", steps}};

    const json diff_j = cfg.value("diffusion", json{{"dim", 1}, {"sigma", "1"}, {"drift", "0"}});
    check_keys(diff_j, sub + ".diffusion", {"dim", "sigma", "drift"});
    s.dim = static_cast<int>(integer(diff_j.value("dim", json(1)), sub + ".diffusion.dim"));
    if (s.dim < 1 || s.dim > 9) throw SchemaError(sub + ".diffusion.dim: expected 1..9");

    auto expr_list = [&](const json& j, const std::string& where) {
        std::vector<Expression> out;
        if (j.is_array()) {
            for (std::size_t i = 0; i < j.size(); ++i)
                out.push_back(parse_expr(j[i], where + "[" + std::to_string(i) + "]", horizon,
                                         s.dim));
        } else {
            out.push_back(parse_expr(j, where, horizon, s.dim));
        }
        return out;
    };

    const json sigma_j = diff_j.value("sigma", json("1"));
    const json drift_j = diff_j.value("drift", json("0"));
    const std::vector<Expression> sig = expr_list(sigma_j, sub + ".diffusion.sigma");
    const std::vector<Expression> dri = expr_list(drift_j, sub + ".diffusion.drift");
    if (sig.size() != 1 && sig.size() != static_cast<std::size_t>(s.dim))
        throw SchemaError(sub + ".diffusion.sigma: expected 1 or dim expressions");
    if (dri.size() != 1 && dri.size() != static_cast<std::size_t>(s.dim))
        throw SchemaError(sub + ".diffusion.drift: expected 1 or dim expressions");

    s.spec.dim = s.dim;
    const int d = s.dim;
    s.spec.sigma = {[sig, d](double t, const PathView& x, double* out) {
                        for (int j = 0; j < d; ++j) {
                            const double v =
                                sig.size() == 1 ? sig[0].eval(t, x) : sig[j].eval(t, x);
                            for (int i = 0; i < d; ++i) out[j * d + i] = (i == j) ? v : 0.0;
                        }
                    },
                    "sigma"};
    s.spec.drift = {[dri, d](double t, const PathView& x, double* out) {
                        for (int i = 0; i < d; ++i)
                            out[i] = dri.size() == 1 ? dri[0].eval(t, x) : dri[i].eval(t, x);
                    },
                    "drift"};
    s.resolved["diffusion"] = {{"dim", s.dim}, {"sigma", sigma_j}, {"drift", drift_j}};

    const json init_j = cfg.value("initial", json::object());
    check_keys(init_j, sub + ".initial", {"x0", "csv"});
    if (init_j.contains("csv")) {
        s.initial = resample(read_path_csv_file(str(init_j["csv"], sub + ".initial.csv")), s.grid);
        s.resolved["initial"] = init_j;
    } else {
        std::vector<double> x0(static_cast<std::size_t>(s.dim), 0.0);
        if (init_j.contains("x0")) {
            const auto& arr = init_j["x0"];
            if (!arr.is_array() || arr.size() != static_cast<std::size_t>(s.dim))
                throw SchemaError(sub + ".initial.x0: expected an array of dim numbers");
            for (int i = 0; i < s.dim; ++i) x0[static_cast<std::size_t>(i)] = arr[i].get<double>();
        }
        s.initial = DiscretePath::constant(s.grid, x0);
        s.resolved["initial"] = {{"x0", x0}};
    }

    const json run_j = require(cfg, sub, "run");
    check_keys(run_j, sub + ".run",
               {"seed", "n_paths", "threads", "antithetic", "output", "trajectories_csv"});
    if (!run_j.contains("seed"))
        throw SchemaError(sub + ".run.seed: required; implicit random seeds are not allowed");
    s.seed = static_cast<std::uint64_t>(integer(run_j["seed"], sub + ".run.seed"));
    s.n_paths =
        static_cast<std::size_t>(integer(run_j.value("n_paths", json(10000)), sub + ".run.n_paths"));
    s.threads =
        static_cast<unsigned>(integer(run_j.value("threads", json(1)), sub + ".run.threads"));
    s.antithetic = run_j.value("antithetic", false);
    s.output_path = run_j.value("output", "");
    s.trajectories_csv = run_j.value("trajectories_csv", "");
    s.resolved["run"] = {{"seed", s.seed},
                         {"n_paths", s.n_paths},
                         {"threads", s.threads},
                         {"antithetic", s.antithetic},
                         {"output", s.output_path},
                         {"trajectories_csv", s.trajectories_csv}};
    return s;
}

SimConfig sim_config(const CommonSetup& s) {
    SimConfig c;
    c.n_paths = s.n_paths;
    c.grid = s.grid;
    c.seed = s.seed;
    c.antithetic = s.antithetic;
    c.workers = s.threads;
    return c;
}

Nonlinearity parse_nonlinearity(const json& cfg, const std::string& sub, const CommonSetup& s,
                                json& resolved) {
    const json j = cfg.value("nonlinearity", json{{"kind", "zero"}});
    check_keys(j, sub + ".nonlinearity",
               {"kind", "alpha", "beta", "gamma", "eta", "exponent", "p", "atoms"});
    const std::string kind = str(j.value("kind", json("zero")), sub + ".nonlinearity.kind");
    const double horizon = s.grid.horizon();
    resolved["nonlinearity"] = j;
    resolved["nonlinearity"]["kind"] = kind;

    auto expr_of = [&](const char* key, const char* dflt) {
        const json raw = j.value(key, json(dflt));
        return parse_expr(raw, sub + ".nonlinearity." + key, horizon, s.dim);
    };

    if (kind == "zero") return zero_nonlinearity();
    if (kind == "affine") {
        const Expression a = expr_of("alpha", "0");
        const Expression b = expr_of("beta", "0");
        return make_affine(a.to_functional(), b.to_functional(),
                           !a.depends_on_path() && !b.depends_on_path());
    }
    if (kind == "power") {
        const Expression a = expr_of("alpha", "1");
        const double p = num(j.value("exponent", json(2.0)), sub + ".nonlinearity.exponent");
        return make_power(a.to_functional(), p, !a.depends_on_path());
    }
    if (kind == "superprocess") {
        const Expression a = expr_of("alpha", "0");
        const Expression c = expr_of("gamma", "0");
        std::vector<SuperprocessAtom> atoms;
        bool path_free = !a.depends_on_path() && !c.depends_on_path();
        for (const json& atom : j.value("atoms", json::array())) {
            check_keys(atom, sub + ".nonlinearity.atoms[]", {"position", "weight"});
            const Expression w = parse_expr(require(atom, sub + ".nonlinearity.atoms[]", "weight"),
                                            sub + ".nonlinearity.atoms[].weight", horizon, s.dim);
            path_free = path_free && !w.depends_on_path();
            atoms.push_back({num(require(atom, sub + ".nonlinearity.atoms[]", "position"),
                                 sub + ".nonlinearity.atoms[].position"),
                             w.to_functional()});
        }
        return make_superprocess(a.to_functional(), c.to_functional(), std::move(atoms),
                                 path_free);
    }
    if (kind == "control_dual") {
        const Expression a = expr_of("alpha", "0");
        const Expression e = expr_of("eta", "1");
        const double p = num(j.value("p", json(2.0)), sub + ".nonlinearity.p");
        return make_control_dual(a.to_functional(), e.to_functional(), p,
                                 !a.depends_on_path() && !e.depends_on_path());
    }
    throw SchemaError(sub + ".nonlinearity.kind: unknown kind '" + kind + "'");
}

TerminalFunctional parse_terminal(const json& cfg, const std::string& sub, const CommonSetup& s,
                                  json& resolved) {
    const json j = cfg.value("terminal", json{{"expr", "0"}});
    check_keys(j, sub + ".terminal", {"expr"});
    const Expression e = parse_expr(j.value("expr", json("0")), sub + ".terminal.expr",
                                    s.grid.horizon(), s.dim);
    resolved["terminal"] = {{"expr", e.text()}};
    return e.to_terminal();
}

json estimate_json(const EstimateWithError& e) {
    return {{"value", e.value}, {"std_error", e.std_error}, {"n_samples", e.n_samples}};
}

json martingale_json(const MartingaleReport& rep) {
    json cps = json::array();
    for (const auto& c : rep.checkpoints)
        cps.push_back({{"time", c.time},
                       {"mean", c.mean},
                       {"std_error", c.std_error},
                       {"threshold", c.threshold},
                       {"flagged", c.flagged}});
    return {{"checkpoints", std::move(cps)},
            {"bias_allowance", rep.bias_allowance},
            {"n_paths", rep.n_paths},
            {"any_flagged", rep.any_flagged}};
}

json finish(const std::string& sub, const CommonSetup& s, double value, double std_error,
            std::size_t n_samples, json diagnostics,
            const std::chrono::steady_clock::time_point& t0) {
    json out;
    out["schema_version"] = 1;
    out["subcommand"] = sub;
    out["value"] = value;
    out["std_error"] = std_error;
    out["n_samples"] = n_samples;
    out["seed"] = s.seed;
    out["runtime_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out["diagnostics"] = std::move(diagnostics);
    out["resolved_config"] = s.resolved;
    return out;
}

// ---------------------------------------------------------------------------

json run_simulate(const json& cfg, CommonSetup& s,
                  const std::chrono::steady_clock::time_point& t0) {
    check_keys(cfg, "simulate", {"grid", "diffusion", "initial", "run", "start_time"});
    const double r = num(cfg.value("start_time", json(0.0)), "simulate.start_time");
    s.resolved["start_time"] = r;
    const Ensemble ens = simulate_from(r, s.initial, s.spec, sim_config(s));
    if (!s.trajectories_csv.empty()) write_ensemble_csv_file(ens, s.trajectories_csv);

    json moments = json::array();
    EstimateWithError first{};
    for (int i = 0; i < s.dim; ++i) {
        const FunctionalHandle coord{[i](double, const PathView& x) {
                                         return x.coord(x.node_count() - 1, i);
                                     },
                                     "x(T)"};
        const FunctionalHandle coord2{[i](double, const PathView& x) {
                                          const double v = x.coord(x.node_count() - 1, i);
                                          return v * v;
                                      },
                                      "x(T)^2"};
        const auto m1 = expectation(coord, s.grid.horizon(), ens, s.threads);
        const auto m2 = expectation(coord2, s.grid.horizon(), ens, s.threads);
        if (i == 0) first = m1;
        moments.push_back({{"coordinate", i + 1},
                           {"terminal_mean", estimate_json(m1)},
                           {"terminal_second_moment", estimate_json(m2)}});
    }
    return finish("simulate", s, first.value, first.std_error, ens.size(),
                  {{"terminal_moments", std::move(moments)}}, t0);
}

json run_solve(const json& cfg, CommonSetup& s,
               const std::chrono::steady_clock::time_point& t0) {
    check_keys(cfg, "solve",
               {"grid", "diffusion", "initial", "run", "nonlinearity", "terminal", "solver",
                "probe"});
    MildProblem prob;
    prob.spec = s.spec;
    prob.f = parse_nonlinearity(cfg, "solve", s, s.resolved);
    prob.g = parse_terminal(cfg, "solve", s, s.resolved);

    const json probe_j = cfg.value("probe", json{{"r", 0.0}});
    check_keys(probe_j, "solve.probe", {"r"});
    const double r = num(probe_j.value("r", json(0.0)), "solve.probe.r");
    s.resolved["probe"] = {{"r", r}};

    const json sol_j = cfg.value("solver", json::object());
    check_keys(sol_j, "solve.solver",
               {"backend", "iterations", "budgets", "outer_paths", "tolerance", "features"});
    SolverConfig scfg;
    scfg.grid = s.grid;
    scfg.seed = s.seed;
    scfg.workers = s.threads;
    const std::string backend = str(sol_j.value("backend", json("regression")),
                                    "solve.solver.backend");
    if (backend == "ode")
        scfg.backend = SolverBackend::ode_fast_path;
    else if (backend == "regression")
        scfg.backend = SolverBackend::regression;
    else if (backend == "nested")
        scfg.backend = SolverBackend::nested_mc;
    else
        throw SchemaError("solve.solver.backend: expected ode|regression|nested");
    scfg.picard_iters =
        static_cast<int>(integer(sol_j.value("iterations", json(4)), "solve.solver.iterations"));
    scfg.outer_paths = s.n_paths;
    if (sol_j.contains("outer_paths"))
        scfg.outer_paths = static_cast<std::size_t>(
            integer(sol_j["outer_paths"], "solve.solver.outer_paths"));
    if (sol_j.contains("budgets")) {
        scfg.budgets.clear();
        for (const auto& b : sol_j["budgets"])
            scfg.budgets.push_back(
                static_cast<std::size_t>(integer(b, "solve.solver.budgets[]")));
    }
    scfg.tolerance = num(sol_j.value("tolerance", json(1e-3)), "solve.solver.tolerance");
    if (sol_j.contains("features")) {
        for (const auto& f : sol_j["features"]) {
            const Expression e =
                parse_expr(f, "solve.solver.features[]", s.grid.horizon(), s.dim);
            scfg.features.push_back(e.to_functional());
        }
    }
    s.resolved["solver"] = {{"backend", backend},
                            {"iterations", scfg.picard_iters},
                            {"budgets", scfg.budgets},
                            {"outer_paths", scfg.outer_paths},
                            {"tolerance", scfg.tolerance}};
    if (sol_j.contains("features")) s.resolved["solver"]["features"] = sol_j["features"];

    const SolveResult res = solve_point(r, s.initial, prob, scfg);
    json diag{{"backend", res.diagnostics.backend_name},
              {"iterations", res.diagnostics.iterations},
              {"iteration_changes", res.diagnostics.iteration_changes},
              {"fixed_point_residual", res.diagnostics.fixed_point_residual},
              {"clamp_count", res.diagnostics.clamp_count},
              {"terminal_abs_max", res.diagnostics.terminal_abs_max},
              {"converged", res.diagnostics.converged}};
    return finish("solve", s, res.estimate.value, res.estimate.std_error,
                  res.estimate.n_samples, std::move(diag), t0);
}

json run_fk(const json& cfg, CommonSetup& s, const std::chrono::steady_clock::time_point& t0) {
    check_keys(cfg, "fk",
               {"grid", "diffusion", "initial", "run", "alpha", "beta", "terminal", "probe"});
    const Expression alpha =
        parse_expr(cfg.value("alpha", json("0")), "fk.alpha", s.grid.horizon(), s.dim);
    const Expression beta =
        parse_expr(cfg.value("beta", json("0")), "fk.beta", s.grid.horizon(), s.dim);
    const TerminalFunctional g = parse_terminal(cfg, "fk", s, s.resolved);
    const json probe_j = cfg.value("probe", json{{"r", 0.0}});
    check_keys(probe_j, "fk.probe", {"r"});
    const double r = num(probe_j.value("r", json(0.0)), "fk.probe.r");
    s.resolved["alpha"] = alpha.text();
    s.resolved["beta"] = beta.text();
    s.resolved["probe"] = {{"r", r}};

    const auto e = fk_solve(r, s.initial, alpha.to_functional(), beta.to_functional(), g, s.spec,
                            sim_config(s));
    return finish("fk", s, e.value, e.std_error, e.n_samples, json::object(), t0);
}

json run_control(const json& cfg, CommonSetup& s,
                 const std::chrono::steady_clock::time_point& t0) {
    check_keys(cfg, "control",
               {"grid", "diffusion", "initial", "run", "terminal", "control", "solver"});
    const json j = require(cfg, "control", "control");
    check_keys(j, "control.control",
               {"p", "alpha", "eta", "nu0", "perturbations", "u_source", "checkpoints"});

    ControlProblem prob;
    prob.p = num(j.value("p", json(2.0)), "control.control.p");
    const Expression alpha =
        parse_expr(j.value("alpha", json("0")), "control.control.alpha", s.grid.horizon(), s.dim);
    const Expression eta =
        parse_expr(j.value("eta", json("1")), "control.control.eta", s.grid.horizon(), s.dim);
    prob.alpha = alpha.to_functional();
    prob.eta = eta.to_functional();
    prob.nu0 = num(j.value("nu0", json(1.0)), "control.control.nu0");
    prob.g = parse_terminal(cfg, "control", s, s.resolved);
    prob.spec = s.spec;
    prob.initial = s.initial;

    s.resolved["control"] = {{"p", prob.p},
                             {"alpha", alpha.text()},
                             {"eta", eta.text()},
                             {"nu0", prob.nu0}};

    // candidate value functional for the dual problem
    const json usrc = j.value("u_source", json{{"kind", "ode"}});
    check_keys(usrc, "control.control.u_source", {"kind", "expr", "unsafe"});
    const std::string ukind = str(usrc.value("kind", json("ode")), "control.u_source.kind");
    s.resolved["control"]["u_source"] = usrc;

    MildProblem dual;
    dual.spec = s.spec;
    dual.f = make_control_dual(prob.alpha, prob.eta, prob.p,
                               !alpha.depends_on_path() && !eta.depends_on_path());
    dual.g = prob.g;

    FunctionalHandle u_hat;
    double u0_se = 0.0;
    if (ukind == "expression") {
        if (!usrc.value("unsafe", false))
            throw SchemaError(
                "control.u_source: a user-supplied value functional requires \"unsafe\": true");
        u_hat = parse_expr(require(usrc, "control.u_source", "expr"), "control.u_source.expr",
                           s.grid.horizon(), s.dim)
                    .to_functional();
    } else {
        SolverConfig scfg;
        scfg.grid = s.grid;
        scfg.seed = s.seed + 1;
        scfg.workers = s.threads;
        scfg.tolerance = 1e-6;
        if (ukind == "ode") {
            scfg.backend = SolverBackend::ode_fast_path;
        } else if (ukind == "regression") {
            scfg.backend = SolverBackend::regression;
            scfg.outer_paths = s.n_paths;
            scfg.picard_iters = 8;
        } else {
            throw SchemaError("control.u_source.kind: expected ode|regression|expression");
        }
        const SolveResult ures = solve_point(0.0, s.initial, dual, scfg);
        u_hat = ures.u_hat;
        u0_se = ures.estimate.std_error;
    }

    std::vector<ControlProcess> perturbations;
    if (j.contains("perturbations")) {
        for (const auto& pj : j["perturbations"]) {
            check_keys(pj, "control.perturbations[]", {"kind", "factor", "delay"});
            const std::string kind = str(require(pj, "control.perturbations[]", "kind"),
                                         "control.perturbations[].kind");
            auto defaults = default_perturbations(u_hat, prob);
            if (kind == "scale") {
                const double factor = num(pj.value("factor", json(1.5)),
                                          "control.perturbations[].factor");
                ControlProcess base = optimal_feedback_control(u_hat, prob);
                ControlProcess scaled;
                scaled.name = "scaled(" + std::to_string(factor) + ")";
                scaled.nu0 = factor * prob.nu0;
                const auto traj = base.trajectory;
                scaled.trajectory = [traj, factor](const PathView& p, std::vector<double>& l,
                                                   std::vector<double>& rt) {
                    traj(p, l, rt);
                    for (auto& v : l) v *= factor;
                    for (auto& v : rt) v *= factor;
                };
                perturbations.push_back(std::move(scaled));
            } else if (kind == "delay") {
                perturbations.push_back(defaults[1]);
            } else if (kind == "constant_rate") {
                perturbations.push_back(defaults[2]);
            } else {
                throw SchemaError("control.perturbations[].kind: unknown kind '" + kind + "'");
            }
        }
    } else {
        perturbations = default_perturbations(u_hat, prob);
    }

    const OptimalityReport rep =
        verify_optimality(prob, u_hat, perturbations, sim_config(s), u0_se);

    MartingaleCheckConfig mcfg;
    if (j.contains("checkpoints"))
        for (const auto& c : j["checkpoints"])
            mcfg.checkpoint_times.push_back(num(c, "control.checkpoints[]"));
    const MartingaleReport mrep = check_value_martingale(u_hat, prob, sim_config(s), mcfg);

    json perts = json::array();
    for (const auto& pr : rep.perturbations)
        perts.push_back({{"name", pr.name},
                         {"j_value", pr.j_value},
                         {"j_std_error", pr.j_std_error},
                         {"gap_vs_star", pr.gap_vs_star},
                         {"gap_paired_se", pr.gap_paired_se},
                         {"decomposition_lhs", pr.decomposition_lhs},
                         {"decomposition_rhs", pr.decomposition_rhs},
                         {"decomposition_diff", pr.decomposition_diff},
                         {"decomposition_se", pr.decomposition_se}});
    json diag{{"j_star", rep.j_star},
              {"j_star_se", rep.j_star_se},
              {"u0", rep.u0},
              {"u0_se", rep.u0_se},
              {"identity_gap", rep.identity_gap},
              {"identity_gap_se", rep.identity_gap_se},
              {"perturbations", std::move(perts)},
              {"value_martingale", martingale_json(mrep)},
              {"caveat", rep.caveat}};
    return finish("control", s, rep.identity_gap, rep.identity_gap_se, s.n_paths,
                  std::move(diag), t0);
}

json run_viscosity(const json& cfg, CommonSetup& s,
                   const std::chrono::steady_clock::time_point& t0) {
    check_keys(cfg, "viscosity",
               {"grid", "diffusion", "initial", "run", "nonlinearity", "viscosity"});
    const json j = require(cfg, "viscosity", "viscosity");
    check_keys(j, "viscosity.viscosity",
               {"u", "phi", "r", "gamma", "delta", "gamma_scales", "rule_fractions", "side",
                "weight_beta", "residual_tolerance"});

    const double horizon = s.grid.horizon();
    const Expression u_expr =
        parse_expr(require(j, "viscosity", "u"), "viscosity.u", horizon, s.dim);
    const FunctionalHandle u = u_expr.to_functional();
    const Nonlinearity f = parse_nonlinearity(cfg, "viscosity", s, s.resolved);

    const double r = num(j.value("r", json(0.0)), "viscosity.r");
    const double gamma = num(j.value("gamma", json(0.5)), "viscosity.gamma");
    const double delta = num(j.value("delta", json(0.1 * horizon)), "viscosity.delta");
    const double rtol = num(j.value("residual_tolerance", json(1e-3)),
                            "viscosity.residual_tolerance");
    std::vector<double> gscales{0.1, 0.5, 1.0};
    if (j.contains("gamma_scales")) {
        gscales.clear();
        for (const auto& v : j["gamma_scales"]) gscales.push_back(num(v, "gamma_scales[]"));
    }
    std::vector<double> rfracs{0.0, 0.25, 0.5};
    if (j.contains("rule_fractions")) {
        rfracs.clear();
        for (const auto& v : j["rule_fractions"]) rfracs.push_back(num(v, "rule_fractions[]"));
    }
    const std::string side_s = str(j.value("side", json("sub")), "viscosity.side");
    const MembershipSide side =
        side_s == "super" ? MembershipSide::supersolution : MembershipSide::subsolution;

    VectorFunctional weight;
    bool has_weight = false;
    if (j.contains("weight_beta")) {
        const Expression w =
            parse_expr(j["weight_beta"], "viscosity.weight_beta", horizon, s.dim);
        const int d = s.dim;
        weight = {[w, d](double t, const PathView& x, double* out) {
                      const double v = w.eval(t, x);
                      for (int i = 0; i < d; ++i) out[i] = v;
                  },
                  w.text()};
        has_weight = true;
    }

    s.resolved["viscosity"] = {{"u", u_expr.text()},   {"r", r},
                               {"gamma", gamma},        {"delta", delta},
                               {"gamma_scales", gscales}, {"rule_fractions", rfracs},
                               {"side", side_s},        {"residual_tolerance", rtol}};

    DerivativeConfig dcfg;
    json phis = json::array();
    double worst_gap = std::numeric_limits<double>::infinity();
    int contradictions = 0;
    for (const auto& pj : require(j, "viscosity", "phi")) {
        const Expression phi_expr = parse_expr(pj, "viscosity.phi[]", horizon, s.dim);
        TestFunctionCandidate cand;
        cand.phi = phi_expr.to_functional();
        cand.r = r;
        cand.x = s.initial;
        cand.gamma = gamma;
        cand.delta = delta;
        const MembershipReport mrep =
            test_membership(u, cand, s.spec, sim_config(s), side, gscales, rfracs,
                            has_weight ? &weight : nullptr);
        const TestFunctionResidual resid =
            residual_at_test_function(cand.phi, s.spec, f, u, r, s.initial, dcfg, rtol);

        const bool member_consistent = !mrep.any_violated;
        const bool inequality_ok = side == MembershipSide::subsolution
                                       ? resid.subsolution_inequality_holds
                                       : resid.supersolution_inequality_holds;
        const bool contradiction = member_consistent && !inequality_ok;
        contradictions += contradiction ? 1 : 0;
        worst_gap = std::min(worst_gap, mrep.worst_gap);

        json rules = json::array();
        for (const auto& rr : mrep.rules)
            rules.push_back({{"gamma", rr.gamma},
                             {"rule_time", rr.rule_time},
                             {"gap", rr.gap},
                             {"std_error", rr.std_error},
                             {"p_exit_positive", rr.p_tau_positive},
                             {"verdict", to_string(rr.verdict)}});
        phis.push_back({{"phi", phi_expr.text()},
                        {"rules", std::move(rules)},
                        {"membership_consistent", member_consistent},
                        {"worst_gap", mrep.worst_gap},
                        {"residual", resid.value},
                        {"inequality_holds", inequality_ok},
                        {"contradiction", contradiction}});
    }
    json diag{{"test_functions", std::move(phis)}, {"contradictions", contradictions}};
    return finish("viscosity", s, worst_gap, 0.0, s.n_paths, std::move(diag), t0);
}

json run_check_derivs(const json& cfg, CommonSetup& s,
                      const std::chrono::steady_clock::time_point& t0) {
    check_keys(cfg, "check-derivs", {"grid", "diffusion", "initial", "run", "output_csv"});
    const double horizon = s.grid.horizon();
    DerivativeConfig dcfg;
    RngStream rng(s.seed);

    std::ostringstream csv;
    csv << "functional,derivative,analytic,numeric,abs_error\n";
    json rows = json::array();
    double worst = 0.0;
    for (const auto& a : catalogue::standard_battery(horizon)) {
        DiscretePath x(s.grid, a.dim);
        for (int i = 0; i < a.dim; ++i) x.at(0, i) = 0.3 * rng.normal();
        for (std::size_t k = 1; k < s.grid.node_count(); ++k)
            for (int i = 0; i < a.dim; ++i)
                x.at(k, i) = x.at(k - 1, i) +
                             std::sqrt(s.grid.node(k) - s.grid.node(k - 1)) * rng.normal();
        const double t = s.grid.node(s.grid.steps() / 3);
        const PathView xv = x.view();

        auto emit = [&](const std::string& deriv, double analytic, double numeric) {
            const double err = std::abs(analytic - numeric);
            worst = std::max(worst, err);
            csv << a.u.label << ',' << deriv << ',' << analytic << ',' << numeric << ',' << err
                << "\n";
            rows.push_back({{"functional", a.u.label},
                            {"derivative", deriv},
                            {"analytic", analytic},
                            {"numeric", numeric},
                            {"abs_error", err}});
        };
        emit("horizontal", a.dt(t, xv), horizontal_derivative(a.u, t, xv, dcfg));
        const auto ge = a.grad(t, xv);
        const auto gn = vertical_gradient(a.u, t, xv, dcfg);
        for (int i = 0; i < a.dim; ++i)
            emit("vertical_" + std::to_string(i + 1), ge[i], gn[i]);
        const auto He = a.hess(t, xv);
        const auto Hn = vertical_hessian(a.u, t, xv, dcfg);
        for (int i = 0; i < a.dim; ++i)
            for (int jj = 0; jj < a.dim; ++jj)
                emit("hessian_" + std::to_string(i + 1) + std::to_string(jj + 1), He(i, jj),
                     Hn(i, jj));
    }
    const std::string out_csv = cfg.value("output_csv", "");
    if (!out_csv.empty()) {
        std::ofstream os(out_csv);
        if (!os) throw std::runtime_error("cannot open " + out_csv);
        os << csv.str();
    }
    s.resolved["output_csv"] = out_csv;
    return finish("check-derivs", s, worst, 0.0, rows.size(), {{"rows", std::move(rows)}}, t0);
}

json run_validate_f(const json& cfg, CommonSetup& s,
                    const std::chrono::steady_clock::time_point& t0) {
    check_keys(cfg, "validate-f",
               {"grid", "diffusion", "initial", "run", "nonlinearity", "z_max", "samples"});
    const Nonlinearity f = parse_nonlinearity(cfg, "validate-f", s, s.resolved);
    ValidateConfig vcfg;
    vcfg.grid = s.grid;
    vcfg.dim = s.dim;
    vcfg.seed = s.seed;
    vcfg.z_scale = num(cfg.value("z_max", json(10.0)), "validate-f.z_max");
    const auto samples = integer(cfg.value("samples", json(1024)), "validate-f.samples");
    vcfg.pairs_per_probe = static_cast<int>(std::max<std::int64_t>(4, samples / 32));
    s.resolved["z_max"] = vcfg.z_scale;
    s.resolved["samples"] = samples;

    const ValidationReport rep = validate_conditions(f, vcfg);
    auto cond_json = [](const ConditionEvidence& e) {
        json j{{"status", to_string(e.status)}, {"note", e.note}};
        j["bound_kappa"] = e.bound_kappa;
        j["lipschitz_lambda"] = e.lipschitz_lambda;
        j["growth_alpha"] = e.growth_alpha;
        j["growth_beta"] = e.growth_beta;
        if (std::isfinite(e.lower_boundary_limit))
            j["lower_boundary_limit"] = e.lower_boundary_limit;
        if (std::isfinite(e.upper_boundary_limit))
            j["upper_boundary_limit"] = e.upper_boundary_limit;
        return j;
    };
    json diag{{"local_regularity", cond_json(rep.local_regularity)},
              {"linear_growth", cond_json(rep.linear_growth)},
              {"boundary_limits", cond_json(rep.boundary_limits)}};
    return finish("validate-f", s, rep.all_pass() ? 1.0 : 0.0, 0.0,
                  static_cast<std::size_t>(samples), std::move(diag), t0);
}

}  // namespace

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like path.to.key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json* node = &config;
    std::size_t begin = 0;
    for (;;) {
        const auto dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot - begin);
        if (key.empty()) throw std::invalid_argument("override has an empty path segment");
        if (dot == std::string::npos) {
            (*node)[key] = json::parse(value, nullptr, false).is_discarded()
                               ? json(value)
                               : json::parse(value);
            return;
        }
        node = &(*node)[key];
        begin = dot + 1;
    }
}

RunResult run_subcommand(const std::string& name, const nlohmann::json& config) {
    RunResult result;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        CommonSetup s = parse_common(config, name);
        if (name == "simulate")
            result.output = run_simulate(config, s, t0);
        else if (name == "solve")
            result.output = run_solve(config, s, t0);
        else if (name == "fk")
            result.output = run_fk(config, s, t0);
        else if (name == "control")
            result.output = run_control(config, s, t0);
        else if (name == "viscosity")
            result.output = run_viscosity(config, s, t0);
        else if (name == "check-derivs")
            result.output = run_check_derivs(config, s, t0);
        else if (name == "validate-f")
            result.output = run_validate_f(config, s, t0);
        else
            throw SchemaError("unknown subcommand '" + name + "'");
        if (!s.output_path.empty()) {
            std::ofstream os(s.output_path);
            if (!os) throw std::runtime_error("cannot open " + s.output_path + " for writing");
            os << result.output.dump(2) << "\n";
        }
    } catch (const SchemaError& e) {
        result.exit_code = 2;
        result.error = e.what();
    } catch (const json::exception& e) {
        result.exit_code = 2;
        result.error = e.what();
    } catch (const std::invalid_argument& e) {
        result.exit_code = 2;
        result.error = e.what();
    } catch (const std::exception& e) {
        result.exit_code = 3;
        result.error = e.what();
    }
    return result;
}

}  // namespace ppde::cli
