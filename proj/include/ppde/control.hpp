#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ppde/diffusion.hpp"
#include "ppde/functional.hpp"

namespace ppde {

/// Pointwise gap of the p-th power function,
///   y^p - p y z^{p-1} + (p-1) z^p,   y, z >= 0, p > 1.
/// Nonnegative with equality exactly on the diagonal y = z; the integrand of
/// the cost decomposition below. Evaluated in a scaled expm1/log1p form so
/// near-diagonal values stay nonnegative in floating point.
double power_bregman_gap(double p, double y, double z);

/// Cost-minimization data: minimize
///   J(nu) = E[ int_0^T (|nu'|^p eta + |nu|^p alpha) dt + g(X^T) |nu(T)|^p ]
/// over absolutely continuous controls started at nu0. The dual reaction
/// f = -alpha + z^q/((q-1) eta^{q-1}), q = p/(p-1), ties J to the mild
/// solution u through J(nu*) = nu0^p u(0, x).
struct ControlProblem {
    double p = 2.0;
    FunctionalHandle alpha;
    FunctionalHandle eta;       // must stay >= eta_min > 0
    TerminalFunctional g;       // nonnegative terminal weight
    double nu0 = 1.0;
    DiffusionSpec spec;
    DiscretePath initial;       // start path at time 0

    double dual_exponent() const { return p / (p - 1.0); }
};

/// Absolutely continuous control nu(t) = nu0 + int_0^t rate ds. `rate` is a
/// non-anticipative feedback of (t, path). If `level` is set it supplies
/// nu(t) directly (a consistent closed form); otherwise the cost integrates
/// the rate with left-endpoint sums. `trajectory`, when set, fills both
/// arrays along a path in one pass and takes precedence.
struct ControlProcess {
    std::string name;
    double nu0 = 1.0;
    std::function<double(double, const PathView&)> rate;
    std::function<double(double, const PathView&)> level;
    std::function<void(const PathView&, std::vector<double>&, std::vector<double>&)> trajectory;
};

struct StrategyTrajectory {
    std::vector<double> times;
    std::vector<double> nu;
    std::vector<double> nu_dot;
};

/// The explicit minimizing strategy along one path:
/// nu*(t) = nu0 exp( - int_0^t (u/eta)^{q-1} ds ), left-endpoint integral,
/// with rate nu*' = -nu* (u/eta)^{q-1}. Requires u >= 0 and eta > 0 along
/// the path.
StrategyTrajectory optimal_strategy(const FunctionalHandle& u, const ControlProblem& prob,
                                    const DiscretePath& path);

/// The same strategy packaged as a control process for cost evaluation.
ControlProcess optimal_feedback_control(const FunctionalHandle& u, const ControlProblem& prob);

/// Monte Carlo estimate of the cost functional J.
EstimateWithError cost(const ControlProcess& nu, const ControlProblem& prob, const SimConfig& cfg);

/// Per-path cost values on an existing ensemble (for paired comparisons).
std::vector<double> cost_samples(const ControlProcess& nu, const ControlProblem& prob,
                                 const Ensemble& ens, unsigned workers = 1);

struct PerturbationResult {
    std::string name;
    double j_value = 0.0;
    double j_std_error = 0.0;
    double gap_vs_star = 0.0;        // J(nu) - J(nu*), paired
    double gap_paired_se = 0.0;
    double decomposition_lhs = 0.0;  // J(nu) - nu(0)^p u(0,x)
    double decomposition_rhs = 0.0;  // direct power-gap integral estimate
    double decomposition_diff = 0.0;
    double decomposition_se = 0.0;   // paired SE of lhs - rhs
};

struct OptimalityReport {
    double j_star = 0.0;
    double j_star_se = 0.0;
    double u0 = 0.0;
    double u0_se = 0.0;
    double identity_gap = 0.0;     // J(nu*) - nu0^p u(0,x)
    double identity_gap_se = 0.0;  // combined
    std::vector<PerturbationResult> perturbations;
    std::string caveat;
};

/// Default perturbation suite: scaled strategy, delayed rate, constant-rate
/// liquidation.
std::vector<ControlProcess> default_perturbations(const FunctionalHandle& u,
                                                  const ControlProblem& prob);

/// Check (a) the value identity J(nu*) = nu0^p u(0,x), (b) J(nu) >= J(nu*)
/// for each perturbation under paired seeds, and (c) the decomposition
/// J(nu) - nu(0)^p u(0,x) = E[ int eta gap_p(|nu'|, nu (u/eta)^{q-1}) dt ].
/// u_hat must approximate the mild solution of the dual problem;
/// u0_std_error carries its sampling error when known.
OptimalityReport verify_optimality(const ControlProblem& prob, const FunctionalHandle& u_hat,
                                   const std::vector<ControlProcess>& perturbations,
                                   const SimConfig& cfg, double u0_std_error = 0.0);

/// Drift of the compensated value process
///   M_t = u(t, X^t) + int_0^t ( alpha - u^q/((q-1) eta^{q-1}) ) ds
/// at checkpoint times, with the same 3 SE + bias-allowance gate as the
/// generator-based martingale check.
MartingaleReport check_value_martingale(const FunctionalHandle& u_hat, const ControlProblem& prob,
                                        const SimConfig& cfg,
                                        const MartingaleCheckConfig& mcfg = {});

}  // namespace ppde
