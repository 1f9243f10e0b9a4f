#pragma once

#include <string>
#include <vector>

#include "ppde/diffusion.hpp"

namespace ppde {

/// Candidate smooth test function phi at a probe point (r, x), with the
/// radius gamma of the exit rule and the time window delta used by the
/// stopped-comparison battery.
struct TestFunctionCandidate {
    FunctionalHandle phi;
    double r = 0.0;
    DiscretePath x;
    double gamma = 0.5;
    double delta = 0.1;
};

enum class MembershipSide { subsolution, supersolution };

enum class MembershipVerdict { consistent, violated, inconclusive };

const char* to_string(MembershipVerdict v);

struct MembershipRuleResult {
    double gamma = 0.0;      // exit radius of this rule
    double rule_time = 0.0;  // deterministic early time tau~ in [r, r+delta)
    double gap = 0.0;        // oriented so membership demands gap >= 0
    double std_error = 0.0;
    double p_tau_positive = 0.0;  // fraction of paths with exit time > r
    MembershipVerdict verdict = MembershipVerdict::inconclusive;
};

struct MembershipReport {
    MembershipSide side = MembershipSide::subsolution;
    std::vector<MembershipRuleResult> rules;
    bool any_violated = false;
    double worst_gap = 0.0;
    double worst_gap_se = 0.0;
};

/// Estimate the stopped-comparison inequality behind the test-function space:
/// on the subsolution side membership demands
///     (u - phi)(r, x)  >=  E[ w (u - phi)(tau~ ^ tau, X^{tau~ ^ tau}) ]
/// for every early rule tau~, where tau is the gamma-exit time capped at
/// r + delta and w is 1 or, when `weight_beta` is given, the stochastic
/// exponential of beta at the horizon. The report orients each rule's gap so
/// that membership requires gap >= 0 and marks it violated only when the gap
/// is below -(3 SE): a finite battery can falsify membership, never certify it.
MembershipReport test_membership(const FunctionalHandle& u, const TestFunctionCandidate& cand,
                                 const DiffusionSpec& spec, const SimConfig& cfg,
                                 MembershipSide side,
                                 const std::vector<double>& gamma_scales = {0.1, 0.5, 1.0},
                                 const std::vector<double>& rule_fractions = {0.0, 0.25, 0.5},
                                 const VectorFunctional* weight_beta = nullptr);

struct TestFunctionResidual {
    double value = 0.0;  // (d_r + L)(phi)(r,x) - f(r, x, u(r,x))
    double tolerance = 0.0;
    bool subsolution_inequality_holds = false;   // value >= -tolerance
    bool supersolution_inequality_holds = false; // value <= +tolerance
};

/// The pointwise inequality a viscosity sub/supersolution imposes on every
/// member of its test-function space, evaluated by finite differences.
TestFunctionResidual residual_at_test_function(const FunctionalHandle& phi,
                                               const DiffusionSpec& spec, const Nonlinearity& f,
                                               const FunctionalHandle& u, double r,
                                               const DiscretePath& x,
                                               const DerivativeConfig& dcfg, double tolerance);

}  // namespace ppde
