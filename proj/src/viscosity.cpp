#include "ppde/viscosity.hpp"

#include <cmath>
#include <stdexcept>

#include "ppde/derivative.hpp"
#include "ppde/parallel.hpp"

namespace ppde {

const char* to_string(MembershipVerdict v) {
    switch (v) {
        case MembershipVerdict::consistent: return "consistent-with-membership";
        case MembershipVerdict::violated: return "violated";
        case MembershipVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

MembershipReport test_membership(const FunctionalHandle& u, const TestFunctionCandidate& cand,
                                 const DiffusionSpec& spec, const SimConfig& cfg,
                                 MembershipSide side, const std::vector<double>& gamma_scales,
                                 const std::vector<double>& rule_fractions,
                                 const VectorFunctional* weight_beta) {
    if (!(cand.delta > 0.0 && cand.r + cand.delta < cfg.grid.horizon()))
        throw std::invalid_argument("test_membership: need 0 < delta < horizon - r");
    if (!(cand.gamma > 0.0)) throw std::invalid_argument("test_membership: gamma must be positive");

    const Ensemble ens = simulate_from(cand.r, cand.x, spec, cfg);
    const TimeGrid& grid = ens.grid();
    const DiscretePath xg = resample(cand.x, grid);

    const double here =
        u.eval(cand.r, stopped_view(xg.view(), cand.r)) -
        cand.phi.eval(cand.r, stopped_view(xg.view(), cand.r));

    std::vector<double> weights(ens.size(), 1.0);
    if (weight_beta)
        weights = stochastic_exponential_weights(*weight_beta, cand.r, ens, spec, cfg.workers);

    MembershipReport rep;
    rep.side = side;
    rep.worst_gap = std::numeric_limits<double>::infinity();

    std::vector<double> vals(ens.size());
    std::vector<double> taus(ens.size());
    const double atol = 1e-12;
    for (double gs : gamma_scales) {
        const double gamma = gs * cand.gamma;
        parallel_chunks(ens.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                taus[i] = std::min(hitting_time(gamma, cand.r, xg, ens.view(i)),
                                   cand.r + cand.delta);
        });
        double p_pos = 0.0;
        for (double tv : taus)
            if (tv > cand.r) p_pos += 1.0;
        p_pos /= static_cast<double>(ens.size());

        for (double frac : rule_fractions) {
            const double rule_time = cand.r + frac * cand.delta;
            parallel_chunks(ens.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i) {
                    const double stop_at = std::min(rule_time, taus[i]);
                    const PathView p = stopped_view(ens.view(i), stop_at);
                    vals[i] = weights[i] * (u.eval(stop_at, p) - cand.phi.eval(stop_at, p));
                }
            });
            const EstimateWithError e = estimate_from_samples(vals);
            MembershipRuleResult rr;
            rr.gamma = gamma;
            rr.rule_time = rule_time;
            rr.std_error = e.std_error;
            rr.p_tau_positive = p_pos;
            rr.gap = (side == MembershipSide::subsolution) ? here - e.value : e.value - here;
            if (rr.gap < -(3.0 * rr.std_error + atol))
                rr.verdict = MembershipVerdict::violated;
            else if (rr.gap >= -atol)
                rr.verdict = MembershipVerdict::consistent;
            else
                rr.verdict = MembershipVerdict::inconclusive;
            rep.any_violated = rep.any_violated || rr.verdict == MembershipVerdict::violated;
            if (rr.gap < rep.worst_gap) {
                rep.worst_gap = rr.gap;
                rep.worst_gap_se = rr.std_error;
            }
            rep.rules.push_back(rr);
        }
    }
    return rep;
}

TestFunctionResidual residual_at_test_function(const FunctionalHandle& phi,
                                               const DiffusionSpec& spec, const Nonlinearity& f,
                                               const FunctionalHandle& u, double r,
                                               const DiscretePath& x,
                                               const DerivativeConfig& dcfg, double tolerance) {
    const PathView xv = x.view();
    const double z = u.eval(r, stopped_view(xv, r));
    if (!f.domain.contains(z))
        throw std::domain_error("residual_at_test_function: u(r,x) = " + std::to_string(z) +
                                " outside the reaction domain " + f.domain.describe());
    TestFunctionResidual out;
    out.tolerance = tolerance;
    out.value = generator_plus_dt(spec, phi, r, xv, dcfg) - f.eval(r, stopped_view(xv, r), z);
    out.subsolution_inequality_holds = out.value >= -tolerance;
    out.supersolution_inequality_holds = out.value <= tolerance;
    return out;
}

}  // namespace ppde
