#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ppde/functional.hpp"

namespace ppde {

/// Non-degenerate interval D of admissible reaction values.
struct DomainInterval {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool closed_lower = false;
    bool closed_upper = false;

    static DomainInterval real_line() { return {}; }
    static DomainInterval half_line() {  // [0, inf)
        DomainInterval d;
        d.lower = 0.0;
        d.closed_lower = true;
        return d;
    }

    bool bounded_below() const { return std::isfinite(lower); }
    bool bounded_above() const { return std::isfinite(upper); }

    bool contains(double z) const {
        if (z < lower || (z == lower && !closed_lower)) return false;
        if (z > upper || (z == upper && !closed_upper)) return false;
        return true;
    }

    std::string describe() const;
};

void check_domain_interval(const DomainInterval& d);

/// Reaction term f(t, x, z) on domain D, non-anticipative in (t, x).
struct Nonlinearity {
    enum class Tag { zero, affine, power, superprocess, control_dual, custom };

    std::function<double(double, const PathView&, double)> eval;
    DomainInterval domain;
    Tag tag = Tag::custom;
    bool path_independent = false;
    std::string label;

    double operator()(double t, const PathView& x, double z) const { return eval(t, x, z); }
};

Nonlinearity zero_nonlinearity();

/// f(t,x,z) = alpha(t,x) + beta(t,x) z on D = R.
Nonlinearity make_affine(FunctionalHandle alpha, FunctionalHandle beta,
                         bool path_independent = false);

/// f(t,x,z) = alpha(t,x) z^p on D = [0, inf), p >= 1.
Nonlinearity make_power(FunctionalHandle alpha, double p, bool path_independent = false);

/// One atom of the branching kernel: weight w(t,x) at position u > 0.
struct SuperprocessAtom {
    double position = 1.0;
    FunctionalHandle weight;
};

/// Branching mechanism alpha z + gamma z^2 + sum_k w_k (e^{-u_k z} - 1 + u_k z)
/// on D = [0, inf); the kernel is a finite atomic measure.
Nonlinearity make_superprocess(FunctionalHandle alpha, FunctionalHandle gamma,
                               std::vector<SuperprocessAtom> atoms,
                               bool path_independent = false);

/// f(t,x,z) = -alpha(t,x) + z^q / ((q-1) eta(t,x)^{q-1}) with q = p/(p-1),
/// the reaction dual to the p-power control cost. eta must stay positive.
Nonlinearity make_control_dual(FunctionalHandle alpha, FunctionalHandle eta, double p,
                               bool path_independent = false);

enum class ConditionStatus { pass, inconclusive, fail };

const char* to_string(ConditionStatus s);

struct ConditionEvidence {
    ConditionStatus status = ConditionStatus::pass;
    double bound_kappa = 0.0;        // largest |f| seen near probe values
    double lipschitz_lambda = 0.0;   // largest difference quotient seen
    double growth_alpha = 0.0;       // fitted affine envelope, condition (ii)
    double growth_beta = 0.0;
    double lower_boundary_limit = std::numeric_limits<double>::quiet_NaN();
    double upper_boundary_limit = std::numeric_limits<double>::quiet_NaN();
    std::string note;
};

/// Sampling-based evidence for the existence hypotheses: (i) local bound and
/// local Lipschitz continuity in z, (ii) one-sided linear growth on unbounded
/// domains, (iii) boundary sign limits on bounded ends. Evidence, not proof.
struct ValidationReport {
    ConditionEvidence local_regularity;   // (i)
    ConditionEvidence linear_growth;      // (ii)
    ConditionEvidence boundary_limits;    // (iii)
    bool all_pass() const;
};

struct ValidateConfig {
    TimeGrid grid;
    int dim = 1;
    int tx_samples = 16;       // (t, x) sample pairs
    int z_probes = 32;         // probe centers across D
    int pairs_per_probe = 32;  // z-pairs per probe window
    double z_scale = 10.0;     // extent explored on unbounded sides
    double boundary_tol = 1e-9;
    std::uint64_t seed = 1;
};

ValidationReport validate_conditions(const Nonlinearity& f, const ValidateConfig& cfg);

}  // namespace ppde
