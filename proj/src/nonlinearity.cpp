#include "ppde/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ppde/rng.hpp"

namespace ppde {

std::string DomainInterval::describe() const {
    std::ostringstream os;
    os << (closed_lower ? '[' : '(');
    if (bounded_below())
        os << lower;
    else
        os << "-inf";
    os << ", ";
    if (bounded_above())
        os << upper;
    else
        os << "inf";
    os << (closed_upper ? ']' : ')');
    return os.str();
}

void check_domain_interval(const DomainInterval& d) {
    if (!(d.lower < d.upper))
        throw std::invalid_argument("DomainInterval: interval is degenerate");
}

namespace {

void require_nonnegative(double z, const char* who) {
    if (z < 0.0)
        throw std::domain_error(std::string(who) + ": argument z = " + std::to_string(z) +
                                " below the domain [0, inf)");
}

}  // namespace

Nonlinearity zero_nonlinearity() {
    Nonlinearity f;
    f.eval = [](double, const PathView&, double) { return 0.0; };
    f.domain = DomainInterval::real_line();
    f.tag = Nonlinearity::Tag::zero;
    f.path_independent = true;
    f.label = "0";
    return f;
}

Nonlinearity make_affine(FunctionalHandle alpha, FunctionalHandle beta, bool path_independent) {
    Nonlinearity f;
    f.eval = [alpha = std::move(alpha), beta = std::move(beta)](double t, const PathView& x,
                                                                double z) {
        return alpha.eval(t, x) + beta.eval(t, x) * z;
    };
    f.domain = DomainInterval::real_line();
    f.tag = Nonlinearity::Tag::affine;
    f.path_independent = path_independent;
    f.label = "affine";
    return f;
}

Nonlinearity make_power(FunctionalHandle alpha, double p, bool path_independent) {
    if (!(p >= 1.0)) throw std::invalid_argument("make_power: exponent must be >= 1");
    Nonlinearity f;
    f.eval = [alpha = std::move(alpha), p](double t, const PathView& x, double z) {
        require_nonnegative(z, "power nonlinearity");
        return alpha.eval(t, x) * std::pow(z, p);
    };
    f.domain = DomainInterval::half_line();
    f.tag = Nonlinearity::Tag::power;
    f.path_independent = path_independent;
    f.label = "power(p=" + std::to_string(p) + ")";
    return f;
}

Nonlinearity make_superprocess(FunctionalHandle alpha, FunctionalHandle gamma,
                               std::vector<SuperprocessAtom> atoms, bool path_independent) {
    for (const auto& a : atoms)
        if (!(a.position > 0.0))
            throw std::invalid_argument("make_superprocess: atom positions must be positive");
    Nonlinearity f;
    f.eval = [alpha = std::move(alpha), gamma = std::move(gamma),
              atoms = std::move(atoms)](double t, const PathView& x, double z) {
        require_nonnegative(z, "superprocess nonlinearity");
        double v = alpha.eval(t, x) * z + gamma.eval(t, x) * z * z;
        for (const auto& a : atoms) {
            const double uz = a.position * z;
            // e^{-uz} - 1 + uz, stable for small uz
            v += a.weight.eval(t, x) * (std::expm1(-uz) + uz);
        }
        return v;
    };
    f.domain = DomainInterval::half_line();
    f.tag = Nonlinearity::Tag::superprocess;
    f.path_independent = path_independent;
    f.label = "superprocess";
    return f;
}

Nonlinearity make_control_dual(FunctionalHandle alpha, FunctionalHandle eta, double p,
                               bool path_independent) {
    if (!(p > 1.0)) throw std::invalid_argument("make_control_dual: p must exceed 1");
    const double q = p / (p - 1.0);
    Nonlinearity f;
    f.eval = [alpha = std::move(alpha), eta = std::move(eta), q](double t, const PathView& x,
                                                                  double z) {
        require_nonnegative(z, "control-dual nonlinearity");
        const double e = eta.eval(t, x);
        if (!(e > 0.0))
            throw std::domain_error("control-dual nonlinearity: eta(t,x) = " + std::to_string(e) +
                                    " must be positive");
        return -alpha.eval(t, x) + std::pow(z, q) / ((q - 1.0) * std::pow(e, q - 1.0));
    };
    f.domain = DomainInterval::half_line();
    f.tag = Nonlinearity::Tag::control_dual;
    f.path_independent = path_independent;
    f.label = "control-dual(p=" + std::to_string(p) + ")";
    return f;
}

const char* to_string(ConditionStatus s) {
    switch (s) {
        case ConditionStatus::pass: return "PASS";
        case ConditionStatus::inconclusive: return "INCONCLUSIVE";
        case ConditionStatus::fail: return "FAIL";
    }
    return "?";
}

bool ValidationReport::all_pass() const {
    return local_regularity.status == ConditionStatus::pass &&
           linear_growth.status == ConditionStatus::pass &&
           boundary_limits.status == ConditionStatus::pass;
}

namespace {

struct SamplePoint {
    double t;
    DiscretePath x;
};

std::vector<SamplePoint> draw_tx_samples(const ValidateConfig& cfg) {
    std::vector<SamplePoint> out;
    RngStream root(cfg.seed);
    for (int n = 0; n < cfg.tx_samples; ++n) {
        RngStream rng = root.child(static_cast<std::uint64_t>(n));
        DiscretePath x(cfg.grid, cfg.dim);
        for (int i = 0; i < cfg.dim; ++i) x.at(0, i) = rng.normal();
        for (std::size_t k = 1; k < cfg.grid.node_count(); ++k) {
            const double sdt = std::sqrt(cfg.grid.node(k) - cfg.grid.node(k - 1));
            for (int i = 0; i < cfg.dim; ++i) x.at(k, i) = x.at(k - 1, i) + sdt * rng.normal();
        }
        // probe strictly before the horizon, where the reaction is defined
        const std::size_t k = std::min(cfg.grid.floor_index(rng.uniform() * cfg.grid.horizon()),
                                       cfg.grid.steps() - 1);
        out.push_back({cfg.grid.node(k), std::move(x)});
    }
    return out;
}

std::vector<double> probe_centers(const DomainInterval& D, const ValidateConfig& cfg) {
    const double lo = D.bounded_below() ? D.lower : -cfg.z_scale;
    const double hi = D.bounded_above() ? D.upper : cfg.z_scale;
    std::vector<double> zs;
    for (int j = 0; j < cfg.z_probes; ++j)
        zs.push_back(lo + (hi - lo) * (static_cast<double>(j) + 0.5) / cfg.z_probes);
    if (D.bounded_below()) zs.push_back(D.lower);
    if (D.bounded_above()) zs.push_back(D.upper);
    return zs;
}

double clip_to_interior(double z, const DomainInterval& D) {
    const double eps = 1e-12;
    if (D.bounded_below() && z < D.lower + (D.closed_lower ? 0.0 : eps))
        z = D.lower + (D.closed_lower ? 0.0 : eps);
    if (D.bounded_above() && z > D.upper - (D.closed_upper ? 0.0 : eps))
        z = D.upper - (D.closed_upper ? 0.0 : eps);
    return z;
}

}  // namespace

ValidationReport validate_conditions(const Nonlinearity& f, const ValidateConfig& cfg) {
    check_domain_interval(f.domain);
    ValidationReport rep;
    const auto samples = draw_tx_samples(cfg);
    RngStream rng(cfg.seed ^ 0x7f4a7c159e3779b9ULL);

    // (i) local boundedness and local Lipschitz constants on z-windows
    {
        ConditionEvidence& ev = rep.local_regularity;
        bool finite = true;
        double worst_growth_ratio = 0.0;
        for (double zc : probe_centers(f.domain, cfg)) {
            const double base_delta = 0.1 * std::max(1.0, std::abs(zc));
            double prev_lambda = -1.0;
            double ratio_here = 0.0;
            for (double shrink : {1.0, 0.25, 0.0625}) {
                const double delta = base_delta * shrink;
                double lambda = 0.0;
                for (int p = 0; p < cfg.pairs_per_probe; ++p) {
                    const auto& sp = samples[static_cast<std::size_t>(p) % samples.size()];
                    const double z1 = clip_to_interior(zc + delta * (2.0 * rng.uniform() - 1.0),
                                                       f.domain);
                    const double z2 = clip_to_interior(zc + delta * (2.0 * rng.uniform() - 1.0),
                                                       f.domain);
                    if (z1 == z2) continue;
                    const double f1 = f.eval(sp.t, sp.x.view(), z1);
                    const double f2 = f.eval(sp.t, sp.x.view(), z2);
                    if (!std::isfinite(f1) || !std::isfinite(f2)) {
                        finite = false;
                        continue;
                    }
                    ev.bound_kappa = std::max({ev.bound_kappa, std::abs(f1), std::abs(f2)});
                    lambda = std::max(lambda, std::abs(f1 - f2) / std::abs(z1 - z2));
                }
                if (prev_lambda > 0.0 && lambda > 0.0)
                    ratio_here = std::max(ratio_here, lambda / prev_lambda);
                prev_lambda = lambda;
                ev.lipschitz_lambda = std::max(ev.lipschitz_lambda, lambda);
            }
            worst_growth_ratio = std::max(worst_growth_ratio, ratio_here);
        }
        if (!finite) {
            ev.status = ConditionStatus::fail;
            ev.note = "non-finite values encountered";
        } else if (worst_growth_ratio > 4.0) {
            ev.status = ConditionStatus::inconclusive;
            ev.note = "difference quotients keep growing as the window shrinks";
        } else {
            ev.status = ConditionStatus::pass;
        }
    }

    // (ii) one-sided linear growth where the domain is unbounded:
    // fit an affine envelope on |z| <= z_scale/2, test it on the outer half.
    {
        ConditionEvidence& ev = rep.linear_growth;
        if (!f.domain.bounded_below() || !f.domain.bounded_above()) {
            // relevant one-sided excess: f <= a + b|z| when unbounded below,
            // f >= -a - b|z| when unbounded above
            auto excess = [&](double t, const PathView& x, double z) {
                double m = 0.0;
                const double v = f.eval(t, x, z);
                if (!f.domain.bounded_above()) m = std::max(m, -v);
                if (!f.domain.bounded_below()) m = std::max(m, v);
                return m;
            };
            const double zmax = cfg.z_scale;
            double a_fit = 0.0, b_fit = 0.0;
            bool finite = true;
            auto z_range = [&](double frac_lo, double frac_hi, auto&& visit) {
                for (int j = 0; j < cfg.z_probes; ++j) {
                    const double frac = frac_lo + (frac_hi - frac_lo) *
                                                      (static_cast<double>(j) + 0.5) / cfg.z_probes;
                    double z = frac * zmax;
                    if (f.domain.bounded_below()) z = std::max(z, f.domain.lower);
                    if (f.domain.bounded_above()) z = std::min(z, f.domain.upper);
                    z = clip_to_interior(z, f.domain);
                    for (const auto& sp : samples) visit(sp.t, sp.x.view(), z);
                }
            };
            const double lo_frac = f.domain.bounded_below() ? 0.0 : -1.0;
            z_range(lo_frac * 0.5, 0.5, [&](double t, const PathView& x, double z) {
                const double m = excess(t, x, z);
                if (!std::isfinite(m)) {
                    finite = false;
                    return;
                }
                if (std::abs(z) <= 1.0)
                    a_fit = std::max(a_fit, m);
                else
                    b_fit = std::max(b_fit, (m - a_fit) / std::abs(z));
            });
            bool held = true;
            double worst_excess = 0.0;
            z_range(lo_frac, 1.0, [&](double t, const PathView& x, double z) {
                if (std::abs(z) < 0.5 * zmax) return;
                const double m = excess(t, x, z);
                if (!std::isfinite(m)) {
                    finite = false;
                    return;
                }
                const double envelope = 1.1 * (a_fit + b_fit * std::abs(z)) + 1e-9;
                if (m > envelope) {
                    held = false;
                    worst_excess = std::max(worst_excess, m - envelope);
                }
            });
            ev.growth_alpha = a_fit;
            ev.growth_beta = b_fit;
            if (!finite) {
                ev.status = ConditionStatus::fail;
                ev.note = "non-finite values encountered";
            } else if (!held) {
                ev.status = ConditionStatus::inconclusive;
                ev.note = "excess above the fitted affine envelope grows on the outer window";
            } else {
                ev.status = ConditionStatus::pass;
            }
        } else {
            ev.status = ConditionStatus::pass;
            ev.note = "domain bounded; not applicable";
        }
    }

    // (iii) boundary sign limits at finite ends, z = boundary +/- 2^{-k}
    {
        ConditionEvidence& ev = rep.boundary_limits;
        ev.status = ConditionStatus::pass;
        ev.note = "";
        auto limit_at = [&](double boundary, double direction) {
            double worst = direction > 0 ? -std::numeric_limits<double>::infinity()
                                         : std::numeric_limits<double>::infinity();
            for (const auto& sp : samples) {
                double v20 = 0.0, v19 = 0.0;
                for (int k = 1; k <= 20; ++k) {
                    const double z = clip_to_interior(boundary + direction * std::pow(2.0, -k),
                                                      f.domain);
                    const double v = f.eval(sp.t, sp.x.view(), z);
                    if (k == 19) v19 = v;
                    if (k == 20) v20 = v;
                }
                // linear extrapolation in the offset: limit ~ 2 v20 - v19
                const double lim = 2.0 * v20 - v19;
                worst = direction > 0 ? std::max(worst, lim) : std::min(worst, lim);
            }
            return worst;
        };
        if (f.domain.bounded_below()) {
            ev.lower_boundary_limit = limit_at(f.domain.lower, +1.0);
            if (!(ev.lower_boundary_limit <= cfg.boundary_tol)) {
                ev.status = ConditionStatus::fail;
                ev.note = "limit at the lower boundary is positive";
            }
        }
        if (f.domain.bounded_above()) {
            ev.upper_boundary_limit = limit_at(f.domain.upper, -1.0);
            if (!(ev.upper_boundary_limit >= -cfg.boundary_tol)) {
                ev.status = ConditionStatus::fail;
                ev.note += std::string(ev.note.empty() ? "" : "; ") +
                           "limit at the upper boundary is negative";
            }
        }
        if (!f.domain.bounded_below() && !f.domain.bounded_above())
            ev.note = "domain unbounded; not applicable";
    }

    return rep;
}

}  // namespace ppde
