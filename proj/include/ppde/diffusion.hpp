#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppde/derivative.hpp"
#include "ppde/diffusion_spec.hpp"
#include "ppde/estimate.hpp"
#include "ppde/functional.hpp"
#include "ppde/rng.hpp"

namespace ppde {

/// Monte Carlo run parameters. `workers` is a runtime knob only: results are
/// bitwise identical for any worker count at a fixed seed.
struct SimConfig {
    std::size_t n_paths = 1000;
    TimeGrid grid;
    std::uint64_t seed = 0;
    bool antithetic = false;
    unsigned workers = 1;
};

/// Ensemble of simulated paths stored contiguously on one grid.
class Ensemble {
public:
    Ensemble(TimeGrid grid, int dim, std::size_t n_paths)
        : grid_(std::move(grid)),
          dim_(dim),
          n_paths_(n_paths),
          data_(grid_.node_count() * static_cast<std::size_t>(dim) * n_paths) {}

    std::size_t size() const { return n_paths_; }
    int dim() const { return dim_; }
    const TimeGrid& grid() const { return grid_; }

    PathView view(std::size_t i) const {
        PathView v;
        v.grid = &grid_;
        v.data = data_.data() + i * stride();
        v.dim = dim_;
        return v;
    }

    double* path_data(std::size_t i) { return data_.data() + i * stride(); }
    const double* path_data(std::size_t i) const { return data_.data() + i * stride(); }
    std::size_t stride() const { return grid_.node_count() * static_cast<std::size_t>(dim_); }

    DiscretePath to_path(std::size_t i) const {
        return DiscretePath(grid_, dim_,
                            std::vector<double>(path_data(i), path_data(i) + stride()));
    }

private:
    TimeGrid grid_;
    int dim_;
    std::size_t n_paths_;
    std::vector<double> data_;
};

/// Simulate the diffusion ensemble started from (r, x): history frozen to
/// x stopped at r, Euler-Maruyama with coefficients evaluated on the running
/// stopped path afterwards. Paths are resampled onto cfg.grid if needed.
/// Per-path random streams are keyed by (seed, path index).
Ensemble simulate_from(double r, const DiscretePath& x, const DiffusionSpec& spec,
                       const SimConfig& cfg);

/// Single path into a caller buffer of grid.node_count()*dim doubles; exposed
/// for the nested solver. `history` is read on [0, r]; `rng` drives the steps.
void simulate_single(double r, const PathView& history, const DiffusionSpec& spec,
                     const TimeGrid& grid, RngStream rng, double normal_sign, double* out);

/// Sample mean with standard error of u(t, path) over the ensemble.
EstimateWithError expectation(const FunctionalHandle& u, double t, const Ensemble& ens,
                              unsigned workers = 1);

/// Sample mean with standard error of a terminal payoff over the ensemble.
EstimateWithError expectation_terminal(const TerminalFunctional& g, const Ensemble& ens,
                                       unsigned workers = 1);

struct CheckpointDrift {
    double time = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    double threshold = 0.0;  // 3 * std_error + bias allowance
    bool flagged = false;
};

struct MartingaleReport {
    std::vector<CheckpointDrift> checkpoints;
    double bias_allowance = 0.0;
    std::size_t n_paths = 0;
    bool any_flagged = false;
};

struct MartingaleCheckConfig {
    std::vector<double> checkpoint_times;  // empty: five evenly spaced in (r, T]
    double bias_allowance = -1.0;          // negative: 5 * grid step
};

/// Drift of the compensated process phi(t, X^t) - int_r^t (d_s + L)phi ds at
/// checkpoint times; a checkpoint is flagged when |mean| > 3 SE + allowance.
MartingaleReport martingale_check(const FunctionalHandle& phi, const DiffusionSpec& spec,
                                  double r, const DiscretePath& x, const SimConfig& cfg,
                                  const DerivativeConfig& dcfg,
                                  const MartingaleCheckConfig& mcfg = {});

/// Mean of the stochastic exponential
/// exp(int beta dX - int beta.b ds - 1/2 int beta^T a beta ds) at t_end,
/// with left-point Ito sums. A mean of 1 certifies the martingale
/// normalization of the exponential weight.
EstimateWithError stochastic_exponential(const VectorFunctional& beta, double r,
                                         const DiscretePath& x, const DiffusionSpec& spec,
                                         const SimConfig& cfg, double t_end = -1.0);

/// Per-path stochastic exponential values at the horizon, for reuse as
/// weights; same convention as stochastic_exponential.
std::vector<double> stochastic_exponential_weights(const VectorFunctional& beta, double r,
                                                   const Ensemble& ens,
                                                   const DiffusionSpec& spec,
                                                   unsigned workers = 1);

/// First grid time t >= r at which the stopped distance from x^r reaches
/// gamma, capped at the horizon.
double hitting_time(double gamma, double r, const DiscretePath& x, const PathView& path);
inline double hitting_time(double gamma, double r, const DiscretePath& x,
                           const DiscretePath& path) {
    return hitting_time(gamma, r, x, path.view());
}

}  // namespace ppde
