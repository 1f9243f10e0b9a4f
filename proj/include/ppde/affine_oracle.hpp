#pragma once

#include "ppde/diffusion.hpp"

namespace ppde {

/// Closed-form Feynman-Kac value of the affine problem f = alpha + beta z:
/// E[ e^{-int_r^T beta ds} g(X^T) ] - E[ int_r^T e^{-int_r^t beta ds} alpha dt ],
/// estimated over one simulated ensemble with left-endpoint discounting on
/// the simulation grid. The primary cross-check oracle for the solver.
EstimateWithError fk_solve(double r, const DiscretePath& x, const FunctionalHandle& alpha,
                           const FunctionalHandle& beta, const TerminalFunctional& g,
                           const DiffusionSpec& spec, const SimConfig& cfg);

/// Same estimate on an existing ensemble (paired-seed comparisons).
EstimateWithError fk_solve_on(const Ensemble& ens, double r, const FunctionalHandle& alpha,
                              const FunctionalHandle& beta, const TerminalFunctional& g,
                              unsigned workers = 1);

}  // namespace ppde
