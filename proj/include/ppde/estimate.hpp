#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace ppde {

/// Monte Carlo value with its standard error; the return type of every
/// stochastic evaluation in the library.
struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};

/// Pairwise summation in a fixed order, independent of thread count.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Sample mean and standard error (sample standard deviation / sqrt(n)).
/// Bitwise-identical samples report their common value with zero error, so
/// deterministic payoffs stay exact.
inline EstimateWithError estimate_from_samples(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("estimate_from_samples: no samples");
    EstimateWithError e;
    e.n_samples = v.size();
    bool all_equal = true;
    for (double x : v)
        if (x != v.front()) {
            all_equal = false;
            break;
        }
    if (all_equal) {
        e.value = v.front();
        if (!std::isfinite(e.value))
            throw std::runtime_error("estimate_from_samples: non-finite estimate");
        return e;
    }
    e.value = pairwise_sum(v) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) {
            const double d = x - e.value;
            ss += d * d;
        }
        e.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    if (!std::isfinite(e.value) || !std::isfinite(e.std_error))
        throw std::runtime_error("estimate_from_samples: non-finite estimate");
    return e;
}

}  // namespace ppde
