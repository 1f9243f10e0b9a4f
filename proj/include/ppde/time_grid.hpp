#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ppde {

/// Strictly increasing time nodes t_0 = 0 < t_1 < ... < t_M = horizon.
/// Paths, simulations and quadratures all live on one of these grids.
class TimeGrid {
public:
    TimeGrid() = default;

    static TimeGrid uniform(double horizon, std::size_t steps) {
        if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
        if (steps == 0) throw std::invalid_argument("TimeGrid: need at least one step");
        TimeGrid g;
        g.nodes_.resize(steps + 1);
        const double dt = horizon / static_cast<double>(steps);
        for (std::size_t k = 0; k <= steps; ++k)
            g.nodes_[k] = static_cast<double>(k) * dt;
        g.nodes_.front() = 0.0;
        g.nodes_.back() = horizon;
        g.uniform_ = true;
        g.dt_ = dt;
        return g;
    }

    static TimeGrid from_nodes(std::vector<double> nodes) {
        if (nodes.size() < 2) throw std::invalid_argument("TimeGrid: need at least two nodes");
        if (nodes.front() != 0.0) throw std::invalid_argument("TimeGrid: first node must be 0");
        for (std::size_t k = 0; k + 1 < nodes.size(); ++k)
            if (!(nodes[k] < nodes[k + 1]))
                throw std::invalid_argument("TimeGrid: nodes must be strictly increasing");
        TimeGrid g;
        g.nodes_ = std::move(nodes);
        g.dt_ = g.nodes_[1] - g.nodes_[0];
        g.uniform_ = true;
        for (std::size_t k = 0; k + 1 < g.nodes_.size(); ++k)
            if (std::abs(g.nodes_[k + 1] - g.nodes_[k] - g.dt_) > 1e-12 * g.horizon()) {
                g.uniform_ = false;
                break;
            }
        return g;
    }

    double horizon() const { return nodes_.back(); }
    std::size_t steps() const { return nodes_.size() - 1; }
    std::size_t node_count() const { return nodes_.size(); }
    double node(std::size_t k) const { return nodes_[k]; }
    const std::vector<double>& nodes() const { return nodes_; }
    bool is_uniform() const { return uniform_; }

    /// Spacing of the first interval; equals every spacing on uniform grids.
    double dt() const { return dt_; }

    /// Largest index k with node(k) <= t. Requires t in [0, horizon].
    std::size_t floor_index(double t) const {
        if (t <= 0.0) return 0;
        if (t >= horizon()) return steps();
        if (uniform_) {
            auto k = static_cast<std::size_t>(t / dt_);
            if (k > steps()) k = steps();
            while (k + 1 <= steps() && nodes_[k + 1] <= t) ++k;
            while (k > 0 && nodes_[k] > t) --k;
            return k;
        }
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
        return static_cast<std::size_t>(it - nodes_.begin()) - 1;
    }

    bool same_as(const TimeGrid& o) const { return nodes_ == o.nodes_; }

private:
    std::vector<double> nodes_;
    bool uniform_ = false;
    double dt_ = 0.0;
};

}  // namespace ppde
