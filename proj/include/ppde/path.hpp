#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "ppde/time_grid.hpp"

namespace ppde {

class DiscretePath;

/// Read-only view of a d-dimensional path on a grid, optionally stopped at a
/// time and/or shifted by a constant vector on a terminal segment.
///
/// Node accessors see the materialized convention: nodes after the stopping
/// index hold the stopped value, nodes at or after the bump index are shifted.
/// value_at() interpolates the underlying data up to the stopping time, so a
/// view stopped at an off-grid time still evaluates exactly to x(min(s,t)).
///
/// Views do not own memory; `data` and `bump` must outlive the view.
struct PathView {
    const TimeGrid* grid = nullptr;
    const double* data = nullptr;  // node-major, node_count() x dim
    int dim = 0;
    double stop_time = std::numeric_limits<double>::infinity();
    double bump_time = std::numeric_limits<double>::infinity();
    std::size_t bump_node = std::numeric_limits<std::size_t>::max();
    const double* bump = nullptr;

    std::size_t node_count() const { return grid->node_count(); }
    double horizon() const { return grid->horizon(); }

    /// Coordinate i of the (materialized) node k.
    double coord(std::size_t k, int i) const {
        double v;
        if (grid->node(k) <= stop_time) {
            v = data[k * dim + i];
        } else {
            v = base_at(stop_time, i);
        }
        if (k >= bump_node) v += bump[i];
        return v;
    }

    /// x(min(t, stop_time)) plus the bump if t falls on or after it.
    void value_at(double t, double* out) const {
        const double s = t < stop_time ? t : stop_time;
        for (int i = 0; i < dim; ++i) out[i] = base_at(s, i);
        if (t >= bump_time)
            for (int i = 0; i < dim; ++i) out[i] += bump[i];
    }

    double value_at1(double t) const {
        double v;
        value_at(t, &v);
        return v;
    }

private:
    double base_at(double s, int i) const {
        if (s <= 0.0) return data[i];
        if (s >= grid->horizon()) return data[(grid->node_count() - 1) * dim + i];
        const std::size_t k = grid->floor_index(s);
        const double t0 = grid->node(k);
        if (s == t0 || k + 1 >= grid->node_count()) return data[k * dim + i];
        const double t1 = grid->node(k + 1);
        const double w = (s - t0) / (t1 - t0);
        const double a = data[k * dim + i];
        const double b = data[(k + 1) * dim + i];
        return a + w * (b - a);
    }
};

/// A d-dimensional path sampled on a shared time grid, evaluated off-grid by
/// linear interpolation. Values are immutable in all library operations;
/// mutation is only used while constructing a path.
class DiscretePath {
public:
    DiscretePath() = default;

    DiscretePath(TimeGrid grid, int dim)
        : grid_(std::move(grid)), dim_(dim), values_(grid_.node_count() * static_cast<std::size_t>(dim), 0.0) {
        if (dim <= 0) throw std::invalid_argument("DiscretePath: dimension must be positive");
    }

    DiscretePath(TimeGrid grid, int dim, std::vector<double> values)
        : grid_(std::move(grid)), dim_(dim), values_(std::move(values)) {
        if (dim <= 0) throw std::invalid_argument("DiscretePath: dimension must be positive");
        if (values_.size() != grid_.node_count() * static_cast<std::size_t>(dim))
            throw std::invalid_argument("DiscretePath: value array has wrong size");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("DiscretePath: values must be finite");
    }

    /// Constant path x(s) = x0 for all s.
    static DiscretePath constant(TimeGrid grid, std::span<const double> x0) {
        DiscretePath p(std::move(grid), static_cast<int>(x0.size()));
        for (std::size_t k = 0; k < p.grid_.node_count(); ++k)
            for (std::size_t i = 0; i < x0.size(); ++i) p.values_[k * x0.size() + i] = x0[i];
        return p;
    }

    /// One-dimensional path from explicit node values.
    static DiscretePath from_values1(TimeGrid grid, std::vector<double> values) {
        return DiscretePath(std::move(grid), 1, std::move(values));
    }

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return dim_; }

    double at(std::size_t node, int i) const { return values_[node * dim_ + i]; }
    double& at(std::size_t node, int i) { return values_[node * dim_ + i]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    void value_at(double t, double* out) const { view().value_at(t, out); }
    double value_at1(double t) const { return view().value_at1(t); }

    PathView view() const {
        PathView v;
        v.grid = &grid_;
        v.data = values_.data();
        v.dim = dim_;
        return v;
    }

private:
    TimeGrid grid_;
    int dim_ = 0;
    std::vector<double> values_;
};

/// Sample a view at every grid node into an owning path.
DiscretePath materialize(const PathView& v);

/// View of x frozen at time t: values follow x up to t and stay at x(t) after.
PathView stopped_view(const PathView& x, double t);

/// View of x + h * 1_{[t,T]}. Off-grid t snaps to the first node >= t.
/// `h` must stay alive while the view is used.
PathView bumped_view(const PathView& x, double t, const double* h);

/// The path stopped at t, materialized: y(s) = x(min(s,t)) at every grid node.
DiscretePath stop(const DiscretePath& x, double t);
DiscretePath stop(const PathView& x, double t);

/// max over grid nodes of the Euclidean norm of x(s) (discrete sup norm).
double sup_norm(const PathView& x);
inline double sup_norm(const DiscretePath& x) { return sup_norm(x.view()); }

/// Discrete sup norm of the node-wise difference; grids must match.
double sup_norm_diff(const PathView& x, const PathView& y);

/// |r-s| + sup norm of (x stopped at r) - (y stopped at s).
double d_infinity(double r, const PathView& x, double s, const PathView& y);
inline double d_infinity(double r, const DiscretePath& x, double s, const DiscretePath& y) {
    return d_infinity(r, x.view(), s, y.view());
}

/// x + h * 1_{[t,T]}, materialized. Off-grid t snaps to the first node >= t.
DiscretePath vertical_bump(const DiscretePath& x, double t, std::span<const double> h);

/// Resample a path onto another grid by linear interpolation.
DiscretePath resample(const DiscretePath& x, const TimeGrid& grid);

}  // namespace ppde
