#include "ppde/path.hpp"

#include <cmath>

namespace ppde {

namespace {

void check_time(double t, double horizon, const char* what) {
    if (!(t >= 0.0 && t <= horizon))
        throw std::domain_error(std::string(what) + ": time outside [0, horizon]");
}

}  // namespace

DiscretePath materialize(const PathView& v) {
    DiscretePath out(*v.grid, v.dim);
    for (std::size_t k = 0; k < v.node_count(); ++k)
        for (int i = 0; i < v.dim; ++i) out.at(k, i) = v.coord(k, i);
    return out;
}

PathView stopped_view(const PathView& x, double t) {
    check_time(t, x.horizon(), "stop");
    PathView v = x;
    v.stop_time = std::min(v.stop_time, t);
    return v;
}

PathView bumped_view(const PathView& x, double t, const double* h) {
    check_time(t, x.horizon(), "vertical_bump");
    PathView v = x;
    const std::size_t k = x.grid->floor_index(t);
    // snap to the first grid node >= t
    v.bump_node = (x.grid->node(k) >= t) ? k : k + 1;
    v.bump_time = x.grid->node(std::min(v.bump_node, x.grid->steps()));
    v.bump = h;
    return v;
}

DiscretePath stop(const PathView& x, double t) {
    return materialize(stopped_view(x, t));
}

DiscretePath stop(const DiscretePath& x, double t) {
    return stop(x.view(), t);
}

double sup_norm(const PathView& x) {
    double m = 0.0;
    for (std::size_t k = 0; k < x.node_count(); ++k) {
        double s = 0.0;
        for (int i = 0; i < x.dim; ++i) {
            const double v = x.coord(k, i);
            s += v * v;
        }
        if (s > m) m = s;
    }
    return std::sqrt(m);
}

double sup_norm_diff(const PathView& x, const PathView& y) {
    if (x.dim != y.dim || !x.grid->same_as(*y.grid))
        throw std::invalid_argument("sup_norm_diff: paths must share a grid");
    double m = 0.0;
    for (std::size_t k = 0; k < x.node_count(); ++k) {
        double s = 0.0;
        for (int i = 0; i < x.dim; ++i) {
            const double v = x.coord(k, i) - y.coord(k, i);
            s += v * v;
        }
        if (s > m) m = s;
    }
    return std::sqrt(m);
}

double d_infinity(double r, const PathView& x, double s, const PathView& y) {
    check_time(r, x.horizon(), "d_infinity");
    check_time(s, y.horizon(), "d_infinity");
    return std::abs(r - s) + sup_norm_diff(stopped_view(x, r), stopped_view(y, s));
}

DiscretePath vertical_bump(const DiscretePath& x, double t, std::span<const double> h) {
    if (static_cast<int>(h.size()) != x.dim())
        throw std::invalid_argument("vertical_bump: shift dimension mismatch");
    return materialize(bumped_view(x.view(), t, h.data()));
}

DiscretePath resample(const DiscretePath& x, const TimeGrid& grid) {
    if (grid.horizon() != x.grid().horizon())
        throw std::invalid_argument("resample: grids must share the horizon");
    if (grid.same_as(x.grid())) return x;
    DiscretePath out(grid, x.dim());
    for (std::size_t k = 0; k < grid.node_count(); ++k)
        x.value_at(grid.node(k), &out.at(k, 0));
    return out;
}

}  // namespace ppde
