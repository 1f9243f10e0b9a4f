#include "ppde/catalogue.hpp"

namespace ppde {
namespace catalogue {

double prefix_integral(const PathView& x, int i, double t) {
    const TimeGrid& g = *x.grid;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < g.node_count(); ++k) {
        const double t0 = g.node(k);
        if (t0 >= t) break;
        const double t1 = std::min(g.node(k + 1), t);
        acc += x.coord(k, i) * (t1 - t0);
    }
    return acc;
}

AnalyticFunctional coordinate(int i, int dim) {
    AnalyticFunctional a;
    a.dim = dim;
    a.u = {[i](double t, const PathView& x) {
               double out[16];
               x.value_at(t, out);
               return out[i];
           },
           "x_" + std::to_string(i + 1) + "(t)"};
    a.dt = [](double, const PathView&) { return 0.0; };
    a.grad = [i, dim](double, const PathView&) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        g[i] = 1.0;
        return g;
    };
    a.hess = [dim](double, const PathView&) { return Eigen::MatrixXd::Zero(dim, dim); };
    return a;
}

AnalyticFunctional running_integral(int dim) {
    AnalyticFunctional a;
    a.dim = dim;
    a.u = {[](double t, const PathView& x) { return prefix_integral(x, 0, t); },
           "int_0^t x_1 ds"};
    a.dt = [](double t, const PathView& x) {
        double out[16];
        x.value_at(t, out);
        return out[0];
    };
    a.grad = [dim](double, const PathView&) { return Eigen::VectorXd::Zero(dim); };
    a.hess = [dim](double, const PathView&) { return Eigen::MatrixXd::Zero(dim, dim); };
    return a;
}

AnalyticFunctional heat_functional(double horizon) {
    AnalyticFunctional a;
    a.dim = 1;
    a.u = {[horizon](double t, const PathView& x) {
               const double v = x.value_at1(t);
               return v * v + (horizon - t);
           },
           "x(t)^2 + (T-t)"};
    a.dt = [](double, const PathView&) { return -1.0; };
    a.grad = [](double t, const PathView& x) {
        Eigen::VectorXd g(1);
        g[0] = 2.0 * x.value_at1(t);
        return g;
    };
    a.hess = [](double, const PathView&) {
        Eigen::MatrixXd h(1, 1);
        h(0, 0) = 2.0;
        return h;
    };
    return a;
}

AnalyticFunctional squared_norm(int dim) {
    AnalyticFunctional a;
    a.dim = dim;
    a.u = {[dim](double t, const PathView& x) {
               double out[16];
               x.value_at(t, out);
               double s = 0.0;
               for (int i = 0; i < dim; ++i) s += out[i] * out[i];
               return s;
           },
           "|x(t)|^2"};
    a.dt = [](double, const PathView&) { return 0.0; };
    a.grad = [dim](double t, const PathView& x) {
        double out[16];
        x.value_at(t, out);
        Eigen::VectorXd g(dim);
        for (int i = 0; i < dim; ++i) g[i] = 2.0 * out[i];
        return g;
    };
    a.hess = [dim](double, const PathView&) {
        return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(dim, dim));
    };
    return a;
}

AnalyticFunctional coordinate_product() {
    AnalyticFunctional a;
    a.dim = 2;
    a.u = {[](double t, const PathView& x) {
               double out[2];
               x.value_at(t, out);
               return out[0] * out[1];
           },
           "x_1(t) x_2(t)"};
    a.dt = [](double, const PathView&) { return 0.0; };
    a.grad = [](double t, const PathView& x) {
        double out[2];
        x.value_at(t, out);
        Eigen::VectorXd g(2);
        g[0] = out[1];
        g[1] = out[0];
        return g;
    };
    a.hess = [](double, const PathView&) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
        h(0, 1) = 1.0;
        h(1, 0) = 1.0;
        return h;
    };
    return a;
}

AnalyticFunctional riccati(double c, double horizon) {
    AnalyticFunctional a;
    a.dim = 1;
    a.u = {[c, horizon](double t, const PathView&) { return c / (1.0 + c * (horizon - t)); },
           "c/(1+c(T-t))"};
    a.dt = [c, horizon](double t, const PathView&) {
        const double u = c / (1.0 + c * (horizon - t));
        return u * u;
    };
    a.grad = [](double, const PathView&) { return Eigen::VectorXd::Zero(1); };
    a.hess = [](double, const PathView&) { return Eigen::MatrixXd::Zero(1, 1); };
    return a;
}

std::vector<AnalyticFunctional> standard_battery(double horizon) {
    std::vector<AnalyticFunctional> v;
    v.push_back(coordinate(0, 1));
    v.push_back(running_integral(1));
    v.push_back(heat_functional(horizon));
    v.push_back(squared_norm(2));
    v.push_back(coordinate_product());
    return v;
}

}  // namespace catalogue
}  // namespace ppde
