#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <cstddef>
#include <vector>

namespace hol {

struct QuadratureRule {
    std::vector<double> nodes;    // in [a, b]
    std::vector<double> weights;  // sum to b - a
};

// N-point Gauss-Legendre rule mapped onto [a, b], nodes in increasing order.
template <std::size_t N = 64>
QuadratureRule gauss_legendre(double a, double b) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    QuadratureRule r;
    r.nodes.reserve(N);
    r.weights.reserve(N);
    // Boost stores the non-negative half; odd N has a node at 0.
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] == 0.0) continue;
        r.nodes.push_back(mid - half * x[i]);
        r.weights.push_back(half * w[i]);
    }
    if (N % 2 == 1) {
        r.nodes.push_back(mid);
        r.weights.push_back(half * w[0]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;
        r.nodes.push_back(mid + half * x[i]);
        r.weights.push_back(half * w[i]);
    }
    return r;
}

template <std::size_t N = 64, class F>
double integrate_gl(F&& f, double a, double b) {
    const auto rule = gauss_legendre<N>(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(rule.nodes[i]);
    return s;
}

}  // namespace hol
