#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "lhy/errors.hpp"

namespace lhy::quad {

struct Rule {
    std::vector<double> x; // nodes on [-1,1]
    std::vector<double> w;
};

// Full Gauss-Legendre rule on [-1,1]; boost stores only the nonnegative half.
template <unsigned N>
const Rule& gauss_rule()
{
    static const Rule rule = [] {
        using G = boost::math::quadrature::gauss<double, N>;
        const auto& xs = G::abscissa();
        const auto& ws = G::weights();
        Rule r;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] == 0.0) {
                r.x.push_back(0.0);
                r.w.push_back(ws[i]);
                continue;
            }
            r.x.push_back(-xs[i]);
            r.w.push_back(ws[i]);
            r.x.push_back(xs[i]);
            r.w.push_back(ws[i]);
        }
        return r;
    }();
    return rule;
}

template <unsigned N, class F>
double gauss(F&& f, double a, double b)
{
    const Rule& r = gauss_rule<N>();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i)
        s += r.w[i] * f(c + h * r.x[i]);
    return s * h;
}

// Fixed-order Gauss-Legendre on n equal panels.
template <unsigned N, class F>
double composite(F&& f, double a, double b, int panels)
{
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p)
        s += gauss<N>(f, a + p * h, a + (p + 1) * h);
    return s;
}

struct Result {
    double value = 0.0;
    double error = 0.0;
};

// Adaptive Gauss-Kronrod on [a,b] with breakpoints; each piece is refined
// independently so kinks never sit inside a panel.
template <class F>
Result adaptive(F&& f, const std::vector<double>& pts, double tol, unsigned max_depth = 30)
{
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    Result r;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!(pts[i + 1] > pts[i]))
            continue;
        double err = 0.0;
        const double v = GK::integrate(f, pts[i], pts[i + 1], max_depth, tol, &err);
        if (!std::isfinite(v))
            throw quadrature_failure("non-finite value in adaptive quadrature");
        r.value += v;
        r.error += err;
    }
    return r;
}

template <class F>
Result adaptive(F&& f, double a, double b, double tol, unsigned max_depth = 30)
{
    return adaptive(f, std::vector<double>{a, b}, tol, max_depth);
}

} // namespace lhy::quad
