#pragma once

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "lhy/errors.hpp"
#include "lhy/quadrature.hpp"
#include "lhy/radial.hpp"

namespace lhy {

// Nonnegative, spherically symmetric, compactly supported interaction in
// units hbar = 2m = 1.  Either a square well or a piecewise-linear profile.
class RadialPotential {
public:
    enum class Kind { square_well, tabulated };

    static RadialPotential square_well(double v0, double R)
    {
        if (!std::isfinite(v0) || !std::isfinite(R))
            throw invalid_potential("square well: v0 and R must be finite (hard cores are not supported)");
        if (!(R > 0.0))
            throw invalid_potential("square well: range R must be positive");
        if (!(v0 > 0.0))
            throw invalid_potential("square well: v0 must be positive");
        RadialPotential p;
        p.kind_ = Kind::square_well;
        p.r_ = {0.0, R};
        p.v_ = {v0, v0};
        return p;
    }

    // v is linear between nodes, r.front() == 0, and v vanishes beyond r.back()
    static RadialPotential tabulated(std::vector<double> r, std::vector<double> v)
    {
        if (r.size() < 2 || r.size() != v.size())
            throw invalid_potential("tabulated potential: r and v need equal length >= 2");
        if (r.front() != 0.0)
            throw invalid_potential("tabulated potential: first node must be r = 0");
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (!std::isfinite(r[i]) || !std::isfinite(v[i]))
                throw invalid_potential("tabulated potential: non-finite entry (hard cores are not supported)");
            if (v[i] < 0.0)
                throw invalid_potential("tabulated potential: v must be nonnegative");
            if (i > 0 && !(r[i] > r[i - 1]))
                throw invalid_potential("tabulated potential: r must increase strictly");
        }
        RadialPotential p;
        p.kind_ = Kind::tabulated;
        p.r_ = std::move(r);
        p.v_ = std::move(v);
        if (!(p.integral() > 0.0))
            throw invalid_potential("tabulated potential: integral of v must be positive");
        return p;
    }

    Kind kind() const { return kind_; }
    double range() const { return r_.back(); }
    double v0() const { return v_.front(); }
    const std::vector<double>& nodes() const { return r_; }
    const std::vector<double>& values() const { return v_; }

    double operator()(double r) const
    {
        if (r < 0.0)
            r = -r;
        if (r > r_.back())
            return 0.0;
        if (kind_ == Kind::square_well)
            return v_.front();
        auto it = std::upper_bound(r_.begin(), r_.end(), r);
        if (it == r_.end())
            return v_.back();
        const std::size_t i = static_cast<std::size_t>(it - r_.begin());
        const double t = (r - r_[i - 1]) / (r_[i] - r_[i - 1]);
        return v_[i - 1] + t * (v_[i] - v_[i - 1]);
    }

    // int v over R^3
    double integral() const
    {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < r_.size(); ++i)
            s += quad::gauss<4>([this](double r) { return r * r * (*this)(r); }, r_[i], r_[i + 1]);
        return 4.0 * std::numbers::pi * s;
    }

    // Born approximation of the scattering length, int v / (8 pi)
    double born_length() const { return integral() / (8.0 * std::numbers::pi); }

    // v_lambda(r) = v(r / lambda) / lambda^2, whose scattering length is lambda a
    RadialPotential scaled(double lambda) const
    {
        if (!(lambda > 0.0))
            throw domain_error("scaling factor must be positive");
        RadialPotential p = *this;
        for (auto& x : p.r_)
            x *= lambda;
        for (auto& x : p.v_)
            x /= lambda * lambda;
        return p;
    }

private:
    Kind kind_ = Kind::square_well;
    std::vector<double> r_;
    std::vector<double> v_;
};

// Zero-energy scattering solution.  u is normalised so that u(r) = r - a for
// r >= R; then omega = 1 - u/r and g = v (1 - omega) = v u / r.
class ScatteringSolution {
public:
    double a = 0.0;
    double R = 0.0;
    std::vector<double> grid;
    std::vector<double> u;
    std::vector<double> du;
    std::vector<double> omega;
    std::vector<double> g;
    RadialPotential potential;

    double u_at(double r) const
    {
        if (r >= R)
            return r - a;
        return hermite(r).first;
    }

    double omega_at(double r) const
    {
        if (r < 0.0)
            r = -r;
        if (r >= R)
            return a / r;
        if (r == 0.0)
            return 1.0 - du.front();
        return 1.0 - hermite(r).first / r;
    }

    double g_at(double r) const
    {
        if (r < 0.0)
            r = -r;
        if (r > R)
            return 0.0;
        if (r == 0.0)
            return potential(0.0) * du.front();
        return potential(r) * u_at(r) / r;
    }

    // breakpoints of the potential, i.e. where g may have kinks or jumps
    std::vector<double> breaks() const { return potential.nodes(); }

    // ghat, from r g = v u
    RadialTransform g_transform(int cells = 2048) const
    {
        return RadialTransform::from_rf([this](double r) { return potential(r) * u_at(r); }, breaks(),
                                        cells);
    }

    // transform of g omega
    RadialTransform g_omega_transform(int cells = 2048) const
    {
        return RadialTransform::from_rf(
            [this](double r) { return potential(r) * u_at(r) * omega_at(r); }, breaks(), cells);
    }

    // omega-hat(k): the transform over the ball plus the exact a/r tail,
    // int_R^inf a sin(kr) dr = a cos(kR)/k in the Abel sense.
    double omega_hat(double k, const RadialTransform& inside) const
    {
        return inside(k) + 4.0 * std::numbers::pi * a * std::cos(k * R) / (k * k);
    }

    RadialTransform omega_inside_transform(int cells = 2048) const
    {
        return RadialTransform::from_rf([this](double r) { return r * omega_at(r); }, breaks(), cells);
    }

private:
    std::pair<double, double> hermite(double r) const
    {
        auto it = std::upper_bound(grid.begin(), grid.end(), r);
        std::size_t i = static_cast<std::size_t>(it - grid.begin());
        if (i == 0)
            i = 1;
        if (i >= grid.size())
            i = grid.size() - 1;
        const double x0 = grid[i - 1], x1 = grid[i];
        const double h = x1 - x0;
        const double t = (r - x0) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        const double val = h00 * u[i - 1] + h10 * h * du[i - 1] + h01 * u[i] + h11 * h * du[i];
        const double d00 = (6 * t2 - 6 * t) / h, d10 = 3 * t2 - 4 * t + 1;
        const double d01 = (-6 * t2 + 6 * t) / h, d11 = 3 * t2 - 2 * t;
        const double der = d00 * u[i - 1] + d10 * du[i - 1] + d01 * u[i] + d11 * du[i];
        return {val, der};
    }
};

struct ScatteringOptions {
    double tol = 1e-12;
    int cells = 4096;
};

// Shoots u'' = (v/2) u from u(0) = 0, u'(0) = 1 with adaptive Dormand-Prince
// steps, restarting at every node of the potential.
inline ScatteringSolution solve_scattering(const RadialPotential& pot, const ScatteringOptions& opt = {})
{
    if (!(opt.tol > 0.0))
        throw domain_error("scattering tolerance must be positive");
    using State = std::array<double, 2>;
    namespace odeint = boost::numeric::odeint;

    const auto& nodes = pot.nodes();
    const double R = pot.range();
    ScatteringSolution sol;
    sol.R = R;
    sol.potential = pot;

    std::vector<double> grid{0.0};
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double len = nodes[i + 1] - nodes[i];
        const int n = std::max(8, static_cast<int>(std::ceil(opt.cells * len / R)));
        for (int c = 1; c <= n; ++c)
            grid.push_back(c == n ? nodes[i + 1] : nodes[i] + len * c / n);
    }

    std::vector<double> u{0.0}, du{1.0};
    State x{0.0, 1.0};
    const double abs_tol = opt.tol * 1e-3;
    try {
        std::size_t g = 0;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            const double lo = nodes[i], hi = nodes[i + 1];
            // the slope of v inside one node interval is constant
            const double v_lo = pot.values()[i];
            const double v_hi = (pot.kind() == RadialPotential::Kind::square_well) ? v_lo : pot.values()[i + 1];
            auto rhs = [=](const State& s, State& ds, double r) {
                const double v = v_lo + (v_hi - v_lo) * (r - lo) / (hi - lo);
                ds[0] = s[1];
                ds[1] = 0.5 * v * s[0];
            };
            std::vector<double> times{lo};
            std::size_t j = g + 1;
            while (j < grid.size() && grid[j] <= hi) {
                times.push_back(grid[j]);
                ++j;
            }
            std::size_t seen = 0;
            auto stepper = odeint::make_dense_output(abs_tol, opt.tol, odeint::runge_kutta_dopri5<State>());
            odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), (hi - lo) / 64.0,
                                    [&](const State& s, double) {
                                        if (seen++ == 0)
                                            return;
                                        u.push_back(s[0]);
                                        du.push_back(s[1]);
                                    });
            g = j - 1;
        }
    } catch (const std::exception& e) {
        throw solver_failure(std::string("scattering ODE failed: ") + e.what());
    }
    if (u.size() != grid.size() || !std::isfinite(u.back()) || !std::isfinite(du.back()) || !(du.back() > 0.0))
        throw solver_failure("scattering ODE did not reach the range of the potential");

    const double norm = du.back();
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] /= norm;
        du[i] /= norm;
    }
    sol.a = R - u.back();
    if (!(sol.a > 0.0))
        throw invalid_potential("computed scattering length is not positive");
    sol.grid = std::move(grid);
    sol.u = std::move(u);
    sol.du = std::move(du);
    sol.omega.resize(sol.grid.size());
    sol.g.resize(sol.grid.size());
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        const double r = sol.grid[i];
        sol.omega[i] = (r == 0.0) ? 1.0 - sol.du[0] : 1.0 - sol.u[i] / r;
        sol.g[i] = (r == 0.0) ? pot(0.0) * sol.du[0] : pot(r) * sol.u[i] / r;
    }
    return sol;
}

// (8 pi)^-1 int g = (1/2) int_0^R r v u dr
inline double scattering_length_by_integral(const ScatteringSolution& sol)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < sol.grid.size(); ++i)
        s += quad::gauss<8>([&sol](double r) { return r * sol.potential(r) * sol.u_at(r); }, sol.grid[i],
                            sol.grid[i + 1]);
    return 0.5 * s;
}

// int v / (8 pi): the value obtained when g is replaced by v
inline double born_length(const RadialPotential& pot) { return pot.born_length(); }

// Closed form for the square well: a = R (1 - tanh(kR)/(kR)), k = sqrt(v0/2).
inline double square_well_length(double v0, double R)
{
    const double x = std::sqrt(0.5 * v0) * R;
    if (x < 1e-4)
        return R * (x * x / 3.0 - 2.0 * x * x * x * x / 15.0);
    return R * (1.0 - std::tanh(x) / x);
}

// Square-well depth that produces scattering length a for range R (needs a < R).
inline double square_well_depth_for(double a, double R)
{
    if (!(a > 0.0 && a < R))
        throw domain_error("square well: need 0 < a < R");
    auto f = [&](double v0) { return square_well_length(v0, R) - a; };
    double lo = 1e-12 / (R * R), hi = 1.0 / (R * R);
    while (f(hi) < 0.0)
        hi *= 4.0;
    boost::uintmax_t iters = 200;
    auto res = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (res.first + res.second);
}

struct MomentumIntegral {
    double value = 0.0;
    double tail = 0.0;       // analytic tail beyond k_max
    double tail_error = 0.0; // bound on what the tail formula leaves out
    double k_max = 0.0;
};

// (2 pi)^-3 int fhat(k)^2 / (2 k^2) dk over R^3 = (4 pi^2)^-1 int_0^inf fhat^2 dk
inline MomentumIntegral half_square_momentum_integral(const RadialTransform& fh, double k_max_R = 400.0)
{
    MomentumIntegral m;
    const double R = fh.range();
    // panels of width pi/(2R) resolve the oscillation of fhat^2; k_max R is a
    // multiple of pi so the leading oscillating tail term vanishes
    const int panels = 2 * static_cast<int>(std::ceil(k_max_R / std::numbers::pi));
    const double K = panels * std::numbers::pi / (2.0 * R);
    const double in = quad::composite<24>([&fh](double k) {
        const double v = fh(k);
        return v * v;
    }, 0.0, K, panels);
    // fhat ~ -4 pi F(R-) cos(kR)/k^2 + 4 pi F'(R-) sin(kR)/k^3 + ...
    const double F = fh.end_value();
    const double Fp = std::abs(fh.end_slope()) + fh.slope_jumps();
    const double c = 4.0 * std::numbers::pi;
    m.tail = c * c * F * F / (6.0 * K * K * K);
    m.tail_error = c * c * (std::abs(F) * Fp / (2.0 * std::pow(K, 4)) + Fp * Fp / (5.0 * std::pow(K, 5)) +
                            F * F / (R * std::pow(K, 4)));
    m.k_max = K;
    const double norm = 4.0 * std::numbers::pi * std::numbers::pi;
    m.value = (in + m.tail) / norm;
    m.tail_error /= norm;
    return m;
}

struct GOmegaMoment {
    double direct = 0.0;   // 4 pi int r^2 g omega
    double momentum = 0.0; // (2 pi)^-3 int ghat^2 / (2 k^2)
    double relative_difference = 0.0;
    double tail = 0.0;       // analytic tail beyond k_max
    double tail_error = 0.0; // bound on what the tail formula leaves out
    double k_max = 0.0;
};

// ghat-omega(0) by position and by momentum quadrature.  Throws
// consistency_failure if they disagree beyond tol (relative).
inline GOmegaMoment g_omega_moment_report(const ScatteringSolution& sol, double k_max_R = 400.0)
{
    GOmegaMoment m;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < sol.grid.size(); ++i)
        s += quad::gauss<8>(
            [&sol](double r) { return r * sol.potential(r) * sol.u_at(r) * sol.omega_at(r); }, sol.grid[i],
            sol.grid[i + 1]);
    m.direct = 4.0 * std::numbers::pi * s;

    const auto q = half_square_momentum_integral(sol.g_transform(), k_max_R);
    m.momentum = q.value;
    m.tail = q.tail;
    m.tail_error = q.tail_error;
    m.k_max = q.k_max;
    const double scale = std::max(std::abs(m.direct), std::abs(m.momentum));
    m.relative_difference = scale > 0.0 ? std::abs(m.direct - m.momentum) / scale : 0.0;
    return m;
}

inline double g_omega_moment(const ScatteringSolution& sol, double tol)
{
    const auto m = g_omega_moment_report(sol);
    const double scale = std::max(std::abs(m.direct), 1e-300);
    if (m.relative_difference > tol + m.tail_error / scale)
        throw consistency_failure("g-omega moment: position and momentum quadratures disagree (" +
                                  std::to_string(m.relative_difference) + ")");
    return m.direct;
}

} // namespace lhy
