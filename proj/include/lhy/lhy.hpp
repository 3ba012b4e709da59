#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lhy/bogolubov.hpp"
#include "lhy/errors.hpp"
#include "lhy/localization.hpp"
#include "lhy/params.hpp"
#include "lhy/quadrature.hpp"
#include "lhy/scattering.hpp"
#include "lhy/weighted.hpp"

namespace lhy {

using params::NumericSchedule;
using params::derived_scales;

// 128 / (15 sqrt(pi))
inline double lhy_coefficient() { return 128.0 / (15.0 * std::sqrt(std::numbers::pi)); }

// closed form of the reference integral, -64 pi^4 * 128/(15 sqrt(pi))
inline double reference_closed_form()
{
    const double p = std::numbers::pi;
    return -64.0 * p * p * p * p * lhy_coefficient();
}

struct IntegralResult {
    double value = 0.0;
    double est_error = 0.0;
    double I1_prime = 0.0;
    double I1_doubleprime = 0.0;
};

namespace detail {

// t^2 (t^2 + c - sqrt((t^2+c)^2 - c^2) - c^2/(2t^2)), rearranged so that no
// two large terms are subtracted
inline double reference_radial_integrand(double t, double c)
{
    const double t2 = t * t;
    const double S = std::sqrt(t2 * (t2 + 2.0 * c));
    const double denom = t2 + c + S;
    const double extra = (t2 + S) > 0.0 ? 2.0 * t2 / (t2 + S) : 0.0;
    return -c * c * c * (1.0 + extra) / (2.0 * denom);
}

// 4 pi int_T^inf t^2 f(t) dt from f = -c^3/(2t^4) + 5c^4/(8t^6) - 7c^5/(8t^8) + ...
inline double reference_tail(double T, double c, double* next_term = nullptr)
{
    const double v = -c * c * c / (2.0 * T) + 5.0 * std::pow(c, 4) / (24.0 * std::pow(T, 3)) -
                     7.0 * std::pow(c, 5) / (40.0 * std::pow(T, 5));
    if (next_term)
        *next_term = 4.0 * std::numbers::pi * 21.0 * std::pow(c, 6) / (16.0 * 7.0 * std::pow(T, 7));
    return 4.0 * std::numbers::pi * v;
}

inline std::vector<double> doubling_breaks(double lo, double hi, std::vector<double> extra = {})
{
    std::vector<double> b{0.0};
    for (double t = lo; t < hi; t *= 2.0)
        b.push_back(t);
    b.push_back(hi);
    for (double e : extra)
        if (e > 0.0 && e < hi)
            b.push_back(e);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end(), [](double x, double y) { return std::abs(x - y) <= 1e-14 * y; }),
            b.end());
    return b;
}

} // namespace detail

// int_{R^3} t^2 + 8 pi - (8 pi)^2/(2t^2) - sqrt((t^2 + 8 pi)^2 - (8 pi)^2) dt
inline IntegralResult reference_integral(double tol)
{
    if (!(tol > 0.0))
        throw domain_error("reference integral: tol must be positive");
    const double c = 8.0 * std::numbers::pi;
    const double T = 256.0;
    const auto r = quad::adaptive([c](double t) { return detail::reference_radial_integrand(t, c); },
                                  detail::doubling_breaks(0.25, T), std::min(tol, 1e-10) * 1e-2);
    double next = 0.0;
    IntegralResult out;
    out.value = 4.0 * std::numbers::pi * r.value + detail::reference_tail(T, c, &next);
    out.est_error = 4.0 * std::numbers::pi * r.error + std::abs(next);
    out.I1_prime = out.value;
    const double closed = reference_closed_form();
    if (std::abs(out.value / closed - 1.0) > tol)
        throw invariant_failure("reference integral disagrees with its closed form beyond tol");
    return out;
}

// Everything the regularized Bogolubov integral needs.
struct BogIntegralSetup {
    std::function<double(double)> W1hat; // k -> W1hat(k)
    CutoffKinetic kinetic;               // ell = inf gives tau = k^2
    double a = 1.0;
    double R = 1.0;
    double rho_z = 0.0;
    double rho_mu = 0.0;
};

struct BogIntegrand {
    double total = 0.0;        // t^2 (alpha - sqrt(alpha^2 - beta^2) - beta^2/(2t^2))
    double doubleprime = 0.0;  // t^2 beta^2 (t^2 - tau~) / (2 t^2 alpha)
};

// radial integrand of I1 at t
inline BogIntegrand bog_integrand(const BogIntegralSetup& s, double t)
{
    const double q = std::sqrt(s.rho_z * s.a);
    const double k = q * t;
    const double beta = s.W1hat(k) / s.a;
    const double tau = s.kinetic(k) / (q * q);
    const double def = s.kinetic.deficit(k) / (q * q);
    const double alpha = tau + beta;
    const double S2 = tau * (tau + 2.0 * beta);
    if (S2 < 0.0 || !(alpha > 0.0))
        throw domain_error("Bogolubov integrand: |B| > A at t = " + std::to_string(t));
    const double S = std::sqrt(S2);
    const double t2 = t * t;
    BogIntegrand out;
    if (t == 0.0) {
        out.total = -0.5 * beta * beta;
        out.doubleprime = 0.0;
        return out;
    }
    const double bracket = def - beta + (def * (t2 + tau) - 2.0 * beta * tau) / (t2 + S);
    out.total = beta * beta * bracket / (2.0 * (alpha + S));
    out.doubleprime = beta * beta * def / (2.0 * alpha);
    return out;
}

// I1 = int_{R^3} alpha - sqrt(alpha^2 - beta^2) - beta^2/(2 t^2) dt, with
// beta = W1hat(sqrt(rho_z a) t)/a and alpha = tau~ + beta.
inline IntegralResult bog_energy_integral(const BogIntegralSetup& s, double tol = 1e-9)
{
    if (s.rho_z == 0.0)
        return {};
    if (!(s.rho_z > 0.0 && s.a > 0.0 && s.R > 0.0))
        throw domain_error("Bogolubov integral needs rho_z >= 0, a > 0, R > 0");
    const double q = std::sqrt(s.rho_z * s.a);
    const double tR = 1.0 / (s.R * q);
    const double t_hi = std::max(512.0, 400.0 * tR);
    const auto br = detail::doubling_breaks(1e-3, t_hi, {s.kinetic.r1() / q, s.kinetic.r2() / q, tR});
    const auto tot = quad::adaptive([&](double t) { return bog_integrand(s, t).total; }, br, tol);
    const auto dbl = quad::adaptive([&](double t) { return bog_integrand(s, t).doubleprime; }, br, tol);
    IntegralResult out;
    const double fp = 4.0 * std::numbers::pi;
    out.value = fp * tot.value;
    out.I1_doubleprime = fp * dbl.value;
    out.I1_prime = out.value - out.I1_doubleprime;
    // beyond t_hi the integrand is ~ -beta^3 / (2 t^2)
    const double bt = std::abs(s.W1hat(q * t_hi)) / s.a;
    out.est_error = fp * (tot.error + dbl.error) + fp * bt * bt * bt / (2.0 * t_hi);
    if (!std::isfinite(out.value))
        throw quadrature_failure("Bogolubov integral is not finite");
    return out;
}

// epsilon(rho_mu, rho_z) of the cutoff error budget
inline double error_budget(const NumericSchedule& p, double rho_mu, double a, double R)
{
    if (!(rho_mu > 0.0 && a > 0.0 && R >= 0.0))
        throw domain_error("error budget needs rho > 0, a > 0, R >= 0");
    const double y = rho_mu * a * a * a;
    const double Ks = p.K_ell * p.s;
    const double L = std::log(p.K_ell * p.d * p.s / std::sqrt(y));
    return std::pow(rho_mu * a, 0.25) * std::sqrt(R) + p.eps_T + (1.0 + std::log(1.0 / p.d) + L) / Ks +
           p.eps_T / (Ks * p.d) * (1.0 + L);
}

enum class EnergyMode { ideal, cutoff };

inline std::string to_string(EnergyMode m) { return m == EnergyMode::ideal ? "ideal" : "cutoff"; }

struct EnergySettings {
    EnergyMode mode = EnergyMode::ideal;
    NumericSchedule schedule{};
    double tol = 1e-9;
    double max_rho_a3 = 1e-4;
    int cells = 2048;
};

struct EnergyBreakdown {
    double rho = 0.0;
    double rho_z = 0.0;
    double rho_mu = 0.0;
    double main_term = 0.0;        // -1/2 rho_mu^2 ghat(0)
    double condensate_shift = 0.0; // 1/2 (rho_z - rho_mu)^2 ghat(0)
    double g_omega_term = 0.0;     // 1/2 rho_z^2 (g omega)^(0)
    double regularization = 0.0;   // -1/2 rho_z^2 (2pi)^-3 int W1hat^2/(2k^2)
    double lhy_integral = 0.0;     // -1/2 (2pi)^-3 rho_z^2 a sqrt(rho_z a^3) I1
    double I1 = 0.0;
    double I1_error = 0.0;
    double error_budget = 0.0;
    double e0 = 0.0;
    double e_canonical = 0.0;
    double lhy_relative = 0.0;     // e_canonical/(4 pi rho^2 a) - 1
    double lhy_estimate = 0.0;     // lhy_relative / sqrt(rho a^3)
};

// Shared state for energy evaluations at one density: the Bogolubov setup and
// the transform of W1 (or g in ideal mode).
struct EnergyContext {
    BogIntegralSetup setup;
    std::optional<RadialTransform> ghat;
    std::optional<WeightedPotentials> weighted;
    double ell = INFINITY;
};

inline EnergyContext make_energy_context(const ScatteringSolution& sol, double rho_mu, double rho_z,
                                         const EnergySettings& cfg)
{
    EnergyContext ctx;
    ctx.setup.a = sol.a;
    ctx.setup.R = sol.R;
    ctx.setup.rho_mu = rho_mu;
    ctx.setup.rho_z = rho_z;
    if (cfg.mode == EnergyMode::ideal) {
        ctx.ghat.emplace(sol.g_transform(cfg.cells));
        const RadialTransform* g = &*ctx.ghat;
        ctx.setup.W1hat = [g](double k) { return (*g)(k); };
        return ctx;
    }
    const auto& p = cfg.schedule;
    ctx.ell = p.K_ell / std::sqrt(rho_mu * sol.a);
    ctx.weighted.emplace(sol, ctx.ell, chi_for(p.M), cfg.cells);
    const WeightedPotentials* w = &*ctx.weighted;
    ctx.setup.W1hat = [w](double k) { return w->W1hat(k); };
    ctx.setup.kinetic = CutoffKinetic{p.eps_T, p.s, p.d, ctx.ell};
    return ctx;
}

inline EnergyBreakdown energy_density(double rho, const ScatteringSolution& sol, const EnergySettings& cfg,
                                      std::optional<double> rho_z_override = std::nullopt)
{
    const double a = sol.a;
    const double y = rho * a * a * a;
    if (!(rho >= 0.0) || !std::isfinite(rho))
        throw domain_error("energy density: rho must be finite and nonnegative");
    if (y > cfg.max_rho_a3)
        throw domain_error("energy density: rho a^3 exceeds the configured ceiling");
    EnergyBreakdown e;
    e.rho = rho;
    e.rho_mu = rho;
    e.rho_z = rho_z_override.value_or(rho);
    if (rho == 0.0)
        return e;
    const double pi = std::numbers::pi;
    const double g0 = 8.0 * pi * a;
    const double gw0 = g_omega_moment_report(sol).direct;
    const auto ctx = make_energy_context(sol, e.rho_mu, e.rho_z, cfg);
    const auto I = bog_energy_integral(ctx.setup, cfg.tol);
    double reg = gw0;
    if (cfg.mode == EnergyMode::cutoff)
        reg = half_square_momentum_integral(ctx.weighted->W1hat()).value;
    const double rz = e.rho_z;
    e.main_term = -0.5 * e.rho_mu * e.rho_mu * g0;
    e.condensate_shift = 0.5 * (rz - e.rho_mu) * (rz - e.rho_mu) * g0;
    e.g_omega_term = 0.5 * rz * rz * gw0;
    e.regularization = -0.5 * rz * rz * reg;
    const double pref = rz * rz * a * std::sqrt(rz * a * a * a);
    e.I1 = I.value;
    e.I1_error = I.est_error;
    e.lhy_integral = -0.5 * pref * I.value / (8.0 * pi * pi * pi);
    e.error_budget = error_budget(cfg.schedule, e.rho_mu, a, sol.R);
    e.e0 = e.main_term + e.condensate_shift + e.g_omega_term + e.regularization + e.lhy_integral;
    e.e_canonical = e.e0 + 8.0 * pi * a * rho * e.rho_mu;
    e.lhy_relative = e.e_canonical / (4.0 * pi * rho * rho * a) - 1.0;
    e.lhy_estimate = e.lhy_relative / std::sqrt(y);
    return e;
}

// Least-squares slope through the origin of y against x.
inline double slope_through_origin(const std::vector<double>& x, const std::vector<double>& y)
{
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    return sxy / sxx;
}

// Ordinary least-squares slope of y against x.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// high-momentum integral comparisons

struct PHComparison {
    double k_H = 0.0;            // inner radius of P_H
    double lhs = 0.0;            // rho_z (W1 omega)^(0)
    double rhs = 0.0;            // (2pi)^-3 int_{P_H} W1hat alpha_k
    double gap = 0.0;
    double lhs2 = 0.0;           // (W1 omega)^(0)
    double rhs2 = 0.0;           // (2pi)^-3 int_{P_H} W1hat^2 / (2 D_k)
    double gap2 = 0.0;
    double alpha_vs_A = 0.0;     // (2pi)^-3 int_{P_H} |W1hat alpha_k - rho_z W1hat^2/(2A)|
    double predicted_scale = 0.0; // rho_z a (rho_mu a^3)^{5/12} / K_H_tilde
};

inline PHComparison integral_comparison_PH(const NumericSchedule& p, double rho, const ScatteringSolution& sol,
                                           int cells = 2048, bool omega_off = false)
{
    const double a = sol.a, R = sol.R;
    const double y = rho * a * a * a;
    if (!(y > 0.0 && y < 1.0))
        throw domain_error("high-momentum comparison needs 0 < rho a^3 < 1");
    const auto sc = derived_scales(p, rho, a);
    const WeightedPotentials W(sol, sc.ell, chi_for(p.M), cells);
    const CutoffKinetic kin{p.eps_T, p.s, p.d, sc.ell};
    PHComparison out;
    out.k_H = 1.0 / (sc.K_H * a);
    out.predicted_scale = rho * a * std::pow(y, 5.0 / 12.0) / p.K_H_tilde;
    if (!(out.k_H * R < 1.0))
        throw domain_error("high-momentum region is empty at this density");
    const double pi = std::numbers::pi;

    out.lhs2 = omega_off ? 0.0 : W.W1omega_at_zero();
    out.lhs = rho * out.lhs2;

    struct Vals {
        double alpha = 0.0, D = 0.0, diff = 0.0;
    };
    auto integrand = [&](double k) {
        const double w = W.W1hat(k);
        const auto m = diagonalize({kin(k) + rho * w, rho * w, 0.0});
        const double A = kin(k) + rho * w;
        Vals v;
        v.alpha = k * k * w * m.alpha;
        v.D = k * k * w * w / (2.0 * m.D);
        v.diff = k * k * std::abs(w * m.alpha - rho * w * w / (2.0 * A));
        return v;
    };
    // log panels up to the potential scale, then panels of width pi/(2R)
    std::vector<double> br;
    const double k1 = pi / (2.0 * R);
    const int nlog = std::max(4, static_cast<int>(std::ceil(8.0 * std::log10(k1 / out.k_H))));
    for (int i = 0; i <= nlog; ++i)
        br.push_back(out.k_H * std::pow(k1 / out.k_H, static_cast<double>(i) / nlog));
    for (double r : {kin.r1(), kin.r2()})
        if (r > out.k_H && r < k1)
            br.push_back(r);
    std::sort(br.begin(), br.end());
    const int panels = 2 * static_cast<int>(std::ceil(400.0 / pi));
    const double K = panels * pi / (2.0 * R);
    for (int i = 2; i <= panels; ++i)
        br.push_back(i * k1);
    double sa = 0.0, sd = 0.0, sf = 0.0;
    const auto& gl = quad::gauss_rule<24>();
    for (std::size_t j = 0; j + 1 < br.size(); ++j) {
        const double c = 0.5 * (br[j] + br[j + 1]), h = 0.5 * (br[j + 1] - br[j]);
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            const auto v = integrand(c + h * gl.x[i]);
            sa += gl.w[i] * h * v.alpha;
            sd += gl.w[i] * h * v.D;
            sf += gl.w[i] * h * v.diff;
        }
    }
    // beyond K: alpha_k ~ rho W1hat/(2k^2) and D_k ~ k^2, so both tails are
    // the tail of int W1hat^2/(2k^2)
    const auto& T = W.W1hat();
    const double F = T.end_value();
    const double tail = 16.0 * pi * pi * F * F / (6.0 * K * K * K);
    const double norm = 2.0 * pi * pi; // (2pi)^-3 4 pi
    out.rhs = (sa + rho * tail / 2.0) / norm;
    out.rhs2 = (sd + tail / 2.0) / norm;
    out.alpha_vs_A = sf / norm;
    out.gap = std::abs(out.lhs - out.rhs);
    out.gap2 = std::abs(out.lhs2 - out.rhs2);
    return out;
}

} // namespace lhy
