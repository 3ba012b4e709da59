#pragma once

#include <cmath>
#include <numbers>

#include "lhy/errors.hpp"
#include "lhy/localization.hpp"
#include "lhy/quadrature.hpp"
#include "lhy/radial.hpp"
#include "lhy/scattering.hpp"

namespace lhy {

// W1 = g / (chi*chi)(x/l) and W2 = (g + g omega) / (chi*chi)(x/l).
//
// These are not exactly radial.  The transforms below use the spherical
// average of 1/(chi*chi) at each radius, which is what enters every
// k-space formula downstream; the anisotropy is O((R/l)^2) anyway.
class WeightedPotentials {
public:
    WeightedPotentials(const ScatteringSolution& sol, double ell, const ChiFunction& chi, int cells = 2048)
        : sol_(&sol), chi_(&chi), ell_(ell)
    {
        if (!(ell > 0.0) || sol.R > ell / 2)
            throw domain_error("weighted potentials need R <= ell/2");
        W1hat_ = RadialTransform::from_rf([this](double r) { return r * W1s(r); }, sol.breaks(), cells);
        W2hat_ = RadialTransform::from_rf([this](double r) { return r * W2s(r); }, sol.breaks(), cells);
        W1omega0_ = 0.0;
        const auto br = sol.breaks();
        for (std::size_t i = 0; i + 1 < br.size(); ++i)
            W1omega0_ += quad::composite<16>(
                [this](double r) { return r * r * W1s(r) * sol_->omega_at(r); }, br[i], br[i + 1], 32);
        W1omega0_ *= 4.0 * std::numbers::pi;
    }

    double ell() const { return ell_; }
    double R() const { return sol_->R; }

    double W1(const Vec3& x) const { return sol_->g_at(norm(x)) / weight(x); }
    double W2(const Vec3& x) const
    {
        const double r = norm(x);
        return sol_->g_at(r) * (1.0 + sol_->omega_at(r)) / weight(x);
    }

    // spherical averages
    double W1s(double r) const { return sol_->g_at(r) * inverse_weight_average(r); }
    double W2s(double r) const { return sol_->g_at(r) * (1.0 + sol_->omega_at(r)) * inverse_weight_average(r); }

    const RadialTransform& W1hat() const { return W1hat_; }
    const RadialTransform& W2hat() const { return W2hat_; }
    double W1hat(double k) const { return W1hat_(k); }
    double W2hat(double k) const { return W2hat_(k); }
    // int W1 omega
    double W1omega_at_zero() const { return W1omega0_; }

    // <1 / (chi*chi)(r sigma / l)> over the unit sphere
    double inverse_weight_average(double r) const
    {
        if (r == 0.0)
            return 1.0 / weight({0.0, 0.0, 0.0});
        // the weight is even in each coordinate, so one octant suffices
        const auto& gm = quad::gauss_rule<12>();
        const auto& gp = quad::gauss_rule<12>();
        double s = 0.0;
        for (std::size_t i = 0; i < gm.x.size(); ++i) {
            const double mu = 0.5 * (gm.x[i] + 1.0);
            const double st = std::sqrt(1.0 - mu * mu);
            for (std::size_t j = 0; j < gp.x.size(); ++j) {
                const double ph = 0.25 * std::numbers::pi * (gp.x[j] + 1.0);
                const Vec3 x{r * st * std::cos(ph), r * st * std::sin(ph), r * mu};
                s += 0.5 * gm.w[i] * 0.25 * std::numbers::pi * gp.w[j] / weight(x);
            }
        }
        return s / (0.5 * std::numbers::pi);
    }

private:
    const ScatteringSolution* sol_;
    const ChiFunction* chi_;
    double ell_;
    RadialTransform W1hat_, W2hat_;
    double W1omega0_ = 0.0;

    double weight(const Vec3& x) const { return chi_->selfconv({x[0] / ell_, x[1] / ell_, x[2] / ell_}); }
};

} // namespace lhy
