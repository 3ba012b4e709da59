#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lhy/lhy.hpp"

using namespace lhy;

namespace {

constexpr double pi = std::numbers::pi;

// R = 2a square well with a = 1
const ScatteringSolution& well()
{
    static const auto sol = solve_scattering(RadialPotential::square_well(square_well_depth_for(1.0, 2.0), 2.0));
    return sol;
}

} // namespace

TEST(ReferenceIntegral, ClosedForm)
{
    EXPECT_NEAR(lhy_coefficient(), 4.814417779607521, 1e-12);
    EXPECT_NEAR(reference_closed_form(), -30013.955825, 1e-5);
    const auto r = reference_integral(1e-6);
    EXPECT_LT(std::abs(r.value / reference_closed_form() - 1.0), 1e-10);
    EXPECT_THROW(reference_integral(0.0), domain_error);
}

TEST(ReferenceIntegral, IntegrandAndTail)
{
    const double c = 8.0 * pi;
    EXPECT_DOUBLE_EQ(detail::reference_radial_integrand(0.0, c), -0.5 * c * c);
    // the rearranged integrand against the textbook form where it is still accurate
    for (double t : {0.5, 2.0, 7.0}) {
        const double t2 = t * t;
        const double naive = t2 * (t2 + c - std::sqrt((t2 + c) * (t2 + c) - c * c) - c * c / (2.0 * t2));
        EXPECT_NEAR(detail::reference_radial_integrand(t, c), naive, 1e-9 * std::abs(naive)) << t;
    }
    // tail(T) = int_T^{4T} + tail(4T)
    const double T = 256.0;
    const auto mid = quad::adaptive([c](double t) { return detail::reference_radial_integrand(t, c); },
                                    {T, 2 * T, 4 * T}, 1e-13);
    const double lhs = detail::reference_tail(T, c);
    const double rhs = 4.0 * pi * mid.value + detail::reference_tail(4 * T, c);
    EXPECT_LT(std::abs(lhs / rhs - 1.0), 1e-7);
}

TEST(EnergyDensity, Domain)
{
    const auto& sol = well();
    EnergySettings cfg;
    const auto e = energy_density(0.0, sol, cfg);
    EXPECT_EQ(e.e0, 0.0);
    EXPECT_EQ(e.I1, 0.0);
    EXPECT_THROW(energy_density(2e-4, sol, cfg), domain_error);
    EXPECT_THROW(energy_density(-1.0, sol, cfg), domain_error);
    EXPECT_THROW(energy_density(NAN, sol, cfg), domain_error);

    BogIntegralSetup s;
    s.W1hat = [](double) { return 1.0; };
    EXPECT_EQ(bog_energy_integral(s).value, 0.0);
}

TEST(EnergyDensity, IdealModeReachesReference)
{
    const auto& sol = well();
    EnergySettings cfg;
    const auto e = energy_density(1e-10, sol, cfg);
    EXPECT_LT(std::abs(e.I1 / reference_closed_form() - 1.0), 0.01);
    EXPECT_NEAR(e.lhy_estimate / lhy_coefficient(), 1.0, 0.01);
    // the condensate shift vanishes at rho_z = rho_mu
    EXPECT_EQ(e.condensate_shift, 0.0);
}

TEST(EnergyDensity, IdealSlope)
{
    const auto& sol = well();
    EnergySettings cfg;
    std::vector<double> x, y;
    for (double r : {1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
        const auto e = energy_density(r, sol, cfg);
        x.push_back(std::sqrt(r));
        y.push_back(e.lhy_relative);
    }
    EXPECT_NEAR(slope_through_origin(x, y) / lhy_coefficient(), 1.0, 0.03);
}

TEST(EnergyDensity, SameScatteringLengthSameEnergy)
{
    const auto other = solve_scattering(RadialPotential::square_well(square_well_depth_for(1.0, 1.5), 1.5));
    ASSERT_NEAR(other.a, 1.0, 1e-12);
    EnergySettings cfg;
    const auto e1 = energy_density(1e-9, well(), cfg);
    const auto e2 = energy_density(1e-9, other, cfg);
    EXPECT_NEAR(e1.lhy_estimate / e2.lhy_estimate, 1.0, 5e-3);
}

TEST(EnergyDensity, CutoffWithinBudget)
{
    const auto& sol = well();
    EnergySettings ideal, cut;
    cut.mode = EnergyMode::cutoff;
    for (double r : {1e-9, 1e-8, 1e-7}) {
        const auto ec = energy_density(r, sol, cut);
        const auto ei = energy_density(r, sol, ideal);
        const double diff = 0.5 * std::abs(ec.I1 - ei.I1) / (8.0 * pi * pi * pi);
        EXPECT_LE(diff, 10.0 * ec.error_budget) << r;
        EXPECT_GT(ec.I1, ei.I1) << r; // tau <= k^2 lowers the integrand's magnitude
    }
}

TEST(ErrorBudget, MonotoneInSchedule)
{
    NumericSchedule p;
    double prev = INFINITY;
    for (double Kl : {1e2, 1e3, 1e4}) {
        p.K_ell = Kl;
        const double e = error_budget(p, 1e-8, 1.0, 2.0);
        EXPECT_LT(e, prev);
        prev = e;
    }
    EXPECT_THROW(error_budget(p, 0.0, 1.0, 1.0), domain_error);
}

TEST(HighMomentum, GapRate)
{
    NumericSchedule p;
    p.s = 1.0;
    p.d = 0.1;
    p.K_ell = 100.0;
    p.K_H_tilde = 0.1;
    std::vector<double> lx, ly;
    for (double r : {1e-6, 1e-7, 1e-8, 1e-9, 1e-10}) {
        const auto c = integral_comparison_PH(p, r, well());
        EXPECT_GT(c.rhs, 0.0);
        lx.push_back(std::log(r));
        ly.push_back(std::log(c.gap / r));
    }
    EXPECT_GE(fitted_slope(lx, ly), 5.0 / 12.0 - 0.05);
    EXPECT_THROW(integral_comparison_PH(p, 0.0, well()), domain_error);
}

TEST(Fits, Slopes)
{
    EXPECT_DOUBLE_EQ(slope_through_origin({1, 2, 3}, {2, 4, 6}), 2.0);
    EXPECT_NEAR(fitted_slope({1, 2, 3}, {3, 5, 7}), 2.0, 1e-14);
}
