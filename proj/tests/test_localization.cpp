#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lhy/localization.hpp"
#include "lhy/weighted.hpp"

using namespace lhy;

namespace {

constexpr double pi = std::numbers::pi;

}

TEST(Chi, NormalisationAndSquareIntegral)
{
    // C_1 = 2^{3/2}: int cos^2 = 1/2 per axis
    EXPECT_NEAR(chi_normalization(1), std::pow(2.0, 1.5), 1e-14);
    for (int M : {1, 4, 8, 30}) {
        ChiFunction chi(M);
        EXPECT_NEAR(chi_square_integral(chi), 1.0, 1e-10) << M;
        EXPECT_NEAR(chi.selfconv({0.0, 0.0, 0.0}), 1.0, 1e-12) << M;
    }
    EXPECT_THROW(chi_normalization(0), domain_error);
}

TEST(Chi, SelfConvolutionTableMatchesDirect)
{
    for (int M : {2, 30}) {
        ChiFunction chi(M);
        for (double y = 0.0; y < 1.0; y += 0.0173)
            EXPECT_NEAR(chi.selfconv_1d(y), chi.selfconv_1d_direct(y), 1e-11) << M << " " << y;
        EXPECT_EQ(chi.selfconv_1d(1.2), 0.0);
    }
    // M = 1 in closed form: (1-y) cos(pi y) + sin(pi y)/pi
    ChiFunction chi(1);
    for (double y : {0.0, 0.25, 0.6, 0.9})
        EXPECT_NEAR(chi.selfconv_1d(y), (1.0 - y) * std::cos(pi * y) + std::sin(pi * y) / pi, 1e-12);
    EXPECT_EQ(&chi_for(4), &chi_for(4));
}

TEST(Chi, TransformClosedFormMatchesQuadrature)
{
    for (int M : {1, 4, 8, 30}) {
        ChiFunction chi(M);
        // includes the removable singularities at kappa = pi (M - 2j)
        for (double k : {0.0, 0.3, pi, 2 * pi, 4 * pi * (1 + 1e-12), 10.0, 123.4, 1000.0})
            EXPECT_NEAR(chi.factor_hat(k), chi.factor_hat_quadrature(k, 256), 1e-12) << M << " " << k;
        EXPECT_NEAR(chi.hat({0, 0, 0}), std::pow(chi.factor_hat(0.0), 3), 1e-15);
    }
    // the transform at the origin is int chi
    ChiFunction chi(1);
    EXPECT_NEAR(chi.hat({0, 0, 0}), std::pow(2.0, 1.5) * std::pow(2.0 / pi, 3), 1e-13);
}

TEST(Chi, DecayBound)
{
    for (int M : {4, 8}) {
        ChiFunction chi(M);
        const auto rep = chihat_decay_check(chi, decay_grid(1e-2, 1e3, 40));
        EXPECT_LE(rep.max_ratio, 1.0) << M;
        EXPECT_GT(rep.C_chi, 0.0);
        // envelope falls like |k|^-(M+1), at least as fast as the bound requires
        for (double k : {100.0, 400.0}) {
            const double slope = chihat_doubling_slope(chi, k);
            EXPECT_LE(slope, -2.0 * chi.M_tilde() + 0.1) << M << " " << k;
            EXPECT_NEAR(slope, -(M + 1.0), 0.2) << M << " " << k;
        }
    }
    EXPECT_THROW(chihat_decay_check(ChiFunction(2), decay_grid(1, 10, 4)), domain_error);
}

TEST(Chi, ConvolutionBound)
{
    ChiFunction chi(4);
    std::vector<Vec3> xs;
    for (int i = 0; i < 8; ++i)
        xs.push_back({0.06 * i - 0.21, 0.04 * i - 0.14, 0.02 * i});
    const RadialFunction f{[](double) { return 1.0; }, {0.0, 0.1}};
    const auto rep = convolution_bound_check(f, chi, 1.0, xs);
    EXPECT_LE(rep.observed, rep.bound);
    EXPECT_GT(rep.margin, 2.0);
    // the defect scales like (R/l)^2 int|f| = R^5 for a ball indicator
    const RadialFunction half{[](double) { return 1.0; }, {0.0, 0.05}};
    const auto rep2 = convolution_bound_check(half, chi, 1.0, xs);
    EXPECT_NEAR(std::log2(rep.observed / rep2.observed), 5.0, 0.15);
    // the same function seen from a box twice as large
    const auto rep3 = convolution_bound_check(f, chi, 2.0, {{0.1, -0.2, 0.3}});
    EXPECT_LE(rep3.observed, rep3.bound);
}

TEST(Chi, SlidingIdentity)
{
    ChiFunction chi(30);
    const double R = 0.2, ell = 1.0;
    auto v = [R](double r) { return r < R ? 2.0 - r : 0.0; };
    const auto rep = sliding_identity_check(v, R, chi, ell, random_pairs(12, ell, R, 7), 2);
    EXPECT_LT(rep.max_residual, 1e-6);
    // separated points: both sides vanish
    const auto far = sliding_identity_check(v, R, chi, ell, {{{0, 0, 0}, {0.3, 0, 0}}}, 2);
    EXPECT_EQ(far.max_residual, 0.0);
}

TEST(Chi, SmallBoxCentreAndBounds)
{
    const auto c = small_box_chi_bounds(BoxGeometry{1.0, 0.25, {0.0, 0.0, 0.0}}, 30);
    EXPECT_NEAR(c.sup_over_CM2, 1.0, 1e-14);
    std::vector<double> sups;
    double first_special = 0.0;
    for (double l1 : {0.2, 0.1, 0.05, 0.025}) {
        const auto b = small_box_chi_bounds(boundary_box(1.0, 0.25, l1), 30);
        EXPECT_NEAR(b.lambda1, l1, 1e-14);
        EXPECT_LE(b.general_ratio, 1.0);
        // the (l1/l)^M form only carries an unnamed constant; it must not grow
        if (first_special == 0.0)
            first_special = b.special_ratio;
        EXPECT_LE(b.special_ratio, first_special);
        sups.push_back(b.sup);
        // derivative constant stays bounded as the box thins
        EXPECT_LT(b.derivative_ratio, 2.0 * c.derivative_ratio);
    }
    // halving lambda1 costs at least 2^-M
    for (std::size_t i = 1; i < sups.size(); ++i)
        EXPECT_GE(std::log2(sups[i - 1] / sups[i]), 30.0);
}

TEST(Chi, SmallBoxRejectsBadGeometry)
{
    EXPECT_THROW(small_box_chi_bounds(BoxGeometry{1.0, 0.0, {0, 0, 0}}, 4), domain_error);
    EXPECT_THROW(small_box_chi_bounds(BoxGeometry{1.0, 0.25, {9.0, 0, 0}}, 4), domain_error);
}

TEST(KineticMultiplier, FullSpaceIdentityAndFit)
{
    // at p = 0 the integrand vanishes identically
    EXPECT_EQ(kinetic_multiplier_H({0, 0, 0}, 1.0, 0.2).H, 0.0);
    const auto f1 = fit_kinetic_multiplier(1.0, 0.3, {1, 0, 0}, 7);
    const auto f2 = fit_kinetic_multiplier(1.0, 0.5, {1, 1, 0}, 7);
    for (double r : f1.ratio)
        EXPECT_GT(r, 0.0);
    EXPECT_NEAR(f1.C / f2.C, 1.0, 0.2);
    // b enters linearly
    const auto h1 = kinetic_multiplier_H({1.0, 0.5, 0.0}, 1.0, 0.3).H;
    const auto h2 = kinetic_multiplier_H({1.0, 0.5, 0.0}, 0.01, 0.3).H;
    EXPECT_NEAR(h2 / h1, 0.01, 1e-12);
    // small p: H grows like |p|^2
    const auto a = kinetic_multiplier_H({0.01, 0, 0}, 1.0, 0.3).H;
    const auto b = kinetic_multiplier_H({0.02, 0, 0}, 1.0, 0.3).H;
    EXPECT_NEAR(b / a, 4.0, 0.02);
    EXPECT_THROW(kinetic_multiplier_H({1, 0, 0}, 1.0, 1.5), domain_error);
}

TEST(Weighted, BoundsAndScaling)
{
    const auto sol = solve_scattering(RadialPotential::square_well(2.0, 1.0));
    ChiFunction chi(30);
    double prev_scaled = 0.0;
    for (double ell : {32.0, 64.0}) {
        WeightedPotentials W(sol, ell, chi, 512);
        double worst = 0.0;
        for (double r = 0.01; r < 1.0; r += 0.07)
            for (double th = 0.0; th < 1.6; th += 0.3) {
                const Vec3 x{r * std::cos(th), 0.6 * r * std::sin(th), 0.8 * r * std::sin(th)};
                const double g = sol.g_at(r);
                EXPECT_LE(g, W.W1(x));
                EXPECT_LE(W.W1(x), W.W2(x));
                worst = std::max(worst, W.W1(x) / g - 1.0);
            }
        const double scaled = worst * (ell / sol.R) * (ell / sol.R);
        if (prev_scaled > 0.0)
            EXPECT_NEAR(scaled / prev_scaled, 1.0, 0.1);
        prev_scaled = scaled;
        EXPECT_NEAR(W.W1hat(0.0) / (8.0 * pi * sol.a), 1.0, 0.05 * 32.0 * 32.0 / (ell * ell));
        EXPECT_GE(W.W1hat(0.0), 8.0 * pi * sol.a);
    }
    EXPECT_THROW(WeightedPotentials(sol, 1.5, chi), domain_error);
}
