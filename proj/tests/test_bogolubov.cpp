#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lhy/bogolubov.hpp"

using namespace lhy;

TEST(Diagonalize, WorkedExamples)
{
    const auto m = diagonalize({2.0, 1.0, 0.0});
    EXPECT_NEAR(m.root, std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(m.D, 1.8660254037844386, 1e-14);
    EXPECT_NEAR(m.alpha, 0.2679491924311228, 1e-14);
    EXPECT_NEAR(m.ground_shift, -0.2679491924311228, 1e-14);

    const auto k = diagonalize({2.0, 1.0, 0.3});
    EXPECT_NEAR(k.ground_shift, -(2.0 - std::sqrt(3.0)) - 2.0 * 0.09 / 3.0, 1e-14);
    EXPECT_NEAR(k.ground_shift, -0.3279491924311228, 1e-14);

    // B = 0: no pairing, only the displacement
    const auto z = diagonalize({4.0, 0.0, cplx(1.0, 0.0)});
    EXPECT_EQ(z.alpha, 0.0);
    EXPECT_DOUBLE_EQ(z.D, 4.0);
    EXPECT_NEAR(std::abs(z.c0 - cplx(0.25, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(z.ground_shift, -0.5, 1e-15);

    // B = A boundary
    const auto b = diagonalize({3.0, 3.0, 0.0});
    EXPECT_DOUBLE_EQ(b.D, 1.5);
    EXPECT_DOUBLE_EQ(b.alpha, 1.0);
    EXPECT_DOUBLE_EQ(b.ground_shift, -3.0);
}

TEST(Diagonalize, AlphaRelationAndPhase)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double A = 0.1 + 10.0 * u(rng);
        const double B = A * (2.0 * u(rng) - 1.0) * 0.999;
        const cplx kappa(u(rng) - 0.5, u(rng) - 0.5);
        const auto m = diagonalize({A, B, kappa});
        EXPECT_NEAR(B * m.alpha * m.alpha - 2.0 * A * m.alpha + B, 0.0, 1e-12 * A);
        EXPECT_LT(std::abs(m.alpha), 1.0);
        // c0 carries the conjugate phase of kappa
        if (std::abs(kappa) > 0.0)
            EXPECT_NEAR(std::arg(m.c0), -std::arg(kappa), 1e-12);
    }
}

TEST(Diagonalize, Admissibility)
{
    // rounding just past the boundary is pulled back
    const auto m = diagonalize({1.0, 1.0 + 5e-13, 0.0});
    EXPECT_DOUBLE_EQ(m.alpha, 1.0);
    EXPECT_THROW(diagonalize({1.0, 1.0 + 1e-9, 0.0}), domain_error);
    EXPECT_THROW(diagonalize({1.0, -1.0, 0.0}), domain_error);
    EXPECT_THROW(diagonalize({0.0, 0.0, 0.0}), domain_error);
    EXPECT_THROW(diagonalize({NAN, 0.0, 0.0}), domain_error);
}

TEST(Tau, CutoffKineticProperties)
{
    const CutoffKinetic kin{1e-3, 0.1, 0.01, 50.0};
    EXPECT_EQ(kin(0.0), 0.0);
    EXPECT_EQ(kin(0.99 * kin.r1()), 0.0);
    double prev = 0.0;
    for (double k = 0.0; k < 50.0; k += 1e-3) {
        const double t = tau(k, kin);
        EXPECT_LE(t, k * k);
        EXPECT_GE(t, prev);
        EXPECT_NEAR(kin.deficit(k), k * k - t, 1e-12 * std::max(1.0, k * k));
        prev = t;
    }
    const double k = 2.0 * kin.r2() * 2.0; // |k| = 2 (d s l)^-1
    const double dsl = kin.d * kin.s * kin.ell;
    EXPECT_GE(k * k - kin(k), 0.0);
    EXPECT_LE(k * k - kin(k), 2.0 * k / dsl);
    // no localization: the plain kinetic energy
    const CutoffKinetic free{};
    for (double q : {1e-3, 1.0, 40.0})
        EXPECT_DOUBLE_EQ(free(q), q * q);
}

TEST(BogolubovModel, CoefficientsAndCutoff)
{
    ChiFunction chi(4);
    BogolubovModel m;
    m.W1hat = [](double k) { return 8.0 * M_PI / (1.0 + k * k); };
    m.kinetic = CutoffKinetic{1e-3, 0.5, 0.1, 20.0};
    m.chi = &chi;
    m.rho_z = 1e-3;
    m.rho_mu = 0.9e-3;
    m.z = 2.0;
    m.K_H = 10.0;

    const auto t0 = m.coefficients({0, 0, 0});
    EXPECT_DOUBLE_EQ(t0.A, t0.B);
    EXPECT_NEAR(t0.B, 1e-3 * 8.0 * M_PI, 1e-15);
    EXPECT_NEAR(t0.C, 1e-4 * 8.0 * M_PI * chi.hat({0, 0, 0}) * 2.0, 1e-15);

    // k = 0 is the boundary case B = A
    EXPECT_DOUBLE_EQ(m.diagonalized({0, 0, 0}).alpha, 1.0);
    const double kc = 1.0 / (m.K_H * m.a);
    EXPECT_EQ(m.diagonalized({kc, 0, 0}).c, 0.0);
    EXPECT_NE(m.diagonalized({0.4 * kc, 0, 0}).c, 0.0);

    m.rho_mu = m.rho_z;
    EXPECT_EQ(m.coefficients({0.01, 0.02, 0}).C, 0.0);

    // D/k^2 -> 1 and alpha decreases beyond the phonon scale
    double prev_alpha = 1.0;
    for (double k : {1.0, 10.0, 100.0, 1000.0}) {
        const auto d = m.diagonalized({k, 0, 0});
        EXPECT_LT(d.alpha, prev_alpha);
        prev_alpha = d.alpha;
    }
    EXPECT_NEAR(m.diagonalized({1e3, 0, 0}).D / 1e6, 1.0, 1e-3);
}
