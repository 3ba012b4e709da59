#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

#include "lhy/fockcheck.hpp"

using namespace lhy;
using namespace lhy::fock;

namespace {

nlohmann::json fixture(const std::string& name)
{
    std::ifstream in(std::string(LHY_FIXTURE_DIR) + "/" + name);
    return nlohmann::json::parse(in);
}

} // namespace

TEST(Fock, BasisAndLadders)
{
    const TruncatedFock f(2, 5);
    EXPECT_EQ(f.dim(), 21);
    for (int i = 0; i < f.dim(); ++i)
        EXPECT_EQ(f.index(f.state(i)), i);
    EXPECT_EQ(f.index({6, 0}), -1);
    EXPECT_EQ(TruncatedFock(3, 4).dim(), 35);

    // one mode: a^dag a has spectrum {0, 1, 2, 3}
    const TruncatedFock one(1, 3);
    const auto L = ladder_matrices(one, 0);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(L.adag * L.a).eigenvalues();
    for (int n = 0; n <= 3; ++n)
        EXPECT_NEAR(ev(n), n, 1e-14);

    const auto p = ladder_matrices(f, 0), m = ladder_matrices(f, 1);
    const Matrix c11 = p.a * p.adag - p.adag * p.a;
    const Matrix c12 = p.a * m.adag - m.adag * p.a;
    for (int j : f.interior(1))
        for (int i = 0; i < f.dim(); ++i) {
            EXPECT_NEAR(c11(i, j), i == j ? 1.0 : 0.0, 1e-14); // sqrt(n)^2 rounds
            EXPECT_EQ(c12(i, j), 0.0);
        }
    EXPECT_THROW(ladder_matrices(f, 2), domain_error);
}

TEST(Fock, BogolubovIdentityWorkedExample)
{
    const auto r = verify_bog_identity(2.0, 1.0, cplx(0.3, 0.0), 40);
    EXPECT_LE(r.residual, 1e-10);
    EXPECT_LE(r.hermiticity, 1e-13);
    EXPECT_NEAR(r.ground_lhs, -(2.0 - std::sqrt(3.0)) - 2.0 * 0.09 / 3.0, 1e-8);
    EXPECT_NEAR(r.ground_rhs, r.closed_form, 1e-8);

    const auto k0 = verify_bog_identity(2.0, 1.0, 0.0, 40);
    EXPECT_NEAR(k0.ground_lhs, -0.2679491924311228, 1e-8);

    // B = 0, kappa = 0: both sides are A times the number operator
    const auto n = verify_bog_identity(1.7, 0.0, 0.0, 10);
    EXPECT_EQ(n.residual, 0.0);
    EXPECT_NEAR(n.ground_lhs, 0.0, 1e-14);
}

TEST(Fock, BogolubovIdentityRandomTriples)
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const auto t = random_admissible_triple(rng);
        const auto r = verify_bog_identity(t.A, t.B, t.kappa, 24);
        EXPECT_LE(r.residual, 1e-10) << t.A << " " << t.B << " " << t.kappa;
    }
    // a complex kappa gives the same ground energy as |kappa|
    const auto c = verify_bog_identity(2.0, 1.0, cplx(0.2, -0.4), 30);
    EXPECT_NEAR(c.ground_lhs, c.closed_form, 1e-8);
}

TEST(Fock, GroundEnergyDecreasesWithCutoff)
{
    double prev = INFINITY;
    for (int n : {4, 8, 16, 32}) {
        const double e = bog_ground_energy(3.0, 2.5, cplx(0.5, 0.0), n);
        EXPECT_LE(e, prev + 1e-13);
        EXPECT_GE(e, diagonalize({3.0, 2.5, 0.5}).ground_shift - 1e-12);
        prev = e;
    }
}

TEST(Fock, LowerBound)
{
    std::mt19937_64 rng(0);
    for (int i = 0; i < 50; ++i) {
        const auto t = random_admissible_triple(rng);
        EXPECT_TRUE(bog_lower_bound_check(t.A, t.B, t.kappa, 30).ok);
    }
    // boundary B = A: bound is -A - |kappa|^2/A
    const auto b = bog_lower_bound_check(1.0, 1.0, cplx(0.2, 0.0), 30);
    EXPECT_TRUE(b.ok);
    EXPECT_NEAR(b.bound, -1.0 - 0.04, 1e-15);
    const auto z = bog_lower_bound_check(1.0, 0.0, 0.0, 10);
    EXPECT_NEAR(z.lambda_min, 0.0, 1e-14);
}

TEST(Lattice, ProjectorsAndKernels)
{
    const auto box = LatticeBox::random(3, 4);
    EXPECT_LT(projector_defect(box), 1e-15);
    EXPECT_EQ(box.n(), 27);
    EXPECT_THROW(LatticeBox(2, Matrix::Constant(8, 8, -1.0), Matrix::Zero(8, 8)), domain_error);
    Matrix asym = Matrix::Zero(8, 8);
    asym(0, 1) = 1.0;
    EXPECT_THROW(LatticeBox(2, asym, Matrix::Zero(8, 8)), domain_error);
    EXPECT_THROW(LatticeBox(2, Matrix::Zero(8, 8), Matrix::Constant(8, 8, 1.5)), domain_error);
}

TEST(Lattice, PotentialSplitIdentity)
{
    for (int G : {3, 4}) {
        for (std::uint64_t seed : {1u, 2u}) {
            const auto r = verify_potential_split(LatticeBox::random(G, seed), 0.8, G == 3);
            EXPECT_LE(r.residual, 1e-10 * std::max(1.0, r.scale)) << G;
            if (G == 3)
                EXPECT_TRUE(r.q4_psd) << r.q4_min_eigenvalue;
        }
    }
}

TEST(Lattice, PotentialSplitLargeGrid)
{
    const auto r = verify_potential_split(LatticeBox::random(5, 3), 0.4, false);
    EXPECT_LE(r.residual, 1e-10 * std::max(1.0, r.scale));
}

TEST(Lattice, SpecialKernels)
{
    const auto base = LatticeBox::random(3, 6);
    // omega = 0: Q4 reduces to Q Q w Q Q
    const auto z = verify_potential_split(LatticeBox(3, base.w(), Matrix::Zero(27, 27)), 0.5);
    EXPECT_TRUE(z.q4_psd);
    EXPECT_LE(z.residual, 1e-12);
    // w = 0: everything vanishes
    const auto w = verify_potential_split(LatticeBox(3, Matrix::Zero(27, 27), base.omega()), 0.5);
    EXPECT_EQ(w.residual, 0.0);
    EXPECT_EQ(w.scale, 0.0);
}

TEST(Coherent, EigenvectorAndResolution)
{
    const CVector vac = coherent_state(0.0, 10);
    EXPECT_EQ(vac(0), cplx(1.0));
    EXPECT_EQ(vac.tail(10).norm(), 0.0);

    const auto r40 = coherent_state_checks(40, {cplx(1.5, 0.0)}, 3.0, 2);
    EXPECT_LE(r40.eigen_residual, 1e-8);
    EXPECT_LE(r40.eigen_residual, 2.0 * r40.truncation_estimate + 1e-16);

    const auto r = coherent_state_checks(60, {0.0, cplx(1.5, 0.0), cplx(-0.4, 1.1)}, 6.0, 10);
    EXPECT_LE(r.resolution_low, 1e-6);
    EXPECT_LE(r.oracle_error, 1e-10);
    EXPECT_LE(r.off_diagonal, 1e-12);
    EXPECT_THROW(coherent_state_checks(10, {}, 1.0, 11), domain_error);
}

TEST(MatrixLocalization, DiagonalAndFullWindow)
{
    Matrix A = Matrix::Zero(5, 5);
    A.diagonal() << 3.0, -1.0, 2.0, 0.5, 4.0;
    Vector psi = Vector::Constant(5, 1.0 / std::sqrt(5.0));
    const auto d = matrix_localization_check(A, psi, 2, 0.0);
    EXPECT_DOUBLE_EQ(d.best_window_energy, -1.0);
    EXPECT_TRUE(d.ok);
    EXPECT_EQ(d.near_sum + d.far_sum, 0.0);

    const Matrix B = random_banded(12, 2, 5);
    const auto full = matrix_localization_check(B, ground_state(B), 12, 0.0);
    EXPECT_TRUE(full.ok);
    EXPECT_EQ(full.far_sum, 0.0);
    EXPECT_THROW(matrix_localization_check(B, ground_state(B), 13, 1.0), domain_error);
    EXPECT_THROW(matrix_localization_check(B, 2.0 * ground_state(B), 4, 1.0), domain_error);
}

TEST(MatrixLocalization, FrozenConstant)
{
    const auto fx = fixture("matrix_localization.json");
    const double C = fx["C_star"];
    const int N = fx["N"], Mp = fx["M_prime"];
    const std::uint64_t seed0 = fx["test_seed_start"];
    for (int t = 0; t < 100; ++t) {
        const auto r = pentadiagonal_trial(N, Mp, seed0 + t, C);
        EXPECT_TRUE(r.ok) << "seed " << seed0 + t << " needs C = " << r.required_C;
        EXPECT_GE(r.best_window_energy, r.lambda - 1e-12); // psi is the ground state
    }
}
