#pragma once

#include <cmath>
#include <complex>
#include <functional>

#include "lhy/errors.hpp"
#include "lhy/localization.hpp"

namespace lhy {

using cplx = std::complex<double>;

struct ModeCoefficients {
    double A = 1.0;
    double B = 0.0;
    cplx kappa = 0.0;
};

struct DiagonalizedMode {
    double D = 0.0;
    double alpha = 0.0;
    cplx c0 = 0.0;
    double root = 0.0;         // sqrt(A^2 - B^2)
    double ground_shift = 0.0; // -(A - root) - 2|kappa|^2/(A+B), unit commutators
};

namespace detail {

// |B| slightly above A from rounding is pulled back to the boundary B = +-A
inline double admissible_B(double A, double B)
{
    if (!(A > 0.0) || !std::isfinite(A) || !std::isfinite(B))
        throw domain_error("Bogolubov coefficients need finite A > 0");
    if (std::abs(B) > A) {
        if (std::abs(B) - A <= 1e-12 * A)
            return std::copysign(A, B);
        throw domain_error("Bogolubov coefficients need |B| <= A");
    }
    return B;
}

} // namespace detail

inline DiagonalizedMode diagonalize(const ModeCoefficients& m)
{
    const double A = m.A;
    const double B = detail::admissible_B(A, m.B);
    if (B == -A)
        throw domain_error("Bogolubov coefficients: B = -A is not admissible");
    DiagonalizedMode out;
    // factored form keeps the root accurate as B -> A
    out.root = std::sqrt(A - B) * std::sqrt(A + B);
    out.D = 0.5 * (A + out.root);
    // (A - root)/B = B/(A + root), which is also fine at B = 0
    out.alpha = B / (A + out.root);
    out.c0 = 2.0 * std::conj(m.kappa) / (A + B + out.root);
    out.ground_shift = -(B * out.alpha) - 2.0 * std::norm(m.kappa) / (A + B);
    return out;
}

// tau(k) = (1-eps_T)[|k| - (2 s l)^-1]_+^2 + eps_T [|k| - (2 d s l)^-1]_+^2
struct CutoffKinetic {
    double eps_T = 0.0;
    double s = 1.0;
    double d = 1.0;
    double ell = INFINITY;

    double r1() const { return 1.0 / (2.0 * s * ell); }
    double r2() const { return 1.0 / (2.0 * d * s * ell); }

    double operator()(double k) const
    {
        k = std::abs(k);
        const double p1 = std::max(0.0, k - r1()), p2 = std::max(0.0, k - r2());
        return (1.0 - eps_T) * p1 * p1 + eps_T * p2 * p2;
    }

    // k^2 - tau(k), without cancellation at large k
    double deficit(double k) const
    {
        k = std::abs(k);
        auto part = [k](double r) { return k <= r ? k * k : r * (2.0 * k - r); };
        return (1.0 - eps_T) * part(r1()) + eps_T * part(r2());
    }
};

inline double tau(double k, const CutoffKinetic& kin) { return kin(k); }

struct ModeTriple {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
};

struct ModeDiagonal {
    double D = 0.0;
    double alpha = 0.0;
    double c = 0.0;
};

// Per-momentum coefficients of the quadratic Hamiltonian:
//   A = tau + rho_z W1hat, B = rho_z W1hat,
//   C = l^-3 (rho_z - rho_mu) W1hat(0) chihat_L(k) z,  chihat_L(k) = l^3 chihat(k l).
class BogolubovModel {
public:
    std::function<double(double)> W1hat;
    CutoffKinetic kinetic;
    const ChiFunction* chi = nullptr;
    double rho_z = 0.0;
    double rho_mu = 0.0;
    double z = 0.0;
    double a = 1.0;
    double K_H = INFINITY;

    ModeTriple coefficients(const Vec3& k) const
    {
        if (rho_z < 0.0 || z < 0.0)
            throw domain_error("mode coefficients need rho_z >= 0 and z >= 0");
        const double km = norm(k);
        const double w = W1hat(km);
        ModeTriple t;
        t.A = kinetic(km) + rho_z * w;
        t.B = rho_z * w;
        if (rho_z != rho_mu && z != 0.0) {
            if (!chi)
                throw domain_error("mode coefficients: C needs the localization function");
            const Vec3 kl{k[0] * kinetic.ell, k[1] * kinetic.ell, k[2] * kinetic.ell};
            t.C = (rho_z - rho_mu) * W1hat(0.0) * chi->hat(kl) * z;
        }
        return t;
    }

    ModeDiagonal diagonalized(const Vec3& k) const
    {
        const auto t = coefficients(k);
        const auto m = diagonalize({t.A, t.B, 0.0});
        ModeDiagonal out;
        out.D = m.D;
        out.alpha = m.alpha;
        if (norm(k) <= 0.5 / (K_H * a))
            out.c = 2.0 * t.C / (t.A + t.B + m.root);
        return out;
    }
};

} // namespace lhy
