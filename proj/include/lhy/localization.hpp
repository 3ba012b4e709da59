#pragma once

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/sinc.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <vector>

#include "lhy/errors.hpp"
#include "lhy/quadrature.hpp"

namespace lhy {

using Vec3 = std::array<double, 3>;

inline double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

// C_M = (4^M / binom(2M, M))^{3/2}, since int cos^{2M}(pi y) over [-1/2,1/2]
// equals binom(2M, M) / 4^M.
inline double chi_normalization(int M)
{
    if (M < 1)
        throw domain_error("localization power M must be >= 1");
    const double b = boost::math::binomial_coefficient<double>(2 * M, M);
    return std::pow(std::pow(4.0, M) / b, 1.5);
}

// chi(x) = C_M (zeta(x1) zeta(x2) zeta(x3))^M with zeta(y) = cos(pi y) on
// |y| <= 1/2.  Everything factorises over coordinates, so the class mostly
// works with the one-dimensional factor f(y) = C_M^{1/3} zeta(y)^M.
class ChiFunction {
public:
    explicit ChiFunction(int M, int table_points = 4096)
        : M_(M), C_(chi_normalization(M)), c13_(std::cbrt(C_))
    {
        if (table_points < 16)
            throw domain_error("self-convolution table needs at least 16 points");
        std::vector<double> vals(static_cast<std::size_t>(table_points));
        const double h = 1.0 / (table_points - 1);
        for (int i = 0; i < table_points; ++i)
            vals[static_cast<std::size_t>(i)] = selfconv_1d_direct(i * h);
        spline_ = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
            vals.begin(), vals.end(), 0.0, h, 0.0, 0.0);
    }

    int M() const { return M_; }
    int M_tilde() const { return M_ / 2; }
    double C_M() const { return C_; }

    static double zeta(double y) { return std::abs(y) <= 0.5 ? std::cos(std::numbers::pi * y) : 0.0; }

    double factor(double y) const
    {
        if (std::abs(y) > 0.5)
            return 0.0;
        return c13_ * std::pow(std::cos(std::numbers::pi * y), M_);
    }

    double operator()(const Vec3& x) const { return factor(x[0]) * factor(x[1]) * factor(x[2]); }

    // n-th derivative of the 1D factor inside (-1/2, 1/2), from
    // cos^M(t) = 2^-M sum_j binom(M,j) cos((M-2j) t).  Reliable for moderate M.
    double factor_derivative(int n, double y) const
    {
        if (std::abs(y) > 0.5)
            return 0.0;
        double s = 0.0;
        for (int j = 0; j <= M_; ++j) {
            const double w = (M_ - 2 * j) * std::numbers::pi;
            const double c = boost::math::binomial_coefficient<double>(M_, j);
            s += c * std::pow(w, n) * std::cos(w * y + n * std::numbers::pi / 2.0);
        }
        return c13_ * std::ldexp(s, -M_);
    }

    // first and second derivatives in closed form
    double factor_d1(double y) const
    {
        if (std::abs(y) >= 0.5)
            return 0.0;
        const double t = std::numbers::pi * y;
        return -c13_ * M_ * std::numbers::pi * std::pow(std::cos(t), M_ - 1) * std::sin(t);
    }

    double factor_d2(double y) const
    {
        if (std::abs(y) >= 0.5)
            return 0.0;
        const double t = std::numbers::pi * y;
        const double c = std::cos(t), s = std::sin(t);
        const double pm2 = (M_ >= 2) ? std::pow(c, M_ - 2) : 0.0;
        return c13_ * M_ * std::numbers::pi * std::numbers::pi * ((M_ - 1) * pm2 * s * s - std::pow(c, M_));
    }

    // int f(t) f(y - t) dt on the overlap, by 128-point Gauss-Legendre
    double selfconv_1d_direct(double y) const
    {
        y = std::abs(y);
        if (y >= 1.0)
            return 0.0;
        return quad::gauss<128>([this, y](double t) { return factor(t) * factor(y - t); }, y - 0.5, 0.5);
    }

    double selfconv_1d(double y) const
    {
        y = std::abs(y);
        if (y >= 1.0)
            return 0.0;
        return std::max(0.0, (*spline_)(y));
    }

    // (chi*chi)(y)
    double selfconv(const Vec3& y) const { return selfconv_1d(y[0]) * selfconv_1d(y[1]) * selfconv_1d(y[2]); }

    // int_{-1/2}^{1/2} cos^M(pi y) e^{-i kappa y} dy
    //   = M!/2^M sin(pi z) / (pi prod_{j=0}^M (z + j)),  z = (kappa/pi - M)/2,
    // evaluated with the factor nearest to a zero of the product cancelled
    // against sin(pi z), so the removable singularities are harmless.
    double factor_hat(double kappa) const
    {
        const double z = (std::abs(kappa) / std::numbers::pi - M_) / 2.0;
        const int jstar = std::clamp(static_cast<int>(std::lround(-z)), 0, M_);
        const double eps = z + jstar;
        // sin(pi z) / (z + j*) = (-1)^j* pi sinc(pi eps)
        double val = ((jstar % 2) ? -1.0 : 1.0) * boost::math::sinc_pi(std::numbers::pi * eps);
        for (int j = 0; j <= M_; ++j) {
            if (j == jstar)
                continue;
            val /= (z + j);
        }
        for (int j = 1; j <= M_; ++j)
            val *= 0.5 * j;
        return c13_ * val;
    }

    double hat(const Vec3& k) const { return factor_hat(k[0]) * factor_hat(k[1]) * factor_hat(k[2]); }

    // direct quadrature of the 1D transform, as a cross-check of factor_hat
    double factor_hat_quadrature(double kappa, int panels = 64) const
    {
        return quad::composite<20>([this, kappa](double y) { return factor(y) * std::cos(kappa * y); }, -0.5,
                                   0.5, panels);
    }

    // max over i, j of sup |d_i d_j chi|
    double max_second_derivative(int samples = 20001) const
    {
        double f0 = 0.0, f1 = 0.0, f2 = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double y = -0.5 + static_cast<double>(i) / (samples - 1);
            f0 = std::max(f0, std::abs(factor(y)));
            f1 = std::max(f1, std::abs(factor_d1(y)));
            f2 = std::max(f2, std::abs(factor_d2(y)));
        }
        return std::max(f2 * f0 * f0, f1 * f1 * f0);
    }

private:
    int M_;
    double C_;
    double c13_;
    std::shared_ptr<const boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

// Process-wide cache so repeated calls with the same M share one table.
inline const ChiFunction& chi_for(int M)
{
    static std::mutex mu;
    static std::map<int, std::unique_ptr<ChiFunction>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[M];
    if (!slot)
        slot = std::make_unique<ChiFunction>(M);
    return *slot;
}

inline double chi_selfconvolution(int M, const Vec3& y) { return chi_for(M).selfconv(y); }

// int chi^2 by tensor Gauss-Legendre on the cube, independent of C_M's formula
// except through chi itself.
inline double chi_square_integral(const ChiFunction& chi, int panels = 8)
{
    const auto& r = quad::gauss_rule<16>();
    std::vector<double> x, w;
    const double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            x.push_back(-0.5 + h * (p + 0.5 * (r.x[i] + 1.0)));
            w.push_back(0.5 * h * r.w[i]);
        }
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double c = chi({x[i], x[j], x[k]});
                s += w[i] * w[j] * w[k] * c * c;
            }
    return s;
}

// ---------------------------------------------------------------------------
// decay of chi-hat

struct DecayReport {
    double C_chi = 0.0;
    double max_ratio = 0.0;   // max over the grid of |chihat| / bound
    double worst_k = 0.0;
    std::size_t points = 0;
};

// C_chi = int |(1 - Delta)^{Mt} chi| with Mt = floor(M/2); the operator is
// expanded multinomially into products of even 1D derivatives.
inline double chi_decay_constant(const ChiFunction& chi, int panels = 8)
{
    const int Mt = chi.M_tilde();
    if (chi.M() > 16)
        throw domain_error("decay constant: derivative expansion is only reliable for M <= 16");
    const auto& r = quad::gauss_rule<16>();
    std::vector<double> x, w;
    const double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            x.push_back(-0.5 + h * (p + 0.5 * (r.x[i] + 1.0)));
            w.push_back(0.5 * h * r.w[i]);
        }
    const std::size_t n = x.size();
    // D[a][i] = (-1)^a f^{(2a)}(x_i)
    std::vector<std::vector<double>> D(static_cast<std::size_t>(Mt + 1), std::vector<double>(n));
    for (int a = 0; a <= Mt; ++a)
        for (std::size_t i = 0; i < n; ++i)
            D[static_cast<std::size_t>(a)][i] = ((a % 2) ? -1.0 : 1.0) * chi.factor_derivative(2 * a, x[i]);
    struct Term {
        double c;
        int a, b, e;
    };
    std::vector<Term> terms;
    for (int a = 0; a <= Mt; ++a)
        for (int b = 0; a + b <= Mt; ++b)
            for (int e = 0; a + b + e <= Mt; ++e) {
                const int z = Mt - a - b - e;
                const double c = std::tgamma(Mt + 1.0) /
                                 (std::tgamma(a + 1.0) * std::tgamma(b + 1.0) * std::tgamma(e + 1.0) *
                                  std::tgamma(z + 1.0));
                terms.push_back({c, a, b, e});
            }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                double v = 0.0;
                for (const auto& t : terms)
                    v += t.c * D[static_cast<std::size_t>(t.a)][i] * D[static_cast<std::size_t>(t.b)][j] *
                         D[static_cast<std::size_t>(t.e)][k];
                s += w[i] * w[j] * w[k] * std::abs(v);
            }
    return s;
}

// Checks |chihat(k)| <= C_chi (1+|k|^2)^{-Mt} at the given wave vectors.
inline DecayReport chihat_decay_check(const ChiFunction& chi, const std::vector<Vec3>& ks, bool throw_on_violation = true)
{
    if (chi.M() < 4)
        throw domain_error("decay check needs M >= 4");
    DecayReport rep;
    rep.C_chi = chi_decay_constant(chi);
    for (const auto& k : ks) {
        const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        const double bound = rep.C_chi * std::pow(1.0 + k2, -chi.M_tilde());
        const double ratio = std::abs(chi.hat(k)) / bound;
        if (ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.worst_k = std::sqrt(k2);
        }
        ++rep.points;
    }
    if (throw_on_violation && rep.max_ratio > 1.0)
        throw invariant_failure("chi-hat decay bound violated");
    return rep;
}

// log-spaced wave vectors along the axis, a face diagonal and the body diagonal
inline std::vector<Vec3> decay_grid(double kmin, double kmax, int per_direction)
{
    std::vector<Vec3> out{{0.0, 0.0, 0.0}};
    const Vec3 dirs[] = {{1, 0, 0}, {1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0}, {1 / std::sqrt(3.0), 1 / std::sqrt(3.0), 1 / std::sqrt(3.0)}};
    for (const auto& d : dirs)
        for (int i = 0; i < per_direction; ++i) {
            const double k = kmin * std::pow(kmax / kmin, static_cast<double>(i) / (per_direction - 1));
            out.push_back({k * d[0], k * d[1], k * d[2]});
        }
    return out;
}

// Envelope of |f-hat| over one oscillation window starting at kappa.
inline double factor_hat_envelope(const ChiFunction& chi, double kappa)
{
    double m = 0.0;
    for (int i = 0; i <= 256; ++i)
        m = std::max(m, std::abs(chi.factor_hat(kappa + 2.0 * std::numbers::pi * i / 256.0)));
    return m;
}

// log2 of envelope(2 kappa) / envelope(kappa) along an axis
inline double chihat_doubling_slope(const ChiFunction& chi, double kappa)
{
    return std::log2(factor_hat_envelope(chi, 2.0 * kappa) / factor_hat_envelope(chi, kappa));
}

// ---------------------------------------------------------------------------
// convolution with the large-box localization function

struct RadialFunction {
    std::function<double(double)> f; // f(r), r >= 0
    std::vector<double> breaks;      // 0 = r_0 < ... < r_n = R
};

struct ConvolutionReport {
    double bound = 0.0;    // max |d_i d_j chi| (R/l)^2 int |f|
    double observed = 0.0; // max over samples of |f*chi_L - chi_L int f|
    double margin = 0.0;   // bound / observed
    double int_f = 0.0;
    double int_abs_f = 0.0;
};

// f * chi_L(x) - chi_L(x) int f, in spherical coordinates around x
inline double convolution_defect(const RadialFunction& f, const ChiFunction& chi, double ell, const Vec3& x)
{
    const auto& gr = quad::gauss_rule<16>();
    const auto& ga = quad::gauss_rule<24>();
    const int nphi = 48;
    const Vec3 xs{x[0] / ell, x[1] / ell, x[2] / ell};
    const double c0 = chi(xs);
    double s = 0.0;
    for (std::size_t b = 0; b + 1 < f.breaks.size(); ++b) {
        const double lo = f.breaks[b], hi = f.breaks[b + 1];
        const int panels = 4;
        const double h = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < gr.x.size(); ++i) {
                const double r = lo + h * (p + 0.5 * (gr.x[i] + 1.0));
                const double wr = 0.5 * h * gr.w[i] * r * r * f.f(r);
                if (wr == 0.0)
                    continue;
                double ang = 0.0;
                for (std::size_t m = 0; m < ga.x.size(); ++m) {
                    const double mu = ga.x[m];
                    const double st = std::sqrt(1.0 - mu * mu);
                    for (int q = 0; q < nphi; ++q) {
                        const double ph = 2.0 * std::numbers::pi * q / nphi;
                        const Vec3 y{xs[0] - r * st * std::cos(ph) / ell, xs[1] - r * st * std::sin(ph) / ell,
                                     xs[2] - r * mu / ell};
                        ang += ga.w[m] * (chi(y) - c0);
                    }
                }
                s += wr * ang * 2.0 * std::numbers::pi / nphi;
            }
    }
    return s;
}

inline double radial_integral(const RadialFunction& f, bool absolute)
{
    double s = 0.0;
    for (std::size_t b = 0; b + 1 < f.breaks.size(); ++b)
        s += quad::composite<16>(
            [&](double r) {
                const double v = f.f(r);
                return r * r * (absolute ? std::abs(v) : v);
            },
            f.breaks[b], f.breaks[b + 1], 8);
    return 4.0 * std::numbers::pi * s;
}

inline ConvolutionReport convolution_bound_check(const RadialFunction& f, const ChiFunction& chi, double ell,
                                                 const std::vector<Vec3>& samples,
                                                 bool throw_on_violation = true)
{
    ConvolutionReport rep;
    const double R = f.breaks.back();
    rep.int_f = radial_integral(f, false);
    rep.int_abs_f = radial_integral(f, true);
    rep.bound = chi.max_second_derivative() * (R / ell) * (R / ell) * rep.int_abs_f;
    for (const auto& x : samples)
        rep.observed = std::max(rep.observed, std::abs(convolution_defect(f, chi, ell, x)));
    rep.margin = rep.observed > 0.0 ? rep.bound / rep.observed : INFINITY;
    if (throw_on_violation && rep.observed > rep.bound)
        throw invariant_failure("convolution bound violated");
    return rep;
}

// ---------------------------------------------------------------------------
// small boxes B(u) = Lambda cap (d l u + [-dl/2, dl/2]^3)

struct BoxGeometry {
    double ell = 1.0;
    double d = 0.25;
    Vec3 u{0.0, 0.0, 0.0};

    // side lengths, sorted ascending
    std::array<double, 3> lambda() const
    {
        std::array<double, 3> s{};
        for (int i = 0; i < 3; ++i) {
            const double lo = std::max(-ell / 2, d * ell * u[i] - d * ell / 2);
            const double hi = std::min(ell / 2, d * ell * u[i] + d * ell / 2);
            s[i] = std::max(0.0, hi - lo);
        }
        std::sort(s.begin(), s.end());
        return s;
    }

    void validate() const
    {
        if (!(d > 0.0 && d <= 1.0))
            throw domain_error("box geometry: d must lie in (0,1]");
        if (!(ell > 0.0))
            throw domain_error("box geometry: ell must be positive");
        if (lambda()[0] <= 0.0)
            throw domain_error("box geometry: small box does not meet the large box");
    }
};

struct SmallBoxReport {
    double sup = 0.0;            // sup chi_B
    double sup_over_CM2 = 0.0;   // sup / C_M^2
    double general_ratio = 0.0;  // sup / (C_M^2 (l1/(d l))^M)
    double special_ratio = 0.0;  // sup / (C_M^2 (l1/l)^M), meaningful when l1 < d l
    double derivative_ratio = 0.0; // max|d_i d_j chi_B| l1^2 |B| / int chi_B
    double lambda1 = 0.0;
};

// chi_B = C_M^2 prod_i h_i(x_i)^M with h_i(t) = zeta(t/l) zeta(t/(d l) - u_i)
inline SmallBoxReport small_box_chi_bounds(const BoxGeometry& geom, int M, int samples = 4001)
{
    geom.validate();
    const double ell = geom.ell, dl = geom.d * geom.ell;
    const double CM = chi_normalization(M);
    const double pi = std::numbers::pi;
    struct Axis {
        double sup0 = 0.0, sup1 = 0.0, sup2 = 0.0, integral = 0.0, length = 0.0;
    };
    auto axis = [&](double u) {
        Axis ax;
        const double lo = std::max(-ell / 2, dl * u - dl / 2);
        const double hi = std::min(ell / 2, dl * u + dl / 2);
        ax.length = hi - lo;
        auto H = [&](double t, double& d1, double& d2) {
            const double a1 = pi * t / ell, a2 = pi * (t / dl - u);
            const double z1 = std::cos(a1), z2 = std::cos(a2);
            const double z1p = -pi / ell * std::sin(a1), z2p = -pi / dl * std::sin(a2);
            const double z1pp = -pi * pi / (ell * ell) * z1, z2pp = -pi * pi / (dl * dl) * z2;
            const double h = z1 * z2, hp = z1p * z2 + z1 * z2p, hpp = z1pp * z2 + 2 * z1p * z2p + z1 * z2pp;
            const double hm1 = (M >= 1) ? std::pow(h, M - 1) : 0.0;
            const double hm2 = (M >= 2) ? std::pow(h, M - 2) : 0.0;
            d1 = M * hm1 * hp;
            d2 = M * (M - 1) * hm2 * hp * hp + M * hm1 * hpp;
            return std::pow(h, M);
        };
        for (int i = 0; i < samples; ++i) {
            const double t = lo + ax.length * i / (samples - 1);
            double d1, d2;
            const double v = H(t, d1, d2);
            ax.sup0 = std::max(ax.sup0, v);
            ax.sup1 = std::max(ax.sup1, std::abs(d1));
            ax.sup2 = std::max(ax.sup2, std::abs(d2));
        }
        ax.integral = quad::composite<20>([&](double t) {
            double d1, d2;
            return H(t, d1, d2);
        }, lo, hi, 16);
        return ax;
    };
    std::array<Axis, 3> ax{axis(geom.u[0]), axis(geom.u[1]), axis(geom.u[2])};
    SmallBoxReport rep;
    const auto lam = geom.lambda();
    rep.lambda1 = lam[0];
    rep.sup = CM * CM * ax[0].sup0 * ax[1].sup0 * ax[2].sup0;
    rep.sup_over_CM2 = rep.sup / (CM * CM);
    rep.general_ratio = rep.sup_over_CM2 / std::pow(lam[0] / dl, M);
    rep.special_ratio = rep.sup_over_CM2 / std::pow(lam[0] / ell, M);
    double d2max = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double v = CM * CM;
            for (int c = 0; c < 3; ++c) {
                int order = (c == i) + (c == j);
                v *= order == 0 ? ax[c].sup0 : order == 1 ? ax[c].sup1 : ax[c].sup2;
            }
            d2max = std::max(d2max, v);
        }
    const double volume = ax[0].length * ax[1].length * ax[2].length;
    const double integral = CM * CM * ax[0].integral * ax[1].integral * ax[2].integral;
    rep.derivative_ratio = d2max * lam[0] * lam[0] * volume / integral;
    return rep;
}

// Offset u that puts one side of B(u) at length lambda1 against the face x1 = l/2.
inline BoxGeometry boundary_box(double ell, double d, double lambda1)
{
    BoxGeometry g;
    g.ell = ell;
    g.d = d;
    // right edge of the small box beyond l/2 so that l/2 - left = lambda1
    const double left = ell / 2 - lambda1;
    g.u = {(left + d * ell / 2) / (d * ell), 0.0, 0.0};
    return g;
}

// ---------------------------------------------------------------------------
// sliding localization of the potential

struct SlidingReport {
    double max_residual = 0.0; // relative to v(x-y)
    std::size_t pairs = 0;
};

// int chi_u(x) chi_u(y) du over u in R^3, by tensor Gauss-Legendre on the
// box where both factors are supported.  Independent of the cached table.
inline double sliding_overlap(const ChiFunction& chi, double ell, const Vec3& x, const Vec3& y, int panels = 4)
{
    const auto& r = quad::gauss_rule<24>();
    std::array<std::vector<double>, 3> fx, fy, w;
    for (int c = 0; c < 3; ++c) {
        const double xs = x[c] / ell, ys = y[c] / ell;
        const double lo = std::max(xs, ys) - 0.5, hi = std::min(xs, ys) + 0.5;
        if (!(hi > lo))
            return 0.0;
        const double h = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < r.x.size(); ++i) {
                const double u = lo + h * (p + 0.5 * (r.x[i] + 1.0));
                fx[c].push_back(xs - u);
                fy[c].push_back(ys - u);
                w[c].push_back(0.5 * h * r.w[i]);
            }
    }
    const std::size_t n = w[0].size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                const Vec3 a{fx[0][i], fx[1][j], fx[2][k]};
                const Vec3 b{fy[0][i], fy[1][j], fy[2][k]};
                s += w[0][i] * w[1][j] * w[2][k] * chi(a) * chi(b);
            }
    return s;
}

// W(x) = v(x) / (chi*chi)(x/l); checks int chi_u(x) W(x-y) chi_u(y) du = v(x-y).
template <class Potential>
SlidingReport sliding_identity_check(const Potential& v, double R, const ChiFunction& chi, double ell,
                                     const std::vector<std::pair<Vec3, Vec3>>& pairs, int panels = 4)
{
    if (!(R <= ell))
        throw domain_error("sliding identity needs R <= ell");
    SlidingReport rep;
    for (const auto& [x, y] : pairs) {
        const Vec3 z{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
        const double vz = v(norm(z));
        const double cc = chi.selfconv({z[0] / ell, z[1] / ell, z[2] / ell});
        const double W = (vz == 0.0) ? 0.0 : vz / cc;
        const double lhs = W * sliding_overlap(chi, ell, x, y, panels);
        const double res = (vz == 0.0) ? std::abs(lhs) : std::abs(lhs - vz) / vz;
        rep.max_residual = std::max(rep.max_residual, res);
        ++rep.pairs;
    }
    return rep;
}

// random pairs in the box [-l/2, l/2]^3 with |x - y| <= R
inline std::vector<std::pair<Vec3, Vec3>> random_pairs(std::size_t n, double ell, double R, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-ell / 2, ell / 2), unit(-1.0, 1.0), rad(0.0, 1.0);
    std::vector<std::pair<Vec3, Vec3>> out;
    while (out.size() < n) {
        Vec3 x{box(rng), box(rng), box(rng)};
        Vec3 d{unit(rng), unit(rng), unit(rng)};
        const double nd = norm(d);
        if (nd < 1e-3 || nd > 1.0)
            continue;
        const double r = R * std::cbrt(rad(rng));
        out.push_back({x, {x[0] + r * d[0] / nd, x[1] + r * d[1] / nd, x[2] + r * d[2] / nd}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// the kinetic localization multiplier
//   H(p) = (2 pi)^-3 b d^-2 int_{|q| > d^-2} (th(p) th(q) - th(q - p))^2 dq,
// th(q) = prod 2 sin(q_i/2)/q_i.  Over all of R^3 the integral equals
// (2 pi)^3 (1 - th(p)^2) by Parseval, so only the ball |q| < d^-2 is
// integrated numerically and subtracted.

namespace detail {

inline double sfun(double t) { return std::abs(t) < 1e-8 ? 1.0 - t * t / 24.0 : 2.0 * std::sin(0.5 * t) / t; }

// Cumulative integrals of s(t)^2, s(t) s(t-p), s(t-p)^2 over [-L, x].
class CumulativeTables {
public:
    CumulativeTables(double L, double p, double h_target = 0.05) : L_(L), p_(p)
    {
        n_ = std::max(64, static_cast<int>(std::ceil(2 * L / h_target)));
        h_ = 2 * L / n_;
        for (auto& c : cum_)
            c.assign(static_cast<std::size_t>(n_ + 1), 0.0);
        for (int i = 0; i < n_; ++i) {
            const auto v = cell(-L + i * h_, -L + (i + 1) * h_);
            for (int k = 0; k < 3; ++k)
                cum_[k][static_cast<std::size_t>(i + 1)] = cum_[k][static_cast<std::size_t>(i)] + v[k];
        }
    }

    // integrals over [-r, r]
    std::array<double, 3> symmetric(double r) const
    {
        const auto hi = at(r), lo = at(-r);
        return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]};
    }

private:
    double L_, p_, h_;
    int n_;
    std::array<std::vector<double>, 3> cum_;

    std::array<double, 3> integrand(double t) const
    {
        const double a = sfun(t), b = sfun(t - p_);
        return {a * a, a * b, b * b};
    }

    std::array<double, 3> cell(double lo, double hi) const
    {
        const auto& r = quad::gauss_rule<10>();
        std::array<double, 3> s{};
        const double c = 0.5 * (lo + hi), w = 0.5 * (hi - lo);
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            const auto f = integrand(c + w * r.x[i]);
            for (int k = 0; k < 3; ++k)
                s[k] += r.w[i] * w * f[k];
        }
        return s;
    }

    std::array<double, 3> at(double x) const
    {
        x = std::clamp(x, -L_, L_);
        int i = std::min(n_ - 1, static_cast<int>((x + L_) / h_));
        const double lo = -L_ + i * h_;
        const auto part = cell(lo, x);
        return {cum_[0][static_cast<std::size_t>(i)] + part[0], cum_[1][static_cast<std::size_t>(i)] + part[1],
                cum_[2][static_cast<std::size_t>(i)] + part[2]};
    }
};

} // namespace detail

struct KineticMultiplier {
    double H = 0.0;
    double full_space = 0.0; // (2 pi)^3 (1 - th(p)^2)
    double ball = 0.0;       // integral over |q| < d^-2
};

inline KineticMultiplier kinetic_multiplier_H(const Vec3& p, double b, double d)
{
    if (!(d > 0.0 && d < 1.0))
        throw domain_error("kinetic multiplier: d must lie in (0,1)");
    const double L = 1.0 / (d * d);
    const double pi = std::numbers::pi;
    const double thp = detail::sfun(p[0]) * detail::sfun(p[1]) * detail::sfun(p[2]);
    KineticMultiplier out;
    out.full_space = 8.0 * pi * pi * pi * (1.0 - thp * thp);
    if (p[0] == 0.0 && p[1] == 0.0 && p[2] == 0.0)
        return out; // integrand vanishes identically

    const detail::CumulativeTables T(L, p[2]);
    // q1 = L sin(a), q2 = r1 sin(b): the substitutions absorb the square-root
    // endpoints of the ball
    const int panels = std::max(24, static_cast<int>(std::ceil(L / 1.5)));
    const auto& r = quad::gauss_rule<12>();
    std::vector<double> ang, wang;
    const double h = pi / panels;
    for (int q = 0; q < panels; ++q)
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            ang.push_back(-pi / 2 + h * (q + 0.5 * (r.x[i] + 1.0)));
            wang.push_back(0.5 * h * r.w[i]);
        }
    double s = 0.0;
    for (std::size_t i = 0; i < ang.size(); ++i) {
        const double q1 = L * std::sin(ang[i]);
        const double r1 = L * std::cos(ang[i]);
        const double a1 = detail::sfun(q1), c1 = detail::sfun(q1 - p[0]);
        double inner = 0.0;
        for (std::size_t j = 0; j < ang.size(); ++j) {
            const double q2 = r1 * std::sin(ang[j]);
            const double r2 = r1 * std::cos(ang[j]);
            const double a2 = detail::sfun(q2), c2 = detail::sfun(q2 - p[1]);
            const auto t = T.symmetric(r2);
            const double v = thp * thp * a1 * a1 * a2 * a2 * t[0] - 2.0 * thp * a1 * c1 * a2 * c2 * t[1] +
                             c1 * c1 * c2 * c2 * t[2];
            inner += wang[j] * r1 * std::cos(ang[j]) * v;
        }
        s += wang[i] * L * std::cos(ang[i]) * inner;
    }
    out.ball = s;
    out.H = b / (d * d) * (out.full_space - out.ball) / (8.0 * pi * pi * pi);
    return out;
}

struct MultiplierFit {
    double C = 0.0;          // max H / (b min(|p|^2, d^-2))
    double min_ratio = 0.0;
    std::vector<double> p, ratio;
};

// sweep |p| over [pmin, pmax] d^-1 along direction dir
inline MultiplierFit fit_kinetic_multiplier(double b, double d, const Vec3& dir, int points = 13,
                                            double pmin = 1e-2, double pmax = 1e2)
{
    MultiplierFit fit;
    fit.min_ratio = INFINITY;
    const double nd = norm(dir);
    for (int i = 0; i < points; ++i) {
        const double pm = pmin * std::pow(pmax / pmin, static_cast<double>(i) / (points - 1)) / d;
        const Vec3 p{pm * dir[0] / nd, pm * dir[1] / nd, pm * dir[2] / nd};
        const double H = kinetic_multiplier_H(p, b, d).H;
        const double ref = b * std::min(pm * pm, 1.0 / (d * d));
        fit.p.push_back(pm);
        fit.ratio.push_back(H / ref);
        fit.C = std::max(fit.C, H / ref);
        fit.min_ratio = std::min(fit.min_ratio, H / ref);
    }
    return fit;
}

} // namespace lhy
