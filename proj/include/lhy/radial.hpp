#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "lhy/errors.hpp"
#include "lhy/quadrature.hpp"

namespace lhy {

// Three-dimensional Fourier transform of a compactly supported radial
// function,  fhat(k) = (4 pi / k) int_0^R r f(r) sin(k r) dr.
//
// F(r) = r f(r) is replaced by a cubic on each cell of a piecewise uniform
// grid and the oscillatory integral against sin(kr) is done exactly, so large
// k costs the same as small k and stays accurate.
class RadialTransform {
public:
    using Fn = std::function<double(double)>;

    // breaks: increasing, breaks.front() == 0, breaks.back() == R; F smooth
    // between consecutive breaks.
    static RadialTransform from_rf(const Fn& F, std::vector<double> breaks, int cells = 2048)
    {
        RadialTransform t;
        t.build(F, std::move(breaks), cells);
        return t;
    }

    static RadialTransform from_f(const Fn& f, std::vector<double> breaks, int cells = 2048)
    {
        return from_rf([f](double r) { return r * f(r); }, std::move(breaks), cells);
    }

    static constexpr double small_k_threshold = 1e-4;

    double operator()(double k) const
    {
        if (k < 0.0)
            k = -k;
        if (k * R_ < small_k_threshold)
            return 4.0 * std::numbers::pi * (m0_ - k * k * m2_ / 6.0 + k * k * k * k * m4_ / 120.0);
        double s = 0.0;
        for (const auto& seg : segs_) {
            const auto mu = moments(k * seg.h);
            for (std::size_t c = 0; c < seg.coef.size(); ++c) {
                const auto& a = seg.coef[c];
                const std::complex<double> p = a[0] * mu[0] + a[1] * mu[1] + a[2] * mu[2] + a[3] * mu[3];
                const double x = seg.x0 + static_cast<double>(c) * seg.h;
                s += seg.h * (std::sin(k * x) * p.real() + std::cos(k * x) * p.imag());
            }
        }
        return 4.0 * std::numbers::pi * s / k;
    }

    std::vector<double> operator()(const std::vector<double>& ks) const
    {
        std::vector<double> out;
        out.reserve(ks.size());
        for (double k : ks)
            out.push_back((*this)(k));
        return out;
    }

    // 4 pi int r^2 f
    double at_zero() const { return 4.0 * std::numbers::pi * m0_; }
    // 4 pi int r^2 |f|
    double abs_integral() const { return 4.0 * std::numbers::pi * abs0_; }
    double range() const { return R_; }
    // F(R-) and the sum of |jumps| of F' at interior breaks; these set the
    // 1/k^2 and 1/k^3 terms of the large-k expansion.
    double end_value() const { return end_value_; }
    double end_slope() const { return end_slope_; }
    double slope_jumps() const { return slope_jumps_; }

    // value of the cubic model at r, for diagnostics
    double model(double r) const
    {
        for (const auto& seg : segs_) {
            const double x1 = seg.x0 + seg.h * static_cast<double>(seg.coef.size());
            if (r > x1)
                continue;
            std::size_t c = std::min<std::size_t>(seg.coef.size() - 1,
                                                  static_cast<std::size_t>((r - seg.x0) / seg.h));
            const double s = (r - seg.x0) / seg.h - static_cast<double>(c);
            const auto& a = seg.coef[c];
            return a[0] + s * (a[1] + s * (a[2] + s * a[3]));
        }
        return 0.0;
    }

private:
    struct Segment {
        double x0 = 0.0;
        double h = 0.0;
        std::vector<std::array<double, 4>> coef; // F(x0 + h(c+s)) = sum a_j s^j
    };

    std::vector<Segment> segs_;
    double R_ = 0.0;
    double m0_ = 0.0, m2_ = 0.0, m4_ = 0.0, abs0_ = 0.0;
    double end_value_ = 0.0, end_slope_ = 0.0, slope_jumps_ = 0.0;

    // mu_j(theta) = int_0^1 s^j e^{i theta s} ds
    static std::array<std::complex<double>, 4> moments(double th)
    {
        std::array<std::complex<double>, 4> mu{};
        const std::complex<double> I(0.0, 1.0);
        if (std::abs(th) < 1.0) {
            for (int j = 0; j < 4; ++j) {
                std::complex<double> term = 1.0, sum = 0.0;
                for (int n = 0; n < 40; ++n) {
                    sum += term / static_cast<double>(n + j + 1);
                    term *= I * th / static_cast<double>(n + 1);
                    if (std::abs(term) < 1e-18)
                        break;
                }
                mu[j] = sum;
            }
            return mu;
        }
        const std::complex<double> e = std::exp(I * th);
        mu[0] = (e - 1.0) / (I * th);
        for (int j = 1; j < 4; ++j)
            mu[j] = (e - static_cast<double>(j) * mu[j - 1]) / (I * th);
        return mu;
    }

    void build(const Fn& F, std::vector<double> breaks, int cells)
    {
        if (breaks.size() < 2 || breaks.front() != 0.0)
            throw domain_error("radial transform needs breakpoints starting at 0");
        for (std::size_t i = 1; i < breaks.size(); ++i)
            if (!(breaks[i] > breaks[i - 1]))
                throw domain_error("radial transform breakpoints must increase");
        R_ = breaks.back();

        // cubic through the four Chebyshev points of each cell; interior
        // nodes keep one-sided limits out of the fit
        std::array<double, 4> sn{};
        for (int j = 0; j < 4; ++j)
            sn[j] = 0.5 * (1.0 - std::cos((2 * j + 1) * std::numbers::pi / 8.0));
        const Eigen::Matrix4d Vinv = invert_vandermonde(sn);

        const auto& gl = quad::gauss_rule<8>();
        double prev_slope = 0.0;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            Segment seg;
            seg.x0 = breaks[i];
            const double len = breaks[i + 1] - breaks[i];
            const int n = std::max(16, static_cast<int>(std::ceil(cells * len / R_)));
            seg.h = len / n;
            seg.coef.resize(n);
            for (int c = 0; c < n; ++c) {
                std::array<double, 4> y{};
                for (int j = 0; j < 4; ++j)
                    y[j] = F(seg.x0 + seg.h * (c + sn[j]));
                for (int p = 0; p < 4; ++p) {
                    double v = 0.0;
                    for (int j = 0; j < 4; ++j)
                        v += Vinv(p, j) * y[j];
                    seg.coef[c][p] = v;
                }
                const auto& a = seg.coef[c];
                for (std::size_t q = 0; q < gl.x.size(); ++q) {
                    const double s = 0.5 * (gl.x[q] + 1.0);
                    const double r = seg.x0 + seg.h * (c + s);
                    const double Fv = a[0] + s * (a[1] + s * (a[2] + s * a[3]));
                    const double w = 0.5 * gl.w[q] * seg.h;
                    m0_ += w * r * Fv;
                    m2_ += w * r * r * r * Fv;
                    m4_ += w * r * r * r * r * r * Fv;
                    abs0_ += w * r * std::abs(Fv);
                }
            }
            const auto& first = seg.coef.front();
            const auto& last = seg.coef.back();
            const double slope_in = first[1] / seg.h;
            const double slope_out = (last[1] + 2 * last[2] + 3 * last[3]) / seg.h;
            if (i > 0)
                slope_jumps_ += std::abs(slope_in - prev_slope);
            prev_slope = slope_out;
            end_value_ = last[0] + last[1] + last[2] + last[3];
            end_slope_ = slope_out;
            segs_.push_back(std::move(seg));
        }
    }

    static Eigen::Matrix4d invert_vandermonde(const std::array<double, 4>& s)
    {
        Eigen::Matrix4d V;
        for (int j = 0; j < 4; ++j)
            for (int p = 0; p < 4; ++p)
                V(j, p) = std::pow(s[j], p);
        return V.inverse();
    }
};

} // namespace lhy
