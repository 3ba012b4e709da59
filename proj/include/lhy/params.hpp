#pragma once

#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lhy/errors.hpp"

namespace lhy::params {

using Rational = boost::rational<long long>;

inline double to_double(Rational r) { return boost::rational_cast<double>(r); }

inline std::string to_string(Rational r)
{
    if (r.denominator() == 1)
        return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

// A quantity equal to X^q for the small parameter X < 1.  Only the exponent is
// stored, so products and powers are exact.
struct XMonomial {
    Rational q{0};

    double value(double X) const { return std::pow(X, to_double(q)); }

    friend XMonomial operator*(XMonomial a, XMonomial b) { return {a.q + b.q}; }
    friend XMonomial operator/(XMonomial a, XMonomial b) { return {a.q - b.q}; }
    friend bool operator==(XMonomial a, XMonomial b) { return a.q == b.q; }
};

inline XMonomial pow(XMonomial m, Rational r) { return {m.q * r}; }
inline XMonomial inv(XMonomial m) { return {-m.q}; }
// Logarithmic factors carry no X-exponent; the caller records a flag instead.
inline XMonomial log_factor(XMonomial) { return {}; }

// Natural logarithm of a positive number.  Used for the numeric twin because
// quantities such as X^323 underflow a double.
struct LogValue {
    double L{0.0};

    friend LogValue operator*(LogValue a, LogValue b) { return {a.L + b.L}; }
    friend LogValue operator/(LogValue a, LogValue b) { return {a.L - b.L}; }
};

inline LogValue pow(LogValue v, Rational r) { return {v.L * to_double(r)}; }
inline LogValue inv(LogValue v) { return {-v.L}; }
// 1 + log(x), floored at 1 so the factor never helps a condition
inline LogValue log_factor(LogValue x) { return {std::log1p(std::max(x.L, 0.0))}; }

template <class V>
struct ScheduleValues {
    V s, d, eps_T, K_ell, K_B, K_M, K_H_tilde;
    V rho_a3;
};

// Concrete floating-point parameters, as consumed by the energy modules.
struct NumericSchedule {
    double s = 0.1;
    double d = 1e-2;
    double eps_T = 1e-3;
    double K_ell = 1e2;
    double K_B = 1e2;
    double K_M = 1e1;
    double K_H_tilde = 1e1;
    int M = 30;
    double b = 1e-2;
};

struct ParameterSchedule {
    XMonomial s{1};
    XMonomial d{6};
    XMonomial eps_T{Rational(23, 4)};
    XMonomial K_ell{Rational(-3, 2)};
    XMonomial K_B{-6};
    XMonomial K_M{-1};
    XMonomial K_H_tilde{Rational(-8, 3)};
    // rho_mu a^3 = X^rho_exponent
    XMonomial rho_a3{323};
    int M = 30;
    double b = 1e-2;

    ScheduleValues<XMonomial> symbolic() const
    {
        return {s, d, eps_T, K_ell, K_B, K_M, K_H_tilde, rho_a3};
    }

    ScheduleValues<LogValue> logs(double X) const
    {
        if (!(X > 0.0 && X < 1.0))
            throw domain_error("schedule parameter X must lie in (0,1)");
        const double lx = std::log(X);
        auto lv = [lx](XMonomial m) { return LogValue{to_double(m.q) * lx}; };
        return {lv(s), lv(d), lv(eps_T), lv(K_ell), lv(K_B), lv(K_M), lv(K_H_tilde), lv(rho_a3)};
    }

    NumericSchedule at(double X) const
    {
        if (!(X > 0.0 && X < 1.0))
            throw domain_error("schedule parameter X must lie in (0,1)");
        return {s.value(X), d.value(X), eps_T.value(X), K_ell.value(X),
                K_B.value(X), K_M.value(X), K_H_tilde.value(X), M, b};
    }

    // X such that X^rho_exponent equals the given rho a^3
    double X_for(double rho_a3_value) const
    {
        if (!(rho_a3_value > 0.0 && rho_a3_value < 1.0))
            throw domain_error("rho a^3 must lie in (0,1)");
        return std::exp(std::log(rho_a3_value) / to_double(rho_a3.q));
    }
};

inline ParameterSchedule schedule_from_X() { return {}; }

template <class V>
struct ConditionTerm {
    std::string id;
    V lhs;
    V rhs;
    bool log_factor = false;
};

// Every condition reads lhs << rhs.  Conditions stated with >> are flipped.
// The square-root condition on the rough-bound quantities is raised to the
// fourth power so that each summand is a plain product; in that form its two
// delta_1 pieces coincide with con:rough1 and con:rough2.
template <class V>
std::vector<ConditionTerm<V>> condition_terms(const ScheduleValues<V>& p, int M, V R_over_a,
                                              V intv_over_a, bool with_logs = true)
{
    using R = Rational;
    const V one{};
    auto lf = [with_logs](V x) { return with_logs ? log_factor(x) : V{}; };
    const V& rho = p.rho_a3;
    const V ell_a = p.K_ell * pow(rho, R(-1, 2));
    const V rho_ell3 = pow(p.K_ell, 3) * pow(rho, R(-1, 2));
    const V Mcal = p.K_M * pow(rho, R(-1, 4));
    const V K_L = inv(p.K_ell * pow(p.d, 2));
    const V K_H = p.K_H_tilde * pow(rho, R(-5, 12));
    const V ds = p.d * p.s;

    std::vector<ConditionTerm<V>> c;
    c.push_back({"con:d5s", pow(p.d, -5) * pow(p.s, M + 1), one});
    c.push_back({"con:eTdK(1)", pow(p.d * p.K_ell, 2), p.eps_T * pow(p.K_ell, -2)});
    c.push_back({"con:eTdK(2)", p.eps_T * pow(p.K_ell, -2), p.eps_T});
    c.push_back({"con:eTdK(3)", p.eps_T, p.s * p.d * p.K_ell});
    c.push_back({"con:sKell", one, p.s * p.K_ell});
    c.push_back({"con:sdKellKB", inv(p.K_B), p.s * p.d * p.K_ell});
    c.push_back({"con:KB", p.K_B, pow(rho, R(-1, 6))});
    c.push_back({"con:KBKell", pow(p.K_B, 3) * pow(p.K_ell, 2), pow(rho, R(-1, 4))});
    c.push_back({"con:KMRKB", pow(p.K_M, -2) * intv_over_a, one});
    c.push_back({"con:KBellKM", pow(p.K_B, 3) * pow(p.K_ell, 5), Mcal});
    c.push_back({"con:M<<n", p.K_M * pow(p.K_ell, -3), pow(rho, R(-1, 4))});
    c.push_back({"con:KMKellKH", p.K_M * pow(p.K_ell, 4), pow(p.K_H_tilde, 3)});
    c.push_back({"con:KellKLd", pow(p.K_ell * K_L, 1 - M), pow(rho, R(1, 2))});
    c.push_back({"con:KLKH", K_L * p.K_H_tilde, pow(rho, R(-1, 12))});
    c.push_back({"con:rough1",
                 pow(p.K_ell, 8) * inv(rho_ell3) * Mcal * pow(K_L, 6) * pow(p.K_ell, 6), one});
    c.push_back({"con:rough2",
                 pow(p.K_ell, 8) * inv(rho_ell3) * pow(Mcal, 3) * pow(K_L, 6) *
                     pow(p.K_H_tilde, 4) * pow(rho, R(4, 3)),
                 one});
    c.push_back({"con:boghamerror",
                 p.K_M * pow(p.K_ell, R(-3, 2)) *
                     pow(p.K_ell * p.K_H_tilde * pow(rho, R(1, 12)), M - 5),
                 pow(rho, R(1, 2))});
    c.push_back({"con:KellKM", pow(K_L, 3) * p.K_M, pow(rho, R(-1, 4))});
    c.push_back({"con:KellKH", pow(p.K_ell, 2) * pow(p.K_H_tilde, 4) * pow(p.d, -6),
                 pow(rho, R(-1, 3))});
    c.push_back({"con:Q3error1", p.K_M * pow(p.K_ell, -3) * pow(p.K_H_tilde, -2),
                 pow(rho, R(-1, 12))});
    c.push_back({"con:Q3error3",
                 p.K_M * pow(p.K_ell, -3) * pow(p.d, -12) *
                     pow(pow(p.K_ell, -2) * pow(p.K_H_tilde, 2) * pow(rho, R(1, 6)), M - 1),
                 pow(rho, R(3, 4))});

    // rough-bound smallness, one entry per summand, as K_ell^8 * term^2 << 1
    const V K8 = pow(p.K_ell, 8);
    const V root = pow(Mcal / rho_ell3, R(1, 2));
    auto ncn = [&](const char* part, V term, bool log) {
        V lhs = K8 * pow(term, 2);
        if (log)
            lhs = lhs * pow(lf(ds * ell_a), 2);
        c.push_back({std::string("NewConditionNew(") + part + ")", lhs, one, log});
    };
    ncn("delta1a", root * pow(K_L, 3) * pow(p.K_H_tilde, 2) * pow(rho, R(2, 3)) * Mcal, false);
    ncn("delta1b", root * pow(K_L, 3) * pow(p.K_ell, 3), false);
    ncn("delta2a", pow(R_over_a / ell_a, 2), false);
    ncn("delta2b", inv(ds * ell_a), true);
    ncn("density", rho / (pow(p.K_ell, 6) * pow(ds, 6)), false);
    c.push_back({"NewConditionNew(quarter)", K8 * rho, one});

    c.push_back({"NewCondition", p.K_H_tilde / (ds * p.K_ell) * lf(K_H),
                 pow(rho, R(-1, 12)), true});
    c.push_back({"AssumptionK_R(1)", R_over_a,
                 pow(p.K_B, R(1, 2)) * pow(rho, R(1, 4)) * pow(rho, R(-1, 2))});
    c.push_back({"AssumptionK_R(2)", R_over_a / ell_a, pow(rho, R(1, 4))});
    c.push_back({"AssumptionK_R(3)", R_over_a, pow(rho, R(-1, 4))});
    c.push_back({"dKell", p.d * p.K_ell, one});
    return c;
}

struct ConditionEntry {
    std::string id;
    Rational lhs_exponent{0};
    Rational rhs_exponent{0};
    Rational margin{0};
    bool log_factor = false;
    bool pass = false;
    // margin changes when the density exponent changes
    bool density_dependent = false;
};

struct ConditionReport {
    std::vector<ConditionEntry> entries;
    Rational min_margin{0};
    std::vector<std::string> min_conditions;
    // first density-dependent condition attaining the minimum margin
    std::string binding_condition;
    bool all_pass = false;

    const ConditionEntry* find(const std::string& id) const
    {
        for (const auto& e : entries)
            if (e.id == id)
                return &e;
        return nullptr;
    }
};

struct ConditionInputs {
    int M = 30;
    // R/a = X^r_exponent and (int v)/a = X^intv_exponent
    Rational r_exponent{0};
    Rational intv_exponent{0};
};

inline ConditionReport check_conditions(const ParameterSchedule& sch, const ConditionInputs& in = {})
{
    if (sch.rho_a3.q <= 0)
        throw domain_error("rho a^3 must carry a positive X-exponent");
    const auto terms =
        condition_terms(sch.symbolic(), in.M, XMonomial{in.r_exponent}, XMonomial{in.intv_exponent});
    auto shifted = sch.symbolic();
    shifted.rho_a3.q += 1;
    const auto moved =
        condition_terms(shifted, in.M, XMonomial{in.r_exponent}, XMonomial{in.intv_exponent});

    ConditionReport rep;
    rep.all_pass = true;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        ConditionEntry e;
        e.id = t.id;
        e.lhs_exponent = t.lhs.q;
        e.rhs_exponent = t.rhs.q;
        e.margin = t.lhs.q - t.rhs.q;
        e.log_factor = t.log_factor;
        e.pass = e.margin > 0;
        e.density_dependent = (moved[i].lhs.q - moved[i].rhs.q) != e.margin;
        rep.all_pass = rep.all_pass && e.pass;
        rep.entries.push_back(e);
    }
    rep.min_margin = rep.entries.front().margin;
    for (const auto& e : rep.entries)
        rep.min_margin = std::min(rep.min_margin, e.margin);
    for (const auto& e : rep.entries) {
        if (e.margin != rep.min_margin)
            continue;
        rep.min_conditions.push_back(e.id);
        if (rep.binding_condition.empty() && e.density_dependent)
            rep.binding_condition = e.id;
    }
    if (rep.binding_condition.empty())
        rep.binding_condition = rep.min_conditions.front();
    return rep;
}

struct NumericConditionEntry {
    std::string id;
    double log_ratio = 0.0;     // log(f/g)
    double log_threshold = 0.0; // epsilon * log(rho a^3)
    double effective_margin = 0.0; // log(f/g) / log X
    bool log_factor = false;
    bool pass = false;
};

struct NumericConditionReport {
    double X = 0.0;
    double epsilon = 0.0;
    std::vector<NumericConditionEntry> entries;
    bool all_pass = false;
    std::string first_failure;
};

// Tests f/g <= (rho a^3)^epsilon in floating point.  Logarithmic factors are
// left out unless include_logs is set, mirroring the symbolic convention.
inline NumericConditionReport check_conditions_numeric(const ParameterSchedule& sch, double X,
                                                       double epsilon,
                                                       const ConditionInputs& in = {},
                                                       bool include_logs = false)
{
    if (!(epsilon > 0.0))
        throw domain_error("epsilon must be positive");
    const auto p = sch.logs(X);
    const double lx = std::log(X);
    const LogValue Ra{to_double(in.r_exponent) * lx};
    const LogValue iv{to_double(in.intv_exponent) * lx};
    const auto terms = condition_terms(p, in.M, Ra, iv, include_logs);
    NumericConditionReport rep;
    rep.X = X;
    rep.epsilon = epsilon;
    rep.all_pass = true;
    for (const auto& t : terms) {
        NumericConditionEntry e;
        e.id = t.id;
        e.log_ratio = t.lhs.L - t.rhs.L;
        e.log_threshold = epsilon * p.rho_a3.L;
        e.effective_margin = e.log_ratio / lx;
        e.log_factor = t.log_factor;
        e.pass = e.log_ratio <= e.log_threshold;
        if (!e.pass && rep.all_pass)
            rep.first_failure = e.id;
        rep.all_pass = rep.all_pass && e.pass;
        rep.entries.push_back(e);
    }
    return rep;
}

// Equalities displayed alongside some conditions: both sides must carry the
// same X-exponent for every schedule.
struct DisplayedIdentity {
    std::string id;
    Rational left{0};
    Rational right{0};
};

inline std::vector<DisplayedIdentity> displayed_identities(const ParameterSchedule& sch, int M)
{
    using R = Rational;
    const auto p = sch.symbolic();
    const auto& rho = p.rho_a3;
    const auto rho_ell3 = pow(p.K_ell, 3) * pow(rho, R(-1, 2));
    const auto Mcal = p.K_M * pow(rho, R(-1, 4));
    const auto K_L = inv(p.K_ell * pow(p.d, 2));
    std::vector<DisplayedIdentity> out;
    out.push_back({"con:rough1",
                   (pow(p.K_ell, 8) * inv(rho_ell3) * Mcal * pow(K_L, 6) * pow(p.K_ell, 6)).q,
                   (p.K_M * pow(p.K_ell, 5) * pow(p.d, -12) * pow(rho, R(1, 4))).q});
    out.push_back({"con:rough2",
                   (pow(p.K_ell, 8) * inv(rho_ell3) * pow(Mcal, 3) * pow(K_L, 6) *
                    pow(p.K_H_tilde, 4) * pow(rho, R(4, 3)))
                       .q,
                   (pow(p.K_M, 3) * pow(p.K_H_tilde, 4) * pow(p.K_ell, -1) * pow(p.d, -12) *
                    pow(rho, R(13, 12)))
                       .q});
    out.push_back({"con:KellKLd", pow(p.K_ell * K_L, 1 - M).q, pow(p.d, 2 * M - 2).q});
    out.push_back({"con:KLKH", (K_L * p.K_H_tilde).q,
                   (inv(p.K_ell * pow(p.d, 2)) * p.K_H_tilde).q});
    return out;
}

struct DerivedScales {
    double ell = 0.0;
    double d_ell = 0.0;
    double K_L = 0.0;
    double M_cutoff = 0.0;
    double K_H = 0.0;
    double delta = 0.0;
    double rho_ell3 = 0.0;
    bool excited_bound_below_particle_number = false;
    bool momentum_regions_disjoint = false;
};

inline DerivedScales derived_scales(const NumericSchedule& p, double rho, double a)
{
    const double y = rho * a * a * a;
    if (!(rho > 0.0 && a > 0.0 && y < 1.0))
        throw domain_error("derived scales need rho > 0, a > 0 and rho a^3 < 1");
    DerivedScales s;
    s.ell = p.K_ell / std::sqrt(rho * a);
    s.d_ell = p.d * s.ell;
    s.K_L = 1.0 / (p.K_ell * p.d * p.d);
    s.M_cutoff = p.K_M * std::pow(y, -0.25);
    s.K_H = p.K_H_tilde * std::pow(y, -5.0 / 12.0);
    s.delta = std::pow(y, 1.0 / 6.0) * p.K_H_tilde * p.K_H_tilde;
    s.rho_ell3 = rho * s.ell * s.ell * s.ell;
    s.excited_bound_below_particle_number = s.M_cutoff < s.rho_ell3;
    // low cutoff K_L sqrt(rho a) below high cutoff 1/(K_H a)
    s.momentum_regions_disjoint = s.K_L * std::sqrt(rho * a) < 1.0 / (s.K_H * a);
    return s;
}

} // namespace lhy::params
