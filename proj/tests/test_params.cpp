#include <gtest/gtest.h>

#include "lhy/params.hpp"

#include <cmath>
#include <random>

using namespace lhy::params;

namespace {

Rational margin_of(const ConditionReport& r, const std::string& id)
{
    const auto* e = r.find(id);
    EXPECT_NE(e, nullptr) << id;
    return e ? e->margin : Rational(0);
}

} // namespace

TEST(Schedule, ExponentsOfTheXSchedule)
{
    const auto s = schedule_from_X();
    EXPECT_EQ(s.s.q, Rational(1));
    EXPECT_EQ(s.d.q, Rational(6));
    EXPECT_EQ(s.eps_T.q, Rational(23, 4));
    EXPECT_EQ(s.K_ell.q, Rational(-3, 2));
    EXPECT_EQ(s.K_B.q, Rational(-6));
    EXPECT_EQ(s.K_M.q, Rational(-1));
    EXPECT_EQ(s.K_H_tilde.q, Rational(-8, 3));
    EXPECT_EQ(s.rho_a3.q, Rational(323));
    EXPECT_EQ((s.d * s.K_ell).q, Rational(9, 2));
}

TEST(Schedule, XFromDensity)
{
    const auto s = schedule_from_X();
    // 1e-323 itself is subnormal, so check the relation at a representable point
    EXPECT_NEAR(s.X_for(1e-200), std::pow(10.0, -200.0 / 323.0), 1e-14);
    EXPECT_THROW(s.at(1.0), lhy::domain_error);
    EXPECT_THROW(s.at(0.0), lhy::domain_error);
}

TEST(Conditions, FrozenMarginsAtM30)
{
    const auto rep = check_conditions(schedule_from_X(), {});
    EXPECT_TRUE(rep.all_pass);
    const std::pair<const char*, Rational> expected[] = {
        {"con:d5s", 1},
        {"con:eTdK(1)", Rational(1, 4)},
        {"con:eTdK(2)", 3},
        {"con:eTdK(3)", Rational(1, 4)},
        {"con:sKell", Rational(1, 2)},
        {"con:sdKellKB", Rational(1, 2)},
        {"con:KB", Rational(287, 6)},
        {"con:KBKell", Rational(239, 4)},
        {"con:KMRKB", 2},
        {"con:KBellKM", Rational(225, 4)},
        {"con:M<<n", Rational(337, 4)},
        {"con:KMKellKH", 1},
        {"con:KellKLd", Rational(373, 2)},
        {"con:KLKH", Rational(55, 4)},
        {"con:rough1", Rational(1, 4)},
        {"con:rough2", Rational(1063, 4)},
        {"con:boghamerror", Rational(817, 2)},
        {"con:KellKM", Rational(193, 4)},
        {"con:KellKH", 58},
        {"con:Q3error1", Rational(143, 4)},
        {"con:Q3error3", Rational(4731, 4)},
        {"NewConditionNew(delta1a)", Rational(1063, 4)},
        {"NewConditionNew(delta1b)", Rational(1, 4)},
        {"NewCondition", Rational(75, 4)},
        {"AssumptionK_R(1)", Rational(335, 4)},
        {"AssumptionK_R(2)", Rational(329, 4)},
        {"AssumptionK_R(3)", Rational(323, 4)},
        {"dKell", Rational(9, 2)},
    };
    for (const auto& [id, m] : expected)
        EXPECT_EQ(margin_of(rep, id), m) << id << " got " << to_string(margin_of(rep, id));
}

TEST(Conditions, MinimumIsQuarterAndBindsAtRough1)
{
    const auto rep = check_conditions(schedule_from_X(), {});
    EXPECT_EQ(rep.min_margin, Rational(1, 4));
    EXPECT_EQ(rep.binding_condition, "con:rough1");
    // the inequality chain shares the minimum but does not involve the density
    EXPECT_FALSE(rep.find("con:eTdK(1)")->density_dependent);
    EXPECT_TRUE(rep.find("con:rough1")->density_dependent);
    EXPECT_EQ(rep.min_conditions.size(), 4u);
}

TEST(Conditions, M29FailsD5s)
{
    ConditionInputs in;
    in.M = 29;
    const auto rep = check_conditions(schedule_from_X(), in);
    EXPECT_FALSE(rep.all_pass);
    EXPECT_EQ(margin_of(rep, "con:d5s"), Rational(0));
    EXPECT_FALSE(rep.find("con:d5s")->pass);
}

TEST(Conditions, DisplayedEqualitiesAreExact)
{
    for (int M : {2, 17, 30, 41})
        for (const auto& id : displayed_identities(schedule_from_X(), M))
            EXPECT_EQ(id.left, id.right) << id.id << " M=" << M;
}

TEST(Conditions, RoughBoundPiecesMatchRoughConditions)
{
    const auto rep = check_conditions(schedule_from_X(), {});
    EXPECT_EQ(margin_of(rep, "NewConditionNew(delta1b)"), margin_of(rep, "con:rough1"));
    EXPECT_EQ(margin_of(rep, "NewConditionNew(delta1a)"), margin_of(rep, "con:rough2"));
}

TEST(Conditions, RangeExponentShiftsAssumptionMargins)
{
    ConditionInputs in;
    in.r_exponent = Rational(-90);
    const auto rep = check_conditions(schedule_from_X(), in);
    EXPECT_EQ(margin_of(rep, "AssumptionK_R(3)"), Rational(323, 4) - 90);
    EXPECT_FALSE(rep.find("AssumptionK_R(3)")->pass);
}

TEST(Conditions, PassIffPositiveMarginOnRandomSchedules)
{
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> num(-40, 40), den(1, 12);
    for (int trial = 0; trial < 200; ++trial) {
        ParameterSchedule s;
        s.s = {Rational(num(rng), den(rng))};
        s.d = {Rational(num(rng), den(rng))};
        s.K_ell = {Rational(num(rng), den(rng))};
        const auto rep = check_conditions(s, {});
        bool all = true;
        for (const auto& e : rep.entries) {
            EXPECT_EQ(e.pass, e.margin > 0);
            all = all && e.pass;
            EXPECT_GE(e.margin, rep.min_margin);
        }
        EXPECT_EQ(all, rep.all_pass);
    }
}

TEST(NumericTwin, AgreesWithSymbolicBelowSmallestMargin)
{
    const auto sym = check_conditions(schedule_from_X(), {});
    const double eps = 0.5 * boost::rational_cast<double>(sym.min_margin) / 323.0;
    for (double X : {0.9, 0.5, 0.1}) {
        const auto num = check_conditions_numeric(schedule_from_X(), X, eps);
        ASSERT_EQ(num.entries.size(), sym.entries.size());
        for (std::size_t i = 0; i < num.entries.size(); ++i) {
            EXPECT_EQ(num.entries[i].pass, sym.entries[i].pass) << sym.entries[i].id << " X=" << X;
            EXPECT_NEAR(num.entries[i].effective_margin, to_double(sym.entries[i].margin), 1e-9);
        }
    }
}

TEST(NumericTwin, LargeEpsilonFlipsTheQuarterMarginsFirst)
{
    const double eps = 0.3 / 323.0;
    const auto num = check_conditions_numeric(schedule_from_X(), 0.5, eps);
    EXPECT_FALSE(num.all_pass);
    for (const auto& e : num.entries) {
        const bool quarter = e.id == "con:rough1" || e.id == "con:eTdK(1)" ||
                             e.id == "con:eTdK(3)" || e.id == "NewConditionNew(delta1b)";
        EXPECT_EQ(e.pass, !quarter) << e.id;
    }
    EXPECT_TRUE(check_conditions_numeric(schedule_from_X(), 0.5, 1e-4).all_pass);
    EXPECT_THROW(check_conditions_numeric(schedule_from_X(), 1.0, 1e-4), lhy::domain_error);
}

TEST(DerivedScales, DefiningFormulas)
{
    const auto sch = schedule_from_X();
    const double y = 1e-8;
    const double X = sch.X_for(y);
    const auto p = sch.at(X);
    const auto ds = derived_scales(p, y, 1.0);
    EXPECT_NEAR(ds.ell, std::pow(X, -1.5) / std::sqrt(y), 1e-9 * ds.ell);
    EXPECT_NEAR(ds.K_L, 1.0 / (p.K_ell * p.d * p.d), 1e-9 * ds.K_L);
    EXPECT_NEAR(ds.M_cutoff, p.K_M * std::pow(y, -0.25), 1e-9 * ds.M_cutoff);
    EXPECT_NEAR(ds.delta, std::pow(y, 1.0 / 6.0) * p.K_H_tilde * p.K_H_tilde, 1e-12);

    NumericSchedule flat = p;
    flat.d = 1.0;
    EXPECT_NEAR(derived_scales(flat, y, 1.0).K_L, 1.0 / flat.K_ell, 1e-15);
}

TEST(DerivedScales, SmallDeltaAndDisjointRegionsDeepInTheSchedule)
{
    const auto sch = schedule_from_X();
    // exponent statement: delta = X^(323/6 - 16/3) and K_L K_H (rho a^3)^(1/2) = X^(55/4)
    const auto p = sch.symbolic();
    const auto delta = pow(p.rho_a3, Rational(1, 6)) * pow(p.K_H_tilde, 2);
    EXPECT_GT(delta.q, 0);
    const auto disjoint = inv(p.K_ell * pow(p.d, 2)) * p.K_H_tilde *
                          pow(p.rho_a3, Rational(-5, 12)) * pow(p.rho_a3, Rational(1, 2));
    EXPECT_EQ(disjoint.q, Rational(55, 4));
    const auto ds = derived_scales(sch.at(0.1), 1e-300, 1.0);
    EXPECT_TRUE(ds.momentum_regions_disjoint);
    EXPECT_TRUE(ds.excited_bound_below_particle_number);
    EXPECT_LT(ds.delta, 1.0);
}
