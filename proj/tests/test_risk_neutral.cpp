#include "genfil/errors.hpp"
#include "genfil/risk_neutral.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace genfil;
using genfil::fixtures::P;
using genfil::fixtures::T;

TEST(MartingaleConstants, BaseMarket) {
    const auto c = martingale_constants(fixtures::base_market());
    EXPECT_NEAR(c.c1, 1.119402985074627, 1e-14);
    EXPECT_NEAR(c.c0, 0.9203980099502488, 1e-14);
    EXPECT_GT(c.c1, c.c0);
}

TEST(MartingaleConstants, SymmetricCases) {
    MarketParams m{0.05, 0.3, 0.05, 1.0, 3};
    const auto c = martingale_constants(m);
    EXPECT_NEAR(c.c1 + c.c0, 2.0, 1e-14);
    MarketParams z{0.0, 0.3, 0.0, 1.0, 2};
    EXPECT_NEAR(martingale_constants(z).c1, 1.0 + 0.5 * 0.3, 1e-15);
}

TEST(QStar, SolvesTheOneStepEquation) {
    const auto a = fixtures::base_market();
    const auto q = q_star(a);
    EXPECT_NEAR(q.q1, 0.4, 1e-12);
    EXPECT_NEAR(q.q0, 0.6, 1e-12);
    const auto c = martingale_constants(a);
    EXPECT_NEAR(c.c1 * q.q1 + c.c0 * q.q0, 1.0, 1e-12);
    // Independent oracle: solve 1 = c1 x + c0 (1 - x) by bisection.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (c.c1 * mid + c.c0 * (1 - mid) < 1.0 ? lo : hi) = mid;
    }
    EXPECT_NEAR(q.q1, lo, 1e-12);
}

TEST(QStar, SymmetricAndBound) {
    MarketParams m{0.05, 0.3, 0.05, 1.0, 3};
    EXPECT_NEAR(q_star(m).q1, 0.5, 1e-15);
    for (int N = 0; N <= 4; ++N) {
        for (double excess : {-0.5, -0.39, 0.0, 0.2, 0.39, 0.41}) {
            MarketParams p{0.3 + excess, 0.2, 0.3, 1.0, N};
            const bool inside = std::abs(excess) < p.arbitrage_bound();
            try {
                p.validate();
            } catch (const ParameterError&) {
                continue;
            }
            if (inside) {
                const auto q = q_star(p);
                EXPECT_GT(q.q1, 0.0);
                EXPECT_LT(q.q1, 1.0);
            } else {
                EXPECT_THROW(q_star(p), NoArbitrageBoundError);
            }
        }
    }
    MarketParams edge{0.42 - 1e-9, 0.2, 0.02, 100, 2};
    EXPECT_LT(q_star(edge).q1, 1e-8);
}

TEST(BuildRnFull, BaseMarketMeasures) {
    const auto a = fixtures::base_market();
    const auto rn = build_rn_full(fixtures::full2(T(4, 2)), a);
    EXPECT_NEAR(rn.measure_at(T(1, 2))->weight_of(P("1")), 0.4, 1e-12);
    EXPECT_NEAR(rn.measure_at(T(1, 2))->weight_of(P("0")), 0.6, 1e-12);
    EXPECT_NEAR(rn.measure_at(T(2, 2))->weight_of(P("11")), 0.16, 1e-12);
    const auto report = martingale_check(rn, a, T(4, 2));
    EXPECT_TRUE(report.ok());
    EXPECT_LT(report.max_direct_residual, 1e-10);
    EXPECT_TRUE(equivalence_witnesses(rn, T(4, 2)).empty());
    EXPECT_TRUE(verify_null_preserving_under_Q(rn, T(4, 2)).ok());
    // Same outcomes and maps as the base.
    for (const auto& t : rn.base().times()) {
        EXPECT_EQ(rn.filtration().space_at(t)->size(), rn.base().space_at(t)->size());
    }
    EXPECT_TRUE(check_functor_laws(rn.filtration(), T(4, 2)).ok());
}

TEST(BuildRnFull, UniformWhenDriftEqualsRate) {
    MarketParams m{0.03, 0.2, 0.03, 100, 2};
    const auto rn = build_rn_full(fixtures::full2(T(3, 2)), m);
    const auto Q = rn.measure_at(T(3, 2));
    for (double w : Q->weights()) EXPECT_NEAR(w, 0.125, 1e-15);
}

TEST(BuildRnFull, RejectsDropAndBoundViolations) {
    EXPECT_THROW(build_rn_full(fixtures::drop2(T(3, 2)), fixtures::base_market()), ParameterError);
    MarketParams m{0.1, 0.2, 0.6, 100, 2};
    EXPECT_THROW(build_rn_full(fixtures::full2(T(3, 2)), m), NoArbitrageBoundError);
}

TEST(BuildRnDrop, BaseMarketMeasures) {
    const auto a = fixtures::base_market();
    for (double free : {0.2, 0.8}) {
        const auto rn = build_rn_drop(fixtures::drop2(T(2, 2)), a, {{P("11"), free}});
        const auto Q = rn.measure_at(T(2, 2));
        EXPECT_NEAR(Q->weight_of(P("01")), 0.4, 1e-12);
        EXPECT_NEAR(Q->weight_of(P("00")), 0.6, 1e-12);
        EXPECT_EQ(Q->weight_of(P("11")), 0.0);
        EXPECT_EQ(Q->weight_of(P("10")), 0.0);
        EXPECT_NEAR(rn.q().at(P("11")), free, 1e-15);
        EXPECT_NEAR(rn.q().at(P("10")), 1 - free, 1e-15);
        EXPECT_EQ(rn.q().at(P("1")), 0.0);
        EXPECT_EQ(rn.q().at(P("0")), 1.0);
    }
}

TEST(BuildRnDrop, NonEquivalenceWitness) {
    const auto rn = build_rn_drop(fixtures::drop2(T(2, 2)), fixtures::base_market());
    const auto w = equivalence_witnesses(rn, T(2, 2));
    ASSERT_FALSE(w.empty());
    EXPECT_EQ(w.front().first, T(1, 2));
    EXPECT_EQ(w.front().second, P("1"));
    EXPECT_TRUE(equivalence_witnesses(rn, T(0, 2)).empty());
}

TEST(BuildRnDrop, NullPreservingUnderQ) {
    const auto rn = build_rn_drop(fixtures::drop2(T(4, 2)), fixtures::base_market());
    EXPECT_TRUE(verify_null_preserving_under_Q(rn, T(4, 2)).ok());
}

TEST(BuildRnDrop, AdversarialQBreaksNullPreservation) {
    // All mass on the upper branch at the landing time: drop sends that mass
    // onto the lower branch, which Q makes null.
    const auto base = fixtures::drop2(T(2, 2));
    auto q = QFunction::constant(2, T(2, 2), 0.4);
    q.set_pair(Path(), 1.0);
    const RiskNeutralFiltration rn(base, q);
    const auto report = verify_null_preserving_under_Q(rn, T(2, 2));
    ASSERT_FALSE(report.ok());
    EXPECT_EQ(report.violations.front().s, T(1, 2));
    EXPECT_EQ(report.violations.front().path, P("0"));
}

TEST(BuildRnDrop, Validation) {
    const auto base = fixtures::drop2(T(2, 2));
    const auto a = fixtures::base_market();
    EXPECT_THROW(build_rn_drop(base, a, {{P("11"), 1.5}}), ParameterError);
    EXPECT_THROW(build_rn_drop(base, a, {{P("01"), 0.5}}), ParameterError);  // not invisible
    EXPECT_THROW(build_rn_drop(base, a, {{P("10"), 0.5}}), ParameterError);  // keys end in 1
    EXPECT_THROW(build_rn_drop(base, a, {{P("111"), 0.5}}), ParameterError);  // past the horizon
}

TEST(MartingaleCheck, DropIsAgreedOnAfterTheDrop) {
    // From the drop landing time on, the iiff equation holds at every node.
    // The step into the landing time cannot hold: there Q_{0.25} = (0, 1) and
    // the root residual is 1 - c0 (see the risk-neutral notes in the README).
    const auto a = fixtures::base_market();
    const auto c = martingale_constants(a);
    const auto rn = build_rn_drop(fixtures::drop2(T(2, 2)), a, {{P("11"), 0.2}});
    const auto report = martingale_check(rn, a, T(2, 2));
    ASSERT_FALSE(report.ok());
    for (const auto& f : report.failures) {
        EXPECT_EQ(f.t, T(0, 2));
        EXPECT_NEAR(f.iiff_residual, 1.0 - c.c0, 1e-12);
        ASSERT_TRUE(f.direct_residual.has_value());
        EXPECT_NEAR(*f.direct_residual, 92.5 / 1.005 - 100.0, 1e-10);
    }
}

TEST(MartingaleCheck, PhysicalMeasureFails) {
    const auto a = fixtures::base_market();
    const auto base = fixtures::full2(T(2, 2));
    const RiskNeutralFiltration rn(base, QFunction::constant(2, T(2, 2), 0.5));
    const auto report = martingale_check(rn, a, T(2, 2));
    EXPECT_FALSE(report.ok());
    EXPECT_EQ(report.failures.size(), 3U);
}

TEST(Qcond, ProductMeasuresPass) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto q = QFunction::constant(2, T(4, 2), 0.5);
        for (int len = 0; len < 4; ++len) {
            for (std::uint64_t code = 0; code < (1U << len); ++code) q.set_pair(Path(code, len), U(rng));
        }
        const RiskNeutralFiltration rn(fixtures::full2(T(4, 2)), q);
        const auto report = qcond_equivalences(rn, T(4, 2));
        EXPECT_TRUE(report.all_pass());
        EXPECT_TRUE(report.consistent());
    }
}

TEST(Qcond, NonProductMeasureFailsAllThree) {
    // Perturb Q_{0.5} of the base market so that the siblings under 0 no longer add up.
    const auto rn = build_rn_full(fixtures::full2(T(2, 2)), fixtures::base_market());
    std::vector<SpacePtr> measures{rn.measure_at(T(0, 2)), rn.measure_at(T(1, 2))};
    const auto q2_ptr = rn.measure_at(T(2, 2));
    const auto& q2 = *q2_ptr;
    std::vector<double> w(q2.weights().begin(), q2.weights().end());
    w[0] += 0.05;
    w[3] -= 0.05;
    measures.push_back(std::make_shared<const FinProbSpace>(std::vector<Path>(q2.outcomes().begin(), q2.outcomes().end()), w));
    const auto report = qcond_equivalences(measures, 2);
    EXPECT_FALSE(report.sibling_sums);
    EXPECT_FALSE(report.full_preserving);
    EXPECT_FALSE(report.product_form);
    EXPECT_TRUE(report.consistent());
    EXPECT_EQ(report.sibling_witnesses.front().path, P("0"));
}

TEST(Qcond, DropMeasureIsPreservedByFull) {
    const auto rn = build_rn_drop(fixtures::drop2(T(4, 2)), fixtures::base_market());
    EXPECT_TRUE(qcond_equivalences(rn, T(4, 2)).all_pass());
}

TEST(QFunction, Basics) {
    auto q = QFunction::constant(2, T(2, 2), 0.3);
    EXPECT_NEAR(q.at(T(1, 2), P("1")), 0.3, 1e-15);
    EXPECT_NEAR(q.at(P("10")), 0.7, 1e-15);
    q.set_pair(P("1"), 0.9);
    EXPECT_NEAR(q.at(P("11")), 0.9, 1e-15);
    EXPECT_THROW(q.set_pair(P("1"), -0.1), ParameterError);
    EXPECT_THROW(q.set_pair(P("11"), 0.5), ParameterError);
    EXPECT_THROW(q.at(T(2, 2), P("1")), ParameterError);
    double total = 0.0;
    const auto Q = q.measure_at(T(2, 2));
    for (double w : Q->weights()) total += w;
    EXPECT_NEAR(total, 1.0, 1e-15);
}
