#include "genfil/binomial_filtration.hpp"
#include "genfil/errors.hpp"
#include "genfil/prob_core.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace genfil;
using genfil::fixtures::P;
using genfil::fixtures::T;

namespace {

SpacePtr space(std::vector<std::string> names, std::vector<double> w) {
    std::vector<Path> outs;
    for (const auto& n : names) outs.push_back(P(n));
    return std::make_shared<const FinProbSpace>(std::move(outs), std::move(w));
}

}  // namespace

TEST(FinProbSpace, Validation) {
    EXPECT_THROW(space({"0", "1"}, {0.5, 0.6}), ParameterError);
    EXPECT_THROW(space({"0", "1"}, {-0.1, 1.1}), ParameterError);
    EXPECT_THROW(space({"1", "0"}, {0.5, 0.5}), ParameterError);
    EXPECT_THROW(space({}, {}), ParameterError);
    const auto s = space({"0", "1"}, {0.25, 0.75});
    EXPECT_TRUE(s->dense());
    EXPECT_DOUBLE_EQ(s->weight_of(P("1")), 0.75);
    EXPECT_FALSE(space({"00", "11"}, {0.5, 0.5})->dense());
}

TEST(Pushforward, TotalCollapse) {
    const auto src = space({"0", "1"}, {0.3, 0.7});
    const auto tgt = space({"*"}, {1.0});
    const auto m = ProbMorphism::from_function(src, tgt, [](const Path&) { return Path(); });
    const auto mass = pushforward(m);
    ASSERT_EQ(mass.size(), 1U);
    EXPECT_DOUBLE_EQ(mass[0], 1.0);
}

TEST(Pushforward, IdentityKeepsWeights) {
    const auto s = space({"00", "01", "10", "11"}, {0.1, 0.2, 0.3, 0.4});
    const auto mass = pushforward(ProbMorphism::identity(s));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(mass[i], s->weight(i));
}

TEST(Pushforward, DropStepCollapsesOntoZeroBranch) {
    const auto F = fixtures::drop2(T(3, 2));
    const auto m = F.one_step(T(1, 2));  // B_{0.5} -> B_{0.25}, a drop
    const auto mass = pushforward(m);
    EXPECT_DOUBLE_EQ(mass[0], 1.0);
    EXPECT_DOUBLE_EQ(mass[1], 0.0);
}

TEST(NullPreservation, PositiveTargetIsAlwaysFine) {
    const auto src = space({"0", "1"}, {0.3, 0.7});
    const auto tgt = space({"0", "1"}, {0.5, 0.5});
    EXPECT_TRUE(is_null_preserving(ProbMorphism::from_function(src, tgt, [](const Path&) { return P("1"); })).ok);
}

TEST(NullPreservation, WitnessOnViolation) {
    const auto src = space({"0", "1"}, {0.3, 0.7});
    const auto tgt = space({"0", "1"}, {1.0, 0.0});
    const auto m = ProbMorphism::from_function(src, tgt, [](const Path& w) { return w; });
    const auto np = is_null_preserving(m);
    EXPECT_FALSE(np.ok);
    ASSERT_TRUE(np.witness.has_value());
    EXPECT_EQ(*np.witness, P("1"));
    EXPECT_DOUBLE_EQ(np.pulled_back_mass, 0.7);
    try {
        conditional_expectation(RandomVariable::constant(src, 1.0), m);
        FAIL() << "expected NullPreservationError";
    } catch (const NullPreservationError& e) {
        EXPECT_EQ(e.witness(), "1");
    }
}

TEST(Morphism, RejectsImagesOutsideTarget) {
    const auto src = space({"0", "1"}, {0.5, 0.5});
    const auto tgt = space({"*"}, {1.0});
    EXPECT_THROW(ProbMorphism::from_function(src, tgt, [](const Path& w) { return w; }), ParameterError);
}

TEST(ConditionalExpectation, SymmetricCoinAtRoot) {
    const auto F = fixtures::full2(T(1, 2));
    const auto m = F.one_step(T(0, 2));
    const auto X = RandomVariable::from_function(m.source(), [](const Path& w) { return double(w.bit(1)); });
    EXPECT_DOUBLE_EQ(conditional_expectation(X, m)[0], 0.5);
}

TEST(ConditionalExpectation, ConstantsAlongFull) {
    for (double p : {0.3, 0.5, 0.9}) {
        const auto F = make_full_filtration(2, BernoulliParams(p), T(4, 2));
        for (std::int64_t s = 0; s <= 4; ++s) {
            for (std::int64_t t = s; t <= 4; ++t) {
                const auto m = F.morphism_at(arrow(T(s, 2), T(t, 2)));
                const auto Y = conditional_expectation(RandomVariable::constant(m.source(), 3.5), m);
                for (double y : Y.values()) EXPECT_NEAR(y, 3.5, 1e-12);
            }
        }
    }
}

TEST(ConditionalExpectation, ConstantsAlongDropScaleByFiberMass) {
    // Along drop the fiber over ω0 carries P(ω0)/(1 - p) of mass, so 1 is not
    // preserved unless the fiber mass equals the conditioning mass.
    const double p = 0.3;
    const auto F = make_drop_filtration(2, BernoulliParams(p), T(1, 2), T(1, 2), T(2, 2));
    const auto m = F.one_step(T(1, 2));
    const auto Y = conditional_expectation(RandomVariable::constant(m.source(), 1.0), m);
    EXPECT_NEAR(Y.at(P("0")), 1.0 / (1.0 - p), 1e-12);
    EXPECT_DOUBLE_EQ(Y.at(P("1")), 0.0);
}

TEST(ConditionalExpectation, XiAlongDropAtHalf) {
    const auto F = fixtures::drop2(T(2, 2));
    const auto m = F.one_step(T(1, 2));
    const auto Y = conditional_expectation(xi(m.source(), T(2, 2)), m);
    EXPECT_NEAR(Y.at(P("0")), 4 * 0.5 - 2, 1e-12);
}

TEST(ConditionalExpectation, DefiningIdentityOverAllSubsets) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (double p : {0.3, 0.5}) {
        for (const auto& F : {make_full_filtration(2, BernoulliParams(p), T(4, 2)),
                              make_drop_filtration(2, BernoulliParams(p), T(1, 2), T(2, 2), T(4, 2))}) {
            for (std::int64_t s = 0; s <= 3; ++s) {
                for (std::int64_t t = s; t <= 4; ++t) {
                    const auto m = F.morphism_at(arrow(T(s, 2), T(t, 2)));
                    std::vector<double> xs(m.source()->size());
                    for (auto& x : xs) x = U(rng);
                    const RandomVariable X(m.source(), xs);
                    const auto Y = conditional_expectation(X, m);
                    const auto& tgt = *m.target();
                    ASSERT_LE(tgt.size(), 10U);
                    for (std::uint64_t A = 0; A < (std::uint64_t{1} << tgt.size()); ++A) {
                        double lhs = 0.0, rhs = 0.0;
                        for (std::size_t j = 0; j < tgt.size(); ++j) {
                            if (A >> j & 1U) lhs += Y[j] * tgt.weight(j);
                        }
                        for (std::size_t i = 0; i < m.source()->size(); ++i) {
                            if (A >> m.image_index(i) & 1U) rhs += X[i] * m.source()->weight(i);
                        }
                        EXPECT_NEAR(lhs, rhs, 1e-10);
                    }
                }
            }
        }
    }
}

TEST(ConditionalExpectation, TowerAndLinearity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (const auto& F : {make_full_filtration(3, BernoulliParams(0.3), T(6, 3)),
                          make_drop_filtration(3, BernoulliParams(0.5), T(3, 3), T(5, 3), T(6, 3))}) {
        for (std::int64_t s = 0; s <= 6; ++s) {
            for (std::int64_t t = s; t <= 6; ++t) {
                for (std::int64_t u = t; u <= 6; ++u) {
                    const auto m2 = F.morphism_at(arrow(T(t, 3), T(u, 3)));
                    const auto m1 = F.morphism_at(arrow(T(s, 3), T(t, 3)));
                    std::vector<double> xs(m2.source()->size()), zs(xs.size());
                    for (auto& x : xs) x = U(rng);
                    for (auto& z : zs) z = U(rng);
                    const RandomVariable X(m2.source(), xs), Z(m2.source(), zs);
                    const auto nested = conditional_expectation(conditional_expectation(X, m2), m1);
                    const auto direct = conditional_expectation(X, compose(m1, m2));
                    const auto& tgt = *m1.target();
                    std::vector<double> comb(xs.size());
                    for (std::size_t i = 0; i < xs.size(); ++i) comb[i] = 2.0 * xs[i] - 0.5 * zs[i];
                    const auto lin = conditional_expectation(RandomVariable(m2.source(), comb), m2);
                    const auto ex = conditional_expectation(X, m2);
                    const auto ez = conditional_expectation(Z, m2);
                    for (std::size_t j = 0; j < tgt.size(); ++j) {
                        if (tgt.weight(j) > kMassTolerance) EXPECT_NEAR(nested[j], direct[j], 1e-10);
                    }
                    for (std::size_t j = 0; j < lin.values().size(); ++j) {
                        if (m2.target()->weight(j) > kMassTolerance) EXPECT_NEAR(lin[j], 2.0 * ex[j] - 0.5 * ez[j], 1e-10);
                    }
                }
            }
        }
    }
}

TEST(Expectation, Basics) {
    const auto one = build_space(2, T(1, 2), BernoulliParams(0.3));
    EXPECT_DOUBLE_EQ(expectation(RandomVariable::constant(one, 1.0)), 1.0);
    EXPECT_NEAR(expectation(RandomVariable::from_function(one, [](const Path& w) { return double(w.bit(1)); })), 0.3, 1e-15);
    EXPECT_NEAR(expectation(xi(build_space(2, T(1, 2), BernoulliParams(0.5)), T(1, 2))), 0.0, 1e-15);
}

TEST(Pushforward, PreservesTotalMass) {
    const auto F = make_drop_filtration(3, BernoulliParams(0.3), T(2, 3), T(4, 3), T(8, 3));
    for (std::int64_t s = 0; s <= 8; ++s) {
        for (std::int64_t t = s; t <= 8; ++t) {
            double total = 0.0;
            for (double w : pushforward(F.morphism_at(arrow(T(s, 3), T(t, 3))))) total += w;
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}
