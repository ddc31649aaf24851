#include "genfil/binomial_filtration.hpp"
#include "genfil/errors.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace genfil;
using genfil::fixtures::P;
using genfil::fixtures::T;

TEST(BuildSpace, RootAndUniform) {
    const auto root = build_space(3, T(0, 3), BernoulliParams(0.3));
    ASSERT_EQ(root->size(), 1U);
    EXPECT_EQ(root->outcome(0), Path::root());
    EXPECT_DOUBLE_EQ(root->weight(0), 1.0);
    const auto four = build_space(2, T(2, 2), BernoulliParams(0.5));
    ASSERT_EQ(four->size(), 4U);
    for (double w : four->weights()) EXPECT_DOUBLE_EQ(w, 0.25);
}

TEST(BuildSpace, SingleBernoulliAndOverrides) {
    const auto s = build_space(2, T(1, 2), BernoulliParams(0.5).set(T(1, 2), 0.3));
    EXPECT_DOUBLE_EQ(s->weight_of(P("1")), 0.3);
    EXPECT_DOUBLE_EQ(s->weight_of(P("0")), 0.7);
    // Overrides are keyed by value, so 1/4 set at N=3 resolution applies too.
    BernoulliParams params(0.5);
    params.set(T(2, 3), 0.9);
    EXPECT_DOUBLE_EQ(params.at(T(1, 2)), 0.9);
    EXPECT_THROW(params.set(T(1, 2), 1.5), ParameterError);
}

TEST(BuildSpace, CapAndResolution) {
    EXPECT_THROW(build_space(2, T(3, 2), BernoulliParams(), 2), SizeError);
    EXPECT_THROW(build_space(2, T(1, 3), BernoulliParams()), ResolutionError);
    ::setenv("GENFIL_MAX_BITS", "3", 1);
    EXPECT_EQ(max_bits(), 3);
    EXPECT_THROW(build_space(3, T(4, 3), BernoulliParams()), SizeError);
    ::setenv("GENFIL_MAX_BITS", "abc", 1);
    EXPECT_THROW(max_bits(), ParameterError);
    ::unsetenv("GENFIL_MAX_BITS");
    EXPECT_EQ(max_bits(), kDefaultMaxBits);
}

TEST(FullMap, Examples) {
    const auto F = make_full_filtration(3, BernoulliParams(), T(8, 3));
    const auto to_root = full_map(F, T(0, 3), T(8, 3));
    for (std::size_t i = 0; i < to_root.source()->size(); ++i) EXPECT_EQ(to_root.image(i), Path::root());
    const auto id = full_map(F, T(3, 3), T(3, 3));
    for (std::size_t i = 0; i < id.source()->size(); ++i) EXPECT_EQ(id.image(i), id.source()->outcome(i));
    EXPECT_EQ(full_map(F, T(2, 3), T(8, 3)).apply(P("10110101")), P("10"));
}

TEST(DropMap, Examples) {
    const auto F = fixtures::drop2(T(4, 2));
    const Path w = P("1");
    for (int d1 = 0; d1 <= 1; ++d1) {
        for (int d2 = 0; d2 <= 1; ++d2) {
            EXPECT_EQ(drop_map(F, T(2, 2), T(3, 2)).apply(w.append(d1).append(d2)), w.append(0));
        }
    }
    const auto m = drop_map(F, T(1, 2), T(2, 2));
    EXPECT_TRUE(m.preimage(m.target()->require_index(P("1"))).empty());
    EXPECT_EQ(m.preimage(m.target()->require_index(P("0"))).size(), 4U);
    EXPECT_THROW(drop_map(F, T(0, 2), T(1, 2)), ParameterError);
}

TEST(DropMap, ComposesWithFull) {
    const auto F = make_full_filtration(2, BernoulliParams(), T(3, 2));
    const GridTime s = T(1, 2), t = T(2, 2), u = T(3, 2);
    for (const auto& w : F.space_at(u)->outcomes()) {
        EXPECT_EQ(drop_path(restrict_path(w, t), s), drop_path(w, s));
    }
}

TEST(FulldropIdentities, AllFourPointwise) {
    // full∘full = full, drop∘full = drop, full∘drop = full (landing earlier than
    // the dropped coordinate), drop∘drop = drop.
    const int N = 2;
    const auto F = make_full_filtration(N, BernoulliParams(), T(4, N));
    for (std::int64_t a = 1; a <= 4; ++a) {
        for (std::int64_t b = a; b <= 4; ++b) {
            for (std::int64_t c = b; c <= 4; ++c) {
                const GridTime s = T(a, N), t = T(b, N), u = T(c, N);
                for (const auto& w : F.space_at(u)->outcomes()) {
                    EXPECT_EQ(restrict_path(restrict_path(w, t), s), restrict_path(w, s));
                    EXPECT_EQ(drop_path(restrict_path(w, t), s), drop_path(w, s));
                    if (s < t) {
                        EXPECT_EQ(restrict_path(drop_path(w, t), s), restrict_path(w, s));
                        EXPECT_EQ(drop_path(drop_path(w, t), s), drop_path(w, s));
                    }
                }
            }
        }
    }
}

TEST(Filtration, FullLawsAndSpaces) {
    for (int N = 1; N <= 3; ++N) {
        const auto F = make_full_filtration(N, BernoulliParams(0.3), T(1 << N, N));
        EXPECT_EQ(F.times().size(), static_cast<std::size_t>((1 << N) + 1));
        const auto report = check_functor_laws(F, F.horizon());
        EXPECT_TRUE(report.ok()) << report.violations.size();
        EXPECT_GT(report.composition_checks, 0U);
        EXPECT_EQ(F.kind(T(0, N), T(1, N)), ArrowKind::full);
    }
}

TEST(Filtration, DropLawsAndKinds) {
    const auto F = make_drop_filtration(3, BernoulliParams(0.5), T(3, 3), T(5, 3), T(8, 3));
    EXPECT_TRUE(check_functor_laws(F, F.horizon()).ok());
    EXPECT_EQ(F.kind(T(3, 3), T(4, 3)), ArrowKind::drop);
    EXPECT_EQ(F.kind(T(5, 3), T(8, 3)), ArrowKind::drop);
    EXPECT_EQ(F.kind(T(4, 3), T(4, 3)), ArrowKind::identity);
    EXPECT_EQ(F.kind(T(2, 3), T(6, 3)), ArrowKind::full);
    EXPECT_EQ(F.kind(T(6, 3), T(8, 3)), ArrowKind::full);
    EXPECT_EQ(F.name(), "drop[0.375,0.625]");
    EXPECT_THROW(make_drop_filtration(2, BernoulliParams(), T(2, 2), T(1, 2), T(4, 2)), OrderingError);
    EXPECT_THROW(make_drop_filtration(2, BernoulliParams(), T(0, 2), T(1, 2), T(4, 2)), ParameterError);
}

TEST(Filtration, DropWindowOutsideHorizonIsFull) {
    const auto D = make_drop_filtration(2, BernoulliParams(0.3), T(7, 2), T(7, 2), T(4, 2));
    const auto F = make_full_filtration(2, BernoulliParams(0.3), T(4, 2));
    EXPECT_TRUE(same_filtration(D, F, T(4, 2), 1e-15));
    EXPECT_FALSE(same_filtration(fixtures::drop2(T(4, 2), 0.3), F, T(4, 2), 1e-15));
}

TEST(Filtration, DropCompositionExhaustive) {
    const auto F = fixtures::drop2(T(4, 2));
    for (std::int64_t a = 0; a <= 4; ++a) {
        for (std::int64_t b = a; b <= 4; ++b) {
            for (std::int64_t c = b; c <= 4; ++c) {
                for (const auto& w : F.space_at(T(c, 2))->outcomes()) {
                    EXPECT_EQ(F.apply(T(a, 2), T(b, 2), F.apply(T(b, 2), T(c, 2), w)), F.apply(T(a, 2), T(c, 2), w));
                }
            }
        }
    }
}

TEST(Filtration, AdversarialFunctorIsReported) {
    // Full everywhere except that the arrow 1 -> 0.25 flips the bit at 0.25.
    const int N = 2;
    const BernoulliParams params(0.5);
    Filtration bad(
        N, T(4, N), build_spaces(N, T(4, N), params),
        [](const GridTime& s, const GridTime& t, const Path& w) {
            Path out = restrict_path(w, s);
            if (s == GridTime(1, 2) && t == GridTime(4, 2)) out = out.with_bit(1, 1 - out.bit(1));
            return out;
        },
        [](const GridTime&, const GridTime&) { return ArrowKind::custom; }, "adversarial");
    const auto report = check_functor_laws(bad, bad.horizon());
    ASSERT_FALSE(report.ok());
    bool found = false;
    for (const auto& v : report.violations) {
        if (v.kind == LawViolation::Kind::composition && v.s == T(1, N) && v.u == T(4, N)) found = true;
    }
    EXPECT_TRUE(found);
}

TEST(Filtration, UnitAndTypingViolations) {
    const int N = 1;
    const BernoulliParams params(0.5);
    Filtration bad(
        N, T(2, N), build_spaces(N, T(2, N), params),
        [](const GridTime& s, const GridTime& t, const Path& w) {
            if (s == t && s == GridTime(1, 1)) return w.with_bit(1, 1);
            return restrict_path(w, s);
        },
        [](const GridTime&, const GridTime&) { return ArrowKind::custom; }, "bad-unit");
    const auto report = check_functor_laws(bad, bad.horizon());
    bool unit = false;
    for (const auto& v : report.violations) unit = unit || v.kind == LawViolation::Kind::unit;
    EXPECT_TRUE(unit);
}

TEST(Filtration, NullPreservationViolationIsReported) {
    // p = 1 at 0.5 makes paths ending in 0 null; a map sending mass onto such a
    // path breaks null-preservation.
    const int N = 2;
    BernoulliParams params(0.5);
    params.set(T(2, N), 1.0);
    Filtration bad(
        N, T(3, N), build_spaces(N, T(3, N), params),
        [](const GridTime& s, const GridTime& t, const Path& w) {
            Path out = restrict_path(w, s);
            if (s == GridTime(2, 2) && t != s) out = out.with_bit(2, 0);
            return out;
        },
        [](const GridTime&, const GridTime&) { return ArrowKind::custom; }, "bad-null");
    const auto report = check_functor_laws(bad, bad.horizon());
    bool null_violation = false;
    for (const auto& v : report.violations) null_violation = null_violation || v.kind == LawViolation::Kind::null_preservation;
    EXPECT_TRUE(null_violation);
}

TEST(Xi, Values) {
    const auto s = build_space(2, T(2, 2), BernoulliParams());
    const auto x = xi(s, T(2, 2));
    EXPECT_DOUBLE_EQ(x.at(P("01")), 1.0);
    EXPECT_DOUBLE_EQ(x.at(P("10")), -1.0);
    EXPECT_NEAR(expectation(x), 0.0, 1e-15);
    EXPECT_THROW(xi(s, T(0, 2)), ParameterError);
}

TEST(FiberI, FullAndDrop) {
    const auto F = fixtures::full2(T(2, 2));
    const auto full_step = F.one_step(T(1, 2));
    EXPECT_EQ(fiber_I(1, P("0"), full_step), std::vector<Path>{P("01")});
    EXPECT_EQ(fiber_I(0, P("0"), full_step), std::vector<Path>{P("00")});
    const auto D = fixtures::drop2(T(2, 2));
    const auto drop_step = D.one_step(T(1, 2));
    EXPECT_EQ(fiber_I(1, P("0"), drop_step), (std::vector<Path>{P("01"), P("11")}));
    EXPECT_TRUE(fiber_I(1, P("1"), drop_step).empty());
    EXPECT_TRUE(fiber_I(0, P("1"), drop_step).empty());
}

namespace {

/// #f^{-1}(ω) p_{t+δ} - #I(0,ω).
double xi_formula(const ProbMorphism& m, std::size_t j, double p) {
    return static_cast<double>(m.preimage(j).size()) * p -
           static_cast<double>(fiber_I(0, m.target()->outcome(j), m).size());
}

}  // namespace

TEST(XiConditional, MatchesFormulaOnFullSteps) {
    for (double p : {0.3, 0.5}) {
        for (int N = 1; N <= 3; ++N) {
            const auto F = make_full_filtration(N, BernoulliParams(p), T(1 << N, N));
            for (GridTime t(0, N); t < F.horizon(); t = t.next()) {
                const auto m = F.one_step(t);
                const auto E = conditional_expectation(xi(m.source(), t.next()), m);
                for (std::size_t j = 0; j < m.target()->size(); ++j) {
                    EXPECT_NEAR(E[j], xi_formula(m, j, p), 1e-12);
                    EXPECT_NEAR(E[j], 2 * p - 1, 1e-12);
                }
            }
        }
    }
}

TEST(XiConditional, MatchesFormulaOnDropStepsAtHalf) {
    for (int N = 1; N <= 3; ++N) {
        const auto F = make_drop_filtration(N, BernoulliParams(0.5), T(1, N), T(1, N), T(1 << N, N));
        const auto m = F.one_step(T(1, N));
        const auto E = conditional_expectation(xi(m.source(), T(2, N)), m);
        for (std::size_t j = 0; j < m.target()->size(); ++j) {
            if (m.target()->weight(j) > 0) EXPECT_NEAR(E[j], xi_formula(m, j, 0.5), 1e-12);
        }
    }
}

TEST(XiConditional, DropStepAwayFromHalfDiverges) {
    // The formula assumes P_{t+δ}(ω')/P_t(ω) = p for each fiber point, which
    // only holds for full fibers.
    const auto F = make_drop_filtration(2, BernoulliParams(0.3), T(1, 2), T(1, 2), T(2, 2));
    const auto m = F.one_step(T(1, 2));
    const auto E = conditional_expectation(xi(m.source(), T(2, 2)), m);
    const std::size_t j = m.target()->require_index(P("0"));
    EXPECT_NEAR(E[j], -0.4 / 0.7, 1e-12);
    EXPECT_NEAR(xi_formula(m, j, 0.3), -0.8, 1e-12);
}

TEST(NonTrivial, InteriorProbabilitiesGivePositiveWeights) {
    EXPECT_TRUE(BernoulliParams(0.3).nontrivial_until(T(4, 2)));
    EXPECT_FALSE(BernoulliParams(1.0).nontrivial_until(T(4, 2)));
    const auto s = build_space(3, T(6, 3), BernoulliParams(0.3));
    for (double w : s->weights()) EXPECT_GT(w, 0.0);
}
