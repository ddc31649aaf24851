#pragma once

#include "genfil/path.hpp"
#include "genfil/prob_core.hpp"
#include "genfil/timegrid.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace genfil {

/// Default enumeration cap: 2^N t <= 20 bits.
inline constexpr int kDefaultMaxBits = 20;

/// The active cap; GENFIL_MAX_BITS overrides the default.
int max_bits();

/// Per-step up probabilities p^N_s, with a constant default.
class BernoulliParams {
public:
    explicit BernoulliParams(double constant = 0.5);

    /// Override p at one grid time (keyed by its represented value).
    BernoulliParams& set(const GridTime& s, double p);

    double at(const GridTime& s) const;

    /// True if some step in (0, horizon] has 0 < p < 1.
    bool nontrivial_until(const GridTime& horizon) const;

private:
    double constant_;
    std::map<GridTime, double> overrides_;
};

/// B^N_t with the product measure. Throws SizeError past the cap.
SpacePtr build_space(int N, const GridTime& t, const BernoulliParams& params, int cap = max_bits());

/// ω|_{(0,s]}.
Path restrict_path(const Path& omega, const GridTime& s);

/// ω|_{(0,s]} with the coordinate at s zeroed. Throws ParameterError at s = 0.
Path drop_path(const Path& omega, const GridTime& s);

/// ξ_t(ω) = 2 ω(t) - 1 on a space of paths ending at t > 0.
RandomVariable xi(const SpacePtr& space_at_t, const GridTime& t);

enum class ArrowKind { identity, full, drop, custom };

const char* to_string(ArrowKind kind);

/// A functor from the grid time category (up to a horizon) into finite
/// probability spaces: one space per grid time, one map per arrow.
///
/// The map is given as a path-level rule; morphisms are materialized on
/// request. Nothing here assumes the rule actually satisfies the functor
/// laws; check_functor_laws verifies them.
class Filtration {
public:
    using Rule = std::function<Path(const GridTime& s, const GridTime& t, const Path& omega)>;
    using KindFn = std::function<ArrowKind(const GridTime& s, const GridTime& t)>;

    Filtration(int N, GridTime horizon, std::vector<SpacePtr> spaces, Rule rule, KindFn kind,
               std::string name);

    int resolution() const noexcept { return N_; }
    const GridTime& horizon() const noexcept { return horizon_; }
    const std::string& name() const noexcept { return name_; }
    std::vector<GridTime> times() const;

    const SpacePtr& space_at(const GridTime& t) const;
    ProbMorphism morphism_at(const TimeArrow& a) const;
    ProbMorphism one_step(const GridTime& t) const { return morphism_at(arrow(t, t.next())); }

    /// The rule evaluated on a single path (no membership check).
    Path apply(const GridTime& s, const GridTime& t, const Path& omega) const { return rule_(s, t, omega); }
    ArrowKind kind(const GridTime& s, const GridTime& t) const;

    /// Same rule and kinds, new spaces (used for risk-neutral and tilde variants).
    Filtration with_spaces(std::vector<SpacePtr> spaces, std::string name) const;

private:
    void require_in_range(const GridTime& t) const;

    int N_;
    GridTime horizon_;
    std::vector<SpacePtr> spaces_;
    Rule rule_;
    KindFn kind_;
    std::string name_;
};

/// The path spaces B^N_t for t = 0, δ, ..., horizon.
std::vector<SpacePtr> build_spaces(int N, const GridTime& horizon, const BernoulliParams& params);

ProbMorphism full_map(const Filtration& F, const GridTime& s, const GridTime& t);
ProbMorphism drop_map(const Filtration& F, const GridTime& s, const GridTime& t);

/// Full^N: every arrow is the restriction.
Filtration make_full_filtration(int N, const BernoulliParams& params, const GridTime& horizon);

/// Drop^N_{α,β}: drop into s ∈ [α,β] from strictly later times, full otherwise.
/// α and β may have a finer resolution than N. Requires 0 < α <= β.
Filtration make_drop_filtration(int N, const BernoulliParams& params, const GridTime& alpha,
                                const GridTime& beta, const GridTime& horizon);

/// A filtration generated by one-step maps B_{t} -> B_{t-δ}; longer arrows
/// are composites, so the functor laws hold by construction.
using StepRule = std::function<Path(const GridTime& t, const Path& omega)>;
Filtration make_step_filtration(int N, const BernoulliParams& params, const GridTime& horizon, StepRule step,
                                std::function<ArrowKind(const GridTime& t)> step_kind, std::string name);

/// I^N_t(j, ω): paths in the one-step fiber over ω whose last bit is j.
std::vector<Path> fiber_I(int j, const Path& omega, const ProbMorphism& one_step);

struct LawViolation {
    enum class Kind { unit, composition, null_preservation, out_of_space };
    Kind kind;
    GridTime s;
    GridTime t;
    GridTime u;
    Path path;
    std::string detail;
};

const char* to_string(LawViolation::Kind kind);

struct FunctorLawReport {
    std::size_t unit_checks = 0;
    std::size_t composition_checks = 0;
    std::size_t null_checks = 0;
    std::vector<LawViolation> violations;

    bool ok() const noexcept { return violations.empty(); }
};

/// Unit law at every time, composition at every triple s <= t <= u, and
/// null-preservation of every arrow, all within `horizon`.
FunctorLawReport check_functor_laws(const Filtration& F, const GridTime& horizon, double eps = kMassTolerance);

/// Same spaces (outcomes and weights within `tol`) and same maps on every arrow.
bool same_filtration(const Filtration& a, const Filtration& b, const GridTime& horizon, double tol);

}  // namespace genfil
