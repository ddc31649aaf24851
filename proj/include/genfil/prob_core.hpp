#pragma once

#include "genfil/path.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace genfil {

/// Tolerance for measure sums and null tests.
inline constexpr double kMassTolerance = 1e-9;
/// Tolerance for identity checks between computed quantities.
inline constexpr double kEqTolerance = 1e-10;

struct Tolerances {
    double mass = kMassTolerance;
    double eq = kEqTolerance;
};

/// A finite probability space with the full powerset σ-field.
///
/// Outcomes are kept sorted and unique. When the outcomes are exactly all
/// paths of one length the space is "dense" and index lookup is the path code.
class FinProbSpace {
public:
    FinProbSpace(std::vector<Path> outcomes, std::vector<double> weights,
                 double mass_tolerance = kMassTolerance);

    std::size_t size() const noexcept { return outcomes_.size(); }
    const Path& outcome(std::size_t i) const { return outcomes_.at(i); }
    double weight(std::size_t i) const { return weights_.at(i); }
    std::span<const Path> outcomes() const noexcept { return outcomes_; }
    std::span<const double> weights() const noexcept { return weights_; }

    bool dense() const noexcept { return dense_; }
    std::optional<std::size_t> index_of(const Path& p) const;
    std::size_t require_index(const Path& p) const;
    bool contains(const Path& p) const { return index_of(p).has_value(); }

    double weight_of(const Path& p) const;

    /// Same outcomes and weights within `tol`.
    bool equals(const FinProbSpace& other, double tol) const;

private:
    std::vector<Path> outcomes_;
    std::vector<double> weights_;
    bool dense_ = false;
};

using SpacePtr = std::shared_ptr<const FinProbSpace>;

/// A (measurable) map between two finite spaces, stored by outcome index.
class ProbMorphism {
public:
    ProbMorphism(SpacePtr source, SpacePtr target, std::vector<std::size_t> map);

    /// Build from a path-level function; throws ParameterError if some image
    /// is not an outcome of the target.
    static ProbMorphism from_function(SpacePtr source, SpacePtr target,
                                      const std::function<Path(const Path&)>& fn);

    static ProbMorphism identity(SpacePtr space);

    const SpacePtr& source() const noexcept { return source_; }
    const SpacePtr& target() const noexcept { return target_; }
    std::size_t image_index(std::size_t source_index) const { return map_.at(source_index); }
    const Path& image(std::size_t source_index) const { return target_->outcome(map_.at(source_index)); }
    Path apply(const Path& p) const { return image(source_->require_index(p)); }
    std::span<const std::size_t> indices() const noexcept { return map_; }

    /// Source indices mapping onto target index j.
    std::vector<std::size_t> preimage(std::size_t target_index) const;

private:
    SpacePtr source_;
    SpacePtr target_;
    std::vector<std::size_t> map_;
};

/// outer ∘ inner. Requires inner.target() and outer.source() to share outcomes.
ProbMorphism compose(const ProbMorphism& outer, const ProbMorphism& inner);

/// A real-valued function on a space's outcomes.
class RandomVariable {
public:
    RandomVariable(SpacePtr space, std::vector<double> values);
    static RandomVariable from_function(SpacePtr space, const std::function<double(const Path&)>& fn);
    static RandomVariable constant(SpacePtr space, double c);

    const SpacePtr& space() const noexcept { return space_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_.at(i); }
    double at(const Path& p) const { return values_.at(space_->require_index(p)); }

private:
    SpacePtr space_;
    std::vector<double> values_;
};

/// Target-indexed masses P_source ∘ map^{-1} on singletons.
std::vector<double> pushforward(const ProbMorphism& m);

struct NullPreservation {
    bool ok = true;
    /// A target outcome with weight <= ε but positive pulled-back mass.
    std::optional<Path> witness;
    double pulled_back_mass = 0.0;
};

NullPreservation is_null_preserving(const ProbMorphism& m, double eps = kMassTolerance);

/// E^m(X): Y on the target with Y(ω) P_s(ω) = Σ_{ω' ∈ m^{-1}(ω)} X(ω') P_t(ω').
///
/// Y is set to 0 on target outcomes of weight <= `eps`. Throws
/// NullPreservationError (with the witness outcome) when m is not
/// null-preserving.
RandomVariable conditional_expectation(const RandomVariable& x, const ProbMorphism& m,
                                       double eps = kMassTolerance);

double expectation(const RandomVariable& x);

}  // namespace genfil
