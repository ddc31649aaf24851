#pragma once

#include "genfil/binomial_filtration.hpp"
#include "genfil/path.hpp"
#include "genfil/prob_core.hpp"
#include "genfil/timegrid.hpp"

#include <vector>

namespace genfil {

/// e_t(ω)(s) = f_{s,t}(ω)(s) for every grid step s ∈ (0, t].
Path experienced_path(const Filtration& F, const GridTime& t, const Path& omega);

/// The image of e_t with the pushforward measure P ∘ e_t^{-1}. Outcomes off
/// the image are absent rather than carried with weight 0.
SpacePtr experienced_space(const Filtration& F, const GridTime& t);

/// Experienced spaces at every time up to `horizon`, linked by restriction.
Filtration tilde_filtration(const Filtration& F, const GridTime& horizon);

struct NaturalityViolation {
    GridTime s;
    GridTime t;
    Path path;
    Path tilde_side;   // f̃_{s,t}(e_t(ω))
    Path direct_side;  // e_s(f_{s,t}(ω))
};

struct NaturalityReport {
    std::size_t squares_checked = 0;
    std::vector<NaturalityViolation> violations;
    /// Largest |P̃_t(image) - 1| over the checked times.
    double max_mass_defect = 0.0;
    bool mass_ok = true;

    bool ok() const noexcept { return violations.empty() && mass_ok; }
};

/// f̃_{s,t} ∘ e_t = e_s ∘ f_{s,t} for all s <= t <= horizon and every path,
/// reported in (s, t, path) order.
NaturalityReport naturality_check(const Filtration& F, const GridTime& horizon, double eps = kEqTolerance);

}  // namespace genfil
