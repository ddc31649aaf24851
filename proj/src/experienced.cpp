#include "genfil/experienced.hpp"

#include "genfil/errors.hpp"

#include <cmath>
#include <map>

namespace genfil {

Path experienced_path(const Filtration& F, const GridTime& t, const Path& omega) {
    if (omega.length() != t.step()) throw ParameterError("path " + omega.to_string() + " does not end at t=" + t.to_string());
    Path e = omega;
    for (GridTime s(1, F.resolution()); s <= t; s = s.next()) {
        const int k = static_cast<int>(s.step());
        e = e.with_bit(k, F.apply(s, t, omega).bit(k));
    }
    return e;
}

SpacePtr experienced_space(const Filtration& F, const GridTime& t) {
    const auto& P = *F.space_at(t);
    std::map<Path, double> mass;
    for (std::size_t i = 0; i < P.size(); ++i) mass[experienced_path(F, t, P.outcome(i))] += P.weight(i);
    std::vector<Path> outcomes;
    std::vector<double> weights;
    for (const auto& [w, m] : mass) {
        outcomes.push_back(w);
        weights.push_back(m);
    }
    return std::make_shared<const FinProbSpace>(std::move(outcomes), std::move(weights));
}

Filtration tilde_filtration(const Filtration& F, const GridTime& horizon) {
    if (horizon > F.horizon()) throw OrderingError("tilde horizon is past the filtration's horizon");
    std::vector<SpacePtr> spaces;
    for (const auto& t : grid_points(IntervalKind::closed, GridTime(0, F.resolution()), horizon)) {
        spaces.push_back(experienced_space(F, t));
    }
    return Filtration(
        F.resolution(), horizon, std::move(spaces),
        [](const GridTime& s, const GridTime&, const Path& w) { return restrict_path(w, s); },
        [](const GridTime&, const GridTime&) { return ArrowKind::full; }, "tilde:" + F.name());
}

NaturalityReport naturality_check(const Filtration& F, const GridTime& horizon, double eps) {
    NaturalityReport report;
    const auto times = grid_points(IntervalKind::closed, GridTime(0, F.resolution()), horizon);
    for (const auto& t : times) {
        double total = 0.0;
        const auto space = experienced_space(F, t);
        for (double w : space->weights()) total += w;
        report.max_mass_defect = std::max(report.max_mass_defect, std::abs(total - 1.0));
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t k = i; k < times.size(); ++k) {
            const auto& s = times[i];
            const auto& t = times[k];
            for (const auto& w : F.space_at(t)->outcomes()) {
                ++report.squares_checked;
                const Path tilde_side = restrict_path(experienced_path(F, t, w), s);
                const Path direct_side = experienced_path(F, s, F.apply(s, t, w));
                if (tilde_side != direct_side) report.violations.push_back({s, t, w, tilde_side, direct_side});
            }
        }
    }
    report.mass_ok = report.max_mass_defect <= eps;
    return report;
}

}  // namespace genfil
