#include "genfil/binomial_filtration.hpp"

#include "genfil/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>

namespace genfil {

int max_bits() {
    const char* env = std::getenv("GENFIL_MAX_BITS");
    if (env == nullptr || *env == '\0') return kDefaultMaxBits;
    int value = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc() || ptr != end || value < 0 || value > Path::kMaxLength) {
        throw ParameterError(std::string("GENFIL_MAX_BITS must be an integer in [0, 62], got '") + env + "'");
    }
    return value;
}

BernoulliParams::BernoulliParams(double constant) : constant_(constant) {
    if (!(constant >= 0.0 && constant <= 1.0)) throw ParameterError("p must lie in [0,1]");
}

BernoulliParams& BernoulliParams::set(const GridTime& s, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p at " + s.to_string() + " must lie in [0,1]");
    if (s.is_zero()) throw ParameterError("p is only defined for times > 0");
    overrides_[s] = p;
    return *this;
}

double BernoulliParams::at(const GridTime& s) const {
    auto it = overrides_.find(s);
    return it == overrides_.end() ? constant_ : it->second;
}

bool BernoulliParams::nontrivial_until(const GridTime& horizon) const {
    for (std::int64_t n = 1; n <= horizon.step(); ++n) {
        const double p = at(GridTime(n, horizon.resolution()));
        if (p > 0.0 && p < 1.0) return true;
    }
    return false;
}

SpacePtr build_space(int N, const GridTime& t, const BernoulliParams& params, int cap) {
    if (t.resolution() != N) throw ResolutionError("build_space: time " + t.to_string() + " is not at resolution " + std::to_string(N));
    const std::int64_t bits = t.step();
    if (bits > cap) {
        throw SizeError("path space at t=" + t.to_string() + " needs " + std::to_string(bits) +
                        " bits, above the enumeration cap of " + std::to_string(cap));
    }
    const int len = static_cast<int>(bits);
    std::vector<double> up(static_cast<std::size_t>(len));
    for (int k = 1; k <= len; ++k) up[static_cast<std::size_t>(k - 1)] = params.at(GridTime(k, N));

    const std::size_t count = std::size_t{1} << len;
    std::vector<Path> outcomes;
    std::vector<double> weights;
    outcomes.reserve(count);
    weights.reserve(count);
    for (std::size_t code = 0; code < count; ++code) {
        const Path omega(code, len);
        double w = 1.0;
        for (int k = 1; k <= len; ++k) {
            const double p = up[static_cast<std::size_t>(k - 1)];
            w *= omega.bit(k) ? p : 1.0 - p;
        }
        outcomes.push_back(omega);
        weights.push_back(w);
    }
    return std::make_shared<const FinProbSpace>(std::move(outcomes), std::move(weights));
}

Path restrict_path(const Path& omega, const GridTime& s) {
    if (s.step() > omega.length()) {
        throw OrderingError("cannot restrict a path of length " + std::to_string(omega.length()) + " to (0," +
                            s.to_string() + "]");
    }
    return omega.prefix(static_cast<int>(s.step()));
}

Path drop_path(const Path& omega, const GridTime& s) {
    if (s.is_zero()) throw ParameterError("drop is undefined at time 0: there is no coordinate to forget");
    return restrict_path(omega, s).with_bit(static_cast<int>(s.step()), 0);
}

RandomVariable xi(const SpacePtr& space_at_t, const GridTime& t) {
    if (t.is_zero()) throw ParameterError("xi is only defined for t > 0");
    const int k = static_cast<int>(t.step());
    return RandomVariable::from_function(space_at_t, [k](const Path& w) { return 2.0 * w.bit(k) - 1.0; });
}

const char* to_string(ArrowKind kind) {
    switch (kind) {
        case ArrowKind::identity: return "identity";
        case ArrowKind::full: return "full";
        case ArrowKind::drop: return "drop";
        case ArrowKind::custom: return "custom";
    }
    return "?";
}

Filtration::Filtration(int N, GridTime horizon, std::vector<SpacePtr> spaces, Rule rule, KindFn kind,
                       std::string name)
    : N_(N), horizon_(horizon), spaces_(std::move(spaces)), rule_(std::move(rule)), kind_(std::move(kind)),
      name_(std::move(name)) {
    if (horizon_.resolution() != N_) throw ResolutionError("filtration horizon must be at resolution N");
    if (spaces_.size() != static_cast<std::size_t>(horizon_.step() + 1)) {
        throw ParameterError("filtration needs one space per grid time up to the horizon");
    }
    if (!rule_ || !kind_) throw ParameterError("filtration needs a rule and a kind function");
}

std::vector<GridTime> Filtration::times() const {
    return grid_points(IntervalKind::closed, GridTime(0, N_), horizon_);
}

void Filtration::require_in_range(const GridTime& t) const {
    if (t.resolution() != N_) throw ResolutionError("time " + t.to_string() + " is not at the filtration's resolution");
    if (t > horizon_) throw OrderingError("time " + t.to_string() + " is past the horizon " + horizon_.to_string());
}

const SpacePtr& Filtration::space_at(const GridTime& t) const {
    require_in_range(t);
    return spaces_[static_cast<std::size_t>(t.step())];
}

ProbMorphism Filtration::morphism_at(const TimeArrow& a) const {
    const auto& src = space_at(a.source);
    const auto& tgt = space_at(a.target);
    return ProbMorphism::from_function(src, tgt, [&](const Path& w) { return rule_(a.target, a.source, w); });
}

ArrowKind Filtration::kind(const GridTime& s, const GridTime& t) const {
    if (s == t) return ArrowKind::identity;
    return kind_(s, t);
}

Filtration Filtration::with_spaces(std::vector<SpacePtr> spaces, std::string name) const {
    return Filtration(N_, horizon_, std::move(spaces), rule_, kind_, std::move(name));
}

std::vector<SpacePtr> build_spaces(int N, const GridTime& horizon, const BernoulliParams& params) {
    std::vector<SpacePtr> spaces;
    for (const auto& t : grid_points(IntervalKind::closed, GridTime(0, N), horizon)) {
        spaces.push_back(build_space(N, t, params));
    }
    return spaces;
}

ProbMorphism full_map(const Filtration& F, const GridTime& s, const GridTime& t) {
    const auto a = arrow(s, t);
    return ProbMorphism::from_function(F.space_at(t), F.space_at(s), [&](const Path& w) { return restrict_path(w, a.target); });
}

ProbMorphism drop_map(const Filtration& F, const GridTime& s, const GridTime& t) {
    const auto a = arrow(s, t);
    if (s.is_zero()) throw ParameterError("drop is undefined at time 0: there is no coordinate to forget");
    return ProbMorphism::from_function(F.space_at(t), F.space_at(s), [&](const Path& w) { return drop_path(w, a.target); });
}

Filtration make_full_filtration(int N, const BernoulliParams& params, const GridTime& horizon) {
    return Filtration(
        N, horizon, build_spaces(N, horizon, params),
        [](const GridTime& s, const GridTime&, const Path& w) { return restrict_path(w, s); },
        [](const GridTime&, const GridTime&) { return ArrowKind::full; }, "full");
}

Filtration make_drop_filtration(int N, const BernoulliParams& params, const GridTime& alpha, const GridTime& beta,
                                const GridTime& horizon) {
    if (alpha > beta) throw OrderingError("drop window needs alpha <= beta");
    if (alpha.is_zero()) throw ParameterError("drop window must start after time 0");
    auto dropped = [alpha, beta](const GridTime& s, const GridTime& t) { return s != t && alpha <= s && s <= beta; };
    return Filtration(
        N, horizon, build_spaces(N, horizon, params),
        [dropped](const GridTime& s, const GridTime& t, const Path& w) {
            return dropped(s, t) ? drop_path(w, s) : restrict_path(w, s);
        },
        [dropped](const GridTime& s, const GridTime& t) { return dropped(s, t) ? ArrowKind::drop : ArrowKind::full; },
        "drop[" + alpha.to_string() + "," + beta.to_string() + "]");
}

Filtration make_step_filtration(int N, const BernoulliParams& params, const GridTime& horizon, StepRule step,
                                std::function<ArrowKind(const GridTime& t)> step_kind, std::string name) {
    auto rule = [step](const GridTime& s, const GridTime& t, const Path& w) {
        Path cur = w;
        for (GridTime tau = t; tau > s; tau = tau.prev()) cur = step(tau, cur);
        return cur;
    };
    auto kind = [step_kind](const GridTime& s, const GridTime& t) {
        if (t == s.next()) return step_kind(t);
        for (GridTime tau = t; tau > s; tau = tau.prev()) {
            if (step_kind(tau) != ArrowKind::full) return ArrowKind::custom;
        }
        return ArrowKind::full;
    };
    return Filtration(N, horizon, build_spaces(N, horizon, params), std::move(rule), std::move(kind), std::move(name));
}

std::vector<Path> fiber_I(int j, const Path& omega, const ProbMorphism& one_step) {
    std::vector<Path> out;
    const auto target_index = one_step.target()->require_index(omega);
    for (std::size_t i : one_step.preimage(target_index)) {
        const Path& w = one_step.source()->outcome(i);
        if (w.length() > 0 && w.last_bit() == j) out.push_back(w);
    }
    return out;
}

const char* to_string(LawViolation::Kind kind) {
    switch (kind) {
        case LawViolation::Kind::unit: return "unit";
        case LawViolation::Kind::composition: return "composition";
        case LawViolation::Kind::null_preservation: return "null_preservation";
        case LawViolation::Kind::out_of_space: return "out_of_space";
    }
    return "?";
}

FunctorLawReport check_functor_laws(const Filtration& F, const GridTime& horizon, double eps) {
    FunctorLawReport report;
    const GridTime H = std::min(horizon, F.horizon());
    const auto times = grid_points(IntervalKind::closed, GridTime(0, F.resolution()), H);

    for (const auto& t : times) {
        for (const auto& w : F.space_at(t)->outcomes()) {
            ++report.unit_checks;
            const Path img = F.apply(t, t, w);
            if (img != w) {
                report.violations.push_back({LawViolation::Kind::unit, t, t, t, w,
                                             "f(t,t) sends " + w.to_string() + " to " + img.to_string()});
            }
        }
    }

    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t k = i; k < times.size(); ++k) {
            const auto& s = times[i];
            const auto& t = times[k];
            bool typed = true;
            for (const auto& w : F.space_at(t)->outcomes()) {
                const Path img = F.apply(s, t, w);
                if (!F.space_at(s)->contains(img)) {
                    typed = false;
                    report.violations.push_back({LawViolation::Kind::out_of_space, s, t, t, w,
                                                 "image " + img.to_string() + " is not an outcome at " + s.to_string()});
                }
            }
            if (!typed) continue;
            ++report.null_checks;
            const auto np = is_null_preserving(F.morphism_at(arrow(s, t)), eps);
            if (!np.ok) {
                report.violations.push_back({LawViolation::Kind::null_preservation, s, t, t, *np.witness,
                                             "null outcome receives mass " + std::to_string(np.pulled_back_mass)});
            }
        }
    }

    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t j = i; j < times.size(); ++j) {
            for (std::size_t k = j; k < times.size(); ++k) {
                const auto& s = times[i];
                const auto& t = times[j];
                const auto& u = times[k];
                for (const auto& w : F.space_at(u)->outcomes()) {
                    ++report.composition_checks;
                    const Path direct = F.apply(s, u, w);
                    const Path stepwise = F.apply(s, t, F.apply(t, u, w));
                    if (direct != stepwise) {
                        report.violations.push_back({LawViolation::Kind::composition, s, t, u, w,
                                                     "f(s,t)∘f(t,u) gives " + stepwise.to_string() + ", f(s,u) gives " +
                                                         direct.to_string()});
                    }
                }
            }
        }
    }
    return report;
}

bool same_filtration(const Filtration& a, const Filtration& b, const GridTime& horizon, double tol) {
    if (a.resolution() != b.resolution()) return false;
    const auto times = grid_points(IntervalKind::closed, GridTime(0, a.resolution()), horizon);
    for (const auto& t : times) {
        if (!a.space_at(t)->equals(*b.space_at(t), tol)) return false;
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t k = i; k < times.size(); ++k) {
            for (const auto& w : a.space_at(times[k])->outcomes()) {
                if (a.apply(times[i], times[k], w) != b.apply(times[i], times[k], w)) return false;
            }
        }
    }
    return true;
}

}  // namespace genfil
