#include "genfil/prob_core.hpp"

#include "genfil/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace genfil {

namespace {

bool same_outcomes(const FinProbSpace& a, const FinProbSpace& b) {
    return std::ranges::equal(a.outcomes(), b.outcomes());
}

void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
    if (a == b) return;
    if (!same_outcomes(*a, *b)) throw ParameterError(std::string(what) + ": spaces have different outcome sets");
}

}  // namespace

FinProbSpace::FinProbSpace(std::vector<Path> outcomes, std::vector<double> weights, double mass_tolerance)
    : outcomes_(std::move(outcomes)), weights_(std::move(weights)) {
    if (outcomes_.empty()) throw ParameterError("a probability space needs at least one outcome");
    if (outcomes_.size() != weights_.size()) throw ParameterError("outcome and weight counts differ");
    if (!std::ranges::is_sorted(outcomes_) ||
        std::ranges::adjacent_find(outcomes_) != outcomes_.end()) {
        throw ParameterError("outcomes must be sorted and unique");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) throw ParameterError("negative or NaN outcome weight");
        total += w;
    }
    if (std::abs(total - 1.0) > mass_tolerance) {
        throw ParameterError("weights sum to " + std::to_string(total) + ", not 1");
    }
    const int len = outcomes_.front().length();
    dense_ = len < 63 && outcomes_.size() == (std::size_t{1} << len) &&
             outcomes_.back().length() == len;
}

std::optional<std::size_t> FinProbSpace::index_of(const Path& p) const {
    if (dense_) {
        if (p.length() != outcomes_.front().length()) return std::nullopt;
        return static_cast<std::size_t>(p.code());
    }
    auto it = std::ranges::lower_bound(outcomes_, p);
    if (it == outcomes_.end() || *it != p) return std::nullopt;
    return static_cast<std::size_t>(it - outcomes_.begin());
}

std::size_t FinProbSpace::require_index(const Path& p) const {
    auto i = index_of(p);
    if (!i) throw ParameterError("path " + p.to_string() + " is not an outcome of this space");
    return *i;
}

double FinProbSpace::weight_of(const Path& p) const { return weights_[require_index(p)]; }

bool FinProbSpace::equals(const FinProbSpace& other, double tol) const {
    if (!same_outcomes(*this, other)) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (std::abs(weights_[i] - other.weights_[i]) > tol) return false;
    }
    return true;
}

ProbMorphism::ProbMorphism(SpacePtr source, SpacePtr target, std::vector<std::size_t> map)
    : source_(std::move(source)), target_(std::move(target)), map_(std::move(map)) {
    if (!source_ || !target_) throw ParameterError("morphism needs both spaces");
    if (map_.size() != source_->size()) throw ParameterError("morphism must be total on its source");
    for (std::size_t j : map_) {
        if (j >= target_->size()) throw ParameterError("morphism image index out of range");
    }
}

ProbMorphism ProbMorphism::from_function(SpacePtr source, SpacePtr target,
                                         const std::function<Path(const Path&)>& fn) {
    std::vector<std::size_t> map(source->size());
    for (std::size_t i = 0; i < source->size(); ++i) {
        const Path img = fn(source->outcome(i));
        auto j = target->index_of(img);
        if (!j) {
            throw ParameterError("map sends " + source->outcome(i).to_string() + " to " + img.to_string() +
                                 ", which is not an outcome of the target");
        }
        map[i] = *j;
    }
    return ProbMorphism(std::move(source), std::move(target), std::move(map));
}

ProbMorphism ProbMorphism::identity(SpacePtr space) {
    std::vector<std::size_t> map(space->size());
    std::iota(map.begin(), map.end(), std::size_t{0});
    return ProbMorphism(space, space, std::move(map));
}

std::vector<std::size_t> ProbMorphism::preimage(std::size_t target_index) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < map_.size(); ++i) {
        if (map_[i] == target_index) out.push_back(i);
    }
    return out;
}

ProbMorphism compose(const ProbMorphism& outer, const ProbMorphism& inner) {
    require_same_space(inner.target(), outer.source(), "compose");
    std::vector<std::size_t> map(inner.source()->size());
    for (std::size_t i = 0; i < map.size(); ++i) map[i] = outer.image_index(inner.image_index(i));
    return ProbMorphism(inner.source(), outer.target(), std::move(map));
}

RandomVariable::RandomVariable(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw ParameterError("random variable needs a space");
    if (values_.size() != space_->size()) throw ParameterError("random variable must be total on its space");
}

RandomVariable RandomVariable::from_function(SpacePtr space, const std::function<double(const Path&)>& fn) {
    std::vector<double> v(space->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(space->outcome(i));
    return RandomVariable(std::move(space), std::move(v));
}

RandomVariable RandomVariable::constant(SpacePtr space, double c) {
    std::vector<double> v(space->size(), c);
    return RandomVariable(std::move(space), std::move(v));
}

std::vector<double> pushforward(const ProbMorphism& m) {
    std::vector<double> mass(m.target()->size(), 0.0);
    const auto& src = *m.source();
    for (std::size_t i = 0; i < src.size(); ++i) mass[m.image_index(i)] += src.weight(i);
    return mass;
}

NullPreservation is_null_preserving(const ProbMorphism& m, double eps) {
    const auto mass = pushforward(m);
    const auto& tgt = *m.target();
    for (std::size_t j = 0; j < tgt.size(); ++j) {
        if (tgt.weight(j) <= eps && mass[j] > eps) {
            return NullPreservation{false, tgt.outcome(j), mass[j]};
        }
    }
    return {};
}

RandomVariable conditional_expectation(const RandomVariable& x, const ProbMorphism& m, double eps) {
    require_same_space(x.space(), m.source(), "conditional_expectation");
    if (auto np = is_null_preserving(m, eps); !np.ok) {
        throw NullPreservationError("morphism is not null-preserving: target outcome " + np.witness->to_string() +
                                        " is null but receives mass " + std::to_string(np.pulled_back_mass),
                                    np.witness->to_string());
    }
    const auto& src = *m.source();
    const auto& tgt = *m.target();
    std::vector<double> integral(tgt.size(), 0.0);
    for (std::size_t i = 0; i < src.size(); ++i) integral[m.image_index(i)] += x[i] * src.weight(i);
    std::vector<double> y(tgt.size(), 0.0);
    for (std::size_t j = 0; j < tgt.size(); ++j) {
        if (tgt.weight(j) > eps) y[j] = integral[j] / tgt.weight(j);
    }
    return RandomVariable(m.target(), std::move(y));
}

double expectation(const RandomVariable& x) {
    const auto& sp = *x.space();
    double total = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) total += x[i] * sp.weight(i);
    return total;
}

}  // namespace genfil
