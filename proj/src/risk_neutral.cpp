#include "genfil/risk_neutral.hpp"

#include "genfil/errors.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace genfil {

namespace {

std::vector<SpacePtr> measures_until(const QFunction& q, const GridTime& horizon) {
    std::vector<SpacePtr> out;
    for (const auto& t : grid_points(IntervalKind::closed, GridTime(0, q.resolution()), horizon)) {
        out.push_back(q.measure_at(t));
    }
    return out;
}

void require_dense(const SpacePtr& space, std::size_t k) {
    if (!space->dense() || space->size() != (std::size_t{1} << k)) {
        throw ParameterError(fmt::format("measure at step {} must cover all paths of length {}", k, k));
    }
}

}  // namespace

MartingaleConstants martingale_constants(const MarketParams& params) {
    params.validate();
    return {params.up_factor() / params.growth(), params.down_factor() / params.growth()};
}

QPair q_star(const MarketParams& params) {
    params.validate();
    const double bound = params.arbitrage_bound();
    const double excess = params.mu - params.r;
    if (!params.strictly_inside_bound()) {
        throw NoArbitrageBoundError(fmt::format(
            "|mu - r| = {} is not below 2^(N/2) sigma = {}; no risk-neutral probability in (0,1)", std::abs(excess), bound));
    }
    const double q1 = 0.5 - excess / (std::pow(2.0, 0.5 * params.N + 1.0) * params.sigma);
    return {q1, 1.0 - q1};
}

QFunction::QFunction(int N, GridTime horizon) : N_(N), horizon_(horizon) {
    if (horizon_.resolution() != N_) throw ResolutionError("q horizon must be at resolution N");
    if (horizon_.step() > max_bits()) {
        throw SizeError(fmt::format("q needs {} bits, above the enumeration cap of {}", horizon_.step(), max_bits()));
    }
    for (std::int64_t k = 1; k <= horizon_.step(); ++k) q_.emplace_back(std::size_t{1} << k, 0.5);
}

QFunction QFunction::constant(int N, const GridTime& horizon, double q1) {
    if (!(q1 >= 0.0 && q1 <= 1.0)) throw ParameterError("q must lie in [0,1]");
    QFunction q(N, horizon);
    for (auto& layer : q.q_) {
        for (std::size_t code = 0; code < layer.size(); ++code) layer[code] = (code & 1U) ? q1 : 1.0 - q1;
    }
    return q;
}

double QFunction::at(const Path& w) const {
    if (w.length() == 0 || w.length() > horizon_.step()) {
        throw ParameterError("q is defined on paths of length 1.." + std::to_string(horizon_.step()));
    }
    return q_[static_cast<std::size_t>(w.length() - 1)][static_cast<std::size_t>(w.code())];
}

double QFunction::at(const GridTime& t, const Path& w) const {
    if (t.resolution() != N_) throw ResolutionError("q queried at a time of another resolution");
    if (w.length() != t.step()) throw ParameterError("path " + w.to_string() + " does not end at t=" + t.to_string());
    return at(w);
}

void QFunction::set_pair(const Path& parent, double q1) {
    if (!(q1 >= 0.0 && q1 <= 1.0)) throw ParameterError(fmt::format("q({}1) = {} is outside [0,1]", parent.to_string(), q1));
    if (parent.length() >= horizon_.step()) throw ParameterError("no transition below " + parent.to_string() + " within the horizon");
    auto& layer = q_[static_cast<std::size_t>(parent.length())];
    layer[static_cast<std::size_t>(parent.append(1).code())] = q1;
    layer[static_cast<std::size_t>(parent.append(0).code())] = 1.0 - q1;
}

SpacePtr QFunction::measure_at(const GridTime& t) const {
    if (t.resolution() != N_) throw ResolutionError("measure queried at a time of another resolution");
    if (t > horizon_) throw OrderingError("measure queried past the q horizon");
    std::vector<double> mass{1.0};
    for (std::int64_t k = 1; k <= t.step(); ++k) {
        const auto& layer = q_[static_cast<std::size_t>(k - 1)];
        std::vector<double> next(layer.size());
        for (std::size_t code = 0; code < next.size(); ++code) next[code] = mass[code >> 1U] * layer[code];
        mass = std::move(next);
    }
    std::vector<Path> outcomes;
    outcomes.reserve(mass.size());
    for (std::size_t code = 0; code < mass.size(); ++code) outcomes.emplace_back(code, static_cast<int>(t.step()));
    return std::make_shared<const FinProbSpace>(std::move(outcomes), std::move(mass));
}

RiskNeutralFiltration::RiskNeutralFiltration(Filtration base, QFunction q)
    : base_(std::move(base)), q_(std::move(q)),
      filtration_(base_.with_spaces(measures_until(q_, base_.horizon()), "rn:" + base_.name())) {
    if (q_.resolution() != base_.resolution() || q_.horizon() != base_.horizon()) {
        throw ParameterError("q and base filtration must share resolution and horizon");
    }
}

RiskNeutralFiltration build_rn_full(const Filtration& base, const MarketParams& params) {
    for (GridTime t(0, base.resolution()); t < base.horizon(); t = t.next()) {
        if (base.kind(t, t.next()) != ArrowKind::full) {
            throw ParameterError("build_rn_full needs full one-step arrows; arrow into " + t.to_string() + " is " +
                                 to_string(base.kind(t, t.next())));
        }
    }
    const auto qs = q_star(params);
    return RiskNeutralFiltration(base, QFunction::constant(base.resolution(), base.horizon(), qs.q1));
}

RiskNeutralFiltration build_rn_drop(const Filtration& base, const MarketParams& params, const FreeQ& free) {
    const int N = base.resolution();
    const GridTime H = base.horizon();
    for (GridTime t(0, N); t < H; t = t.next()) {
        const auto k = base.kind(t, t.next());
        if (k != ArrowKind::full && k != ArrowKind::drop) {
            throw ParameterError(std::string("risk-neutral construction supports full and drop arrows only; arrow into ") +
                                 t.to_string() + " is " + to_string(k));
        }
    }
    for (const auto& [node, value] : free) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw ParameterError(fmt::format("free q({}) = {} is outside [0,1]", node.to_string(), value));
        }
        if (node.length() == 0 || node.last_bit() != 1) {
            throw ParameterError("free q keys are paths ending in 1, got " + node.to_string());
        }
        if (node.length() > H.step()) throw ParameterError("free q key " + node.to_string() + " is past the horizon");
    }

    const auto qs = q_star(params);
    QFunction q = QFunction::constant(N, H, qs.q1);
    std::size_t used = 0;
    std::vector<double> mass{1.0};
    for (GridTime u(0, N); u < H; u = u.next()) {
        const GridTime child_time = u.next();
        const bool lands_on_drop = child_time < H && base.kind(child_time, child_time.next()) == ArrowKind::drop;
        std::vector<double> next(mass.size() * 2);
        for (std::size_t code = 0; code < mass.size(); ++code) {
            const Path parent(code, static_cast<int>(u.step()));
            double q1 = qs.q1;
            const auto key = free.find(parent.append(1));
            if (mass[code] <= kMassTolerance) {
                if (key != free.end()) {
                    q1 = key->second;
                    ++used;
                }
            } else if (key != free.end()) {
                throw ParameterError("free q key " + key->first.to_string() + " is not below an invisible node");
            } else if (lands_on_drop) {
                q1 = 0.0;
            }
            q.set_pair(parent, q1);
            next[2 * code + 1] = mass[code] * q1;
            next[2 * code] = mass[code] * (1.0 - q1);
        }
        mass = std::move(next);
    }
    if (used != free.size()) throw ParameterError("some free q keys do not name an invisible node");
    return RiskNeutralFiltration(base, std::move(q));
}

MartingaleReport martingale_check(const RiskNeutralFiltration& rn, const MarketParams& params, const GridTime& horizon,
                                  double eps) {
    const auto& F = rn.filtration();
    const auto c = martingale_constants(params);
    const auto Sd = discounted_stock(F, params, horizon);
    MartingaleReport report;
    for (GridTime t(0, F.resolution()); t < horizon; t = t.next()) {
        const auto m = F.one_step(t);
        const auto& src = *m.source();
        const auto& tgt = *m.target();
        std::vector<double> i1(tgt.size(), 0.0), i0(tgt.size(), 0.0);
        for (std::size_t i = 0; i < src.size(); ++i) {
            (src.outcome(i).last_bit() ? i1 : i0)[m.image_index(i)] += src.weight(i);
        }
        std::optional<RandomVariable> expected;
        try {
            expected = conditional_expectation(Sd.at(t.next()), m);
        } catch (const NullPreservationError& e) {
            report.note = fmt::format("arrow into t={} is not null-preserving under Q: {}", t.to_string(), e.what());
        }
        for (std::size_t j = 0; j < tgt.size(); ++j) {
            ++report.nodes_checked;
            MartingaleNode node{t, tgt.outcome(j), tgt.weight(j), tgt.weight(j) - c.c1 * i1[j] - c.c0 * i0[j], {}};
            bool failed = std::abs(node.iiff_residual) > eps;
            report.max_iiff_residual = std::max(report.max_iiff_residual, std::abs(node.iiff_residual));
            if (tgt.weight(j) > kMassTolerance) {
                node.direct_residual =
                    expected ? (*expected)[j] - Sd.at(t)[j] : std::numeric_limits<double>::quiet_NaN();
                const double r = std::abs(*node.direct_residual);
                if (!(r <= eps)) failed = true;
                if (!std::isnan(r)) report.max_direct_residual = std::max(report.max_direct_residual, r);
            }
            if (failed) report.failures.push_back(std::move(node));
        }
    }
    return report;
}

QcondReport qcond_equivalences(const std::vector<SpacePtr>& measures, int N, double eps) {
    QcondReport report;
    for (std::size_t k = 0; k < measures.size(); ++k) require_dense(measures[k], k);
    if (!measures.empty() && std::abs(measures[0]->weight(0) - 1.0) > eps) {
        throw ParameterError("the measure at time 0 must put mass 1 on the root");
    }
    for (std::size_t k = 0; k + 1 < measures.size(); ++k) {
        const auto& parent = measures[k];
        const auto& child = measures[k + 1];
        const GridTime t(static_cast<std::int64_t>(k), N);

        // (1) sibling sums
        for (std::size_t code = 0; code < parent->size(); ++code) {
            const double r = child->weight(2 * code) + child->weight(2 * code + 1) - parent->weight(code);
            if (std::abs(r) > eps) {
                report.sibling_sums = false;
                report.sibling_witnesses.push_back({t, parent->outcome(code), r});
            }
        }

        // (2) full is measure-preserving
        const auto restriction = ProbMorphism::from_function(child, parent, [&](const Path& w) { return restrict_path(w, t); });
        const auto pushed = pushforward(restriction);
        for (std::size_t code = 0; code < parent->size(); ++code) {
            const double r = pushed[code] - parent->weight(code);
            if (std::abs(r) > eps) {
                report.full_preserving = false;
                report.full_witnesses.push_back({t, parent->outcome(code), r});
            }
        }

        // (3) product form: q from ratios, pair sums 1, and the product reproduces Q
        for (std::size_t code = 0; code < parent->size(); ++code) {
            const double base = parent->weight(code);
            for (std::size_t d = 0; d < 2; ++d) {
                const std::size_t c = 2 * code + d;
                const double reproduced = base > eps ? base * (child->weight(c) / base) : 0.0;
                const double r = reproduced - child->weight(c);
                if (std::abs(r) > eps) {
                    report.product_form = false;
                    report.product_witnesses.push_back({t.next(), child->outcome(c), r});
                }
            }
            if (base > eps) {
                const double q1 = child->weight(2 * code + 1) / base;
                const double q0 = child->weight(2 * code) / base;
                const double r = q0 + q1 - 1.0;
                if (std::abs(r) > eps || q1 > 1.0 + eps || q0 > 1.0 + eps) {
                    report.product_form = false;
                    report.product_witnesses.push_back({t, parent->outcome(code), r});
                }
            }
        }
    }
    return report;
}

QcondReport qcond_equivalences(const RiskNeutralFiltration& rn, const GridTime& horizon, double eps) {
    return qcond_equivalences(measures_until(rn.q(), horizon), rn.base().resolution(), eps);
}

NullPreservingReport verify_null_preserving_under_Q(const RiskNeutralFiltration& rn, const GridTime& horizon,
                                                    double eps) {
    const auto& F = rn.filtration();
    NullPreservingReport report;
    const auto times = grid_points(IntervalKind::closed, GridTime(0, F.resolution()), horizon);
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t k = i; k < times.size(); ++k) {
            ++report.arrows_checked;
            const auto np = is_null_preserving(F.morphism_at(arrow(times[i], times[k])), eps);
            if (!np.ok) report.violations.push_back({times[i], times[k], *np.witness, np.pulled_back_mass});
        }
    }
    return report;
}

std::vector<std::pair<GridTime, Path>> equivalence_witnesses(const RiskNeutralFiltration& rn, const GridTime& horizon,
                                                             double eps) {
    std::vector<std::pair<GridTime, Path>> out;
    for (const auto& t : grid_points(IntervalKind::closed, GridTime(0, rn.base().resolution()), horizon)) {
        const auto& P = *rn.base().space_at(t);
        const auto& Q = *rn.filtration().space_at(t);
        for (std::size_t i = 0; i < P.size(); ++i) {
            if (Q.weight_of(P.outcome(i)) <= eps && P.weight(i) > eps) out.emplace_back(t, P.outcome(i));
        }
    }
    return out;
}

}  // namespace genfil
