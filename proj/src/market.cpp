#include "genfil/market.hpp"

#include "genfil/errors.hpp"

#include <cmath>
#include <fmt/format.h>

namespace genfil {

namespace {

void require_horizon(const Filtration& F, const GridTime& horizon) {
    if (horizon.resolution() != F.resolution()) throw ResolutionError("horizon resolution differs from the filtration's");
    if (horizon > F.horizon()) throw OrderingError("horizon " + horizon.to_string() + " is past the filtration's horizon");
}

void require_resolution(const Filtration& F, const MarketParams& params) {
    if (params.N != F.resolution()) throw ResolutionError("market resolution differs from the filtration's");
}

/// x_{t} = (x_{t-δ} ∘ f_{t-δ,t}) * factor(ω) built slice by slice.
template <class Factor>
AdaptedProcess propagate(const Filtration& F, const GridTime& horizon, double initial, Factor factor) {
    AdaptedProcess out;
    out.slices.push_back(RandomVariable::constant(F.space_at(GridTime(0, F.resolution())), initial));
    for (GridTime t(1, F.resolution()); t <= horizon; t = t.next()) {
        const auto step = F.one_step(t.prev());
        const auto& prev = out.slices.back();
        const auto& space = *step.source();
        std::vector<double> v(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) v[i] = prev[step.image_index(i)] * factor(t, space.outcome(i));
        out.slices.emplace_back(step.source(), std::move(v));
    }
    return out;
}

std::size_t slot(const GridTime& t) { return static_cast<std::size_t>(t.step() - 1); }

}  // namespace

double MarketParams::delta() const { return std::ldexp(1.0, -N); }
double MarketParams::sqrt_delta() const { return std::pow(2.0, -0.5 * N); }
double MarketParams::arbitrage_bound() const { return std::pow(2.0, 0.5 * N) * sigma; }

bool MarketParams::strictly_inside_bound() const {
    const double bound = arbitrage_bound();
    return std::abs(mu - r) < bound * (1.0 - 1e-12);
}

void MarketParams::validate() const {
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
    if (!(r > -1.0)) throw ParameterError("r must exceed -1");
    if (!(mu > sigma - 1.0)) throw ParameterError("mu must exceed sigma - 1");
    if (!(s0 > 0.0)) throw ParameterError("s0 must be positive");
    if (N < 0) throw ParameterError("resolution must be non-negative");
    if (!(down_factor() > 0.0)) {
        throw ParameterError(fmt::format("down factor 1 + 2^-N mu - 2^(-N/2) sigma = {} is not positive at N = {}",
                                         down_factor(), N));
    }
}

Strategy Strategy::zero(int N, const GridTime& horizon) {
    Strategy s;
    s.N = N;
    s.horizon = horizon;
    for (std::int64_t k = 1; k <= horizon.step(); ++k) {
        const std::size_t n = std::size_t{1} << (k - 1);
        s.phi.emplace_back(n, 0.0);
        s.psi.emplace_back(n, 0.0);
    }
    return s;
}

double Strategy::phi_at(const GridTime& t, const Path& w) const {
    if (!covers(t)) throw ParameterError("no portfolio defined at t=" + t.to_string());
    return phi.at(slot(t)).at(static_cast<std::size_t>(w.code()));
}

double Strategy::psi_at(const GridTime& t, const Path& w) const {
    if (!covers(t)) throw ParameterError("no portfolio defined at t=" + t.to_string());
    return psi.at(slot(t)).at(static_cast<std::size_t>(w.code()));
}

void Strategy::set(const GridTime& t, const Path& w, double phi_value, double psi_value) {
    if (!covers(t)) throw ParameterError("no portfolio slot at t=" + t.to_string());
    phi.at(slot(t)).at(static_cast<std::size_t>(w.code())) = phi_value;
    psi.at(slot(t)).at(static_cast<std::size_t>(w.code())) = psi_value;
}

AdaptedProcess stock_process(const Filtration& F, const MarketParams& params, const GridTime& horizon) {
    params.validate();
    require_resolution(F, params);
    require_horizon(F, horizon);
    const double drift = 1.0 + params.delta() * params.mu;
    const double vol = params.sqrt_delta() * params.sigma;
    return propagate(F, horizon, params.s0, [&](const GridTime& t, const Path& w) {
        const double x = 2.0 * w.bit(static_cast<int>(t.step())) - 1.0;
        return drift + vol * x;
    });
}

AdaptedProcess bond_process(const Filtration& F, const MarketParams& params, const GridTime& horizon) {
    params.validate();
    require_resolution(F, params);
    require_horizon(F, horizon);
    const double g = params.growth();
    return propagate(F, horizon, 1.0, [g](const GridTime&, const Path&) { return g; });
}

AdaptedProcess discounted_stock(const Filtration& F, const MarketParams& params, const GridTime& horizon) {
    const auto S = stock_process(F, params, horizon);
    const auto b = bond_process(F, params, horizon);
    AdaptedProcess out;
    for (std::size_t k = 0; k < S.slices.size(); ++k) {
        const auto& s = S.slices[k];
        std::vector<double> v(s.values().size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = s[i] / b.slices[k][i];
        out.slices.emplace_back(s.space(), std::move(v));
    }
    return out;
}

AdaptedProcess portfolio_value(const Strategy& strat, const Filtration& F, const MarketParams& params,
                               const GridTime& horizon) {
    if (!strat.covers(GridTime(1, F.resolution())) || strat.horizon < horizon) {
        throw ParameterError("strategy has no portfolio for some time up to " + horizon.to_string());
    }
    const auto S = stock_process(F, params, horizon);
    const auto b = bond_process(F, params, horizon);
    const int N = F.resolution();
    AdaptedProcess V;
    const GridTime first(1, N);
    const Path root;
    V.slices.push_back(RandomVariable::constant(
        F.space_at(GridTime(0, N)), S.slices[0][0] * strat.phi_at(first, root) + b.slices[0][0] * strat.psi_at(first, root)));
    for (GridTime t = first; t <= horizon; t = t.next()) {
        const auto step = F.one_step(t.prev());
        const auto& space = *step.source();
        const auto& St = S.at(t);
        const auto& bt = b.at(t);
        std::vector<double> v(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) {
            const Path& prev = step.image(i);
            v[i] = St[i] * strat.phi_at(t, prev) + bt[i] * strat.psi_at(t, prev);
        }
        V.slices.emplace_back(step.source(), std::move(v));
    }
    return V;
}

AdaptedProcess gain_process(const Strategy& strat, const Filtration& F, const MarketParams& params,
                            const GridTime& horizon) {
    const auto V = portfolio_value(strat, F, params, horizon);
    const auto S = stock_process(F, params, horizon);
    const auto b = bond_process(F, params, horizon);
    AdaptedProcess G;
    G.slices.push_back(RandomVariable::constant(V.slices[0].space(), -V.slices[0][0]));
    for (GridTime t(1, F.resolution()); t <= horizon; t = t.next()) {
        const auto& Vt = V.at(t);
        const auto& space = *Vt.space();
        std::vector<double> g(space.size());
        const bool holds_next = strat.covers(t.next());
        for (std::size_t i = 0; i < space.size(); ++i) {
            double next_cost = 0.0;
            if (holds_next) {
                const Path& w = space.outcome(i);
                next_cost = S.at(t)[i] * strat.phi_at(t.next(), w) + b.at(t)[i] * strat.psi_at(t.next(), w);
            }
            g[i] = Vt[i] - next_cost;
        }
        G.slices.emplace_back(Vt.space(), std::move(g));
    }
    return G;
}

SelfFinancingReport is_self_financing(const Strategy& strat, const Filtration& F, const MarketParams& params,
                                      const GridTime& horizon, double eps, const NodeFilter& filter) {
    const auto V = portfolio_value(strat, F, params, horizon);
    const auto S = stock_process(F, params, horizon);
    const auto b = bond_process(F, params, horizon);
    SelfFinancingReport report;
    for (GridTime t(1, F.resolution()); t < horizon; t = t.next()) {
        if (!strat.covers(t.next())) break;
        const auto& space = *V.at(t).space();
        for (std::size_t i = 0; i < space.size(); ++i) {
            const Path& w = space.outcome(i);
            if (filter && !filter(t, w)) continue;
            ++report.nodes_checked;
            const double cost = S.at(t)[i] * strat.phi_at(t.next(), w) + b.at(t)[i] * strat.psi_at(t.next(), w);
            const double residual = cost - V.at(t)[i];
            report.max_residual = std::max(report.max_residual, std::abs(residual));
            if (std::abs(residual) > eps) report.violations.push_back({t, w, residual});
        }
    }
    return report;
}

ArbitrageResult detect_arbitrage(const Filtration& F, const MarketParams& params, const GridTime& horizon) {
    params.validate();
    ArbitrageResult result;
    const double bound = params.arbitrage_bound();
    const double excess = params.mu - params.r;
    if (params.strictly_inside_bound()) {
        result.status = ArbitrageResult::Status::within_bound;
        result.message = fmt::format("no arbitrage constructed; |mu-r| = {} < 2^(N/2) sigma = {}", std::abs(excess), bound);
        return result;
    }
    if (horizon.is_zero()) throw ParameterError("an arbitrage strategy needs at least one trading step");

    const double direction = excess > 0.0 ? 1.0 : -1.0;
    const auto S = stock_process(F, params, horizon);
    const auto b = bond_process(F, params, horizon);
    Strategy strat = Strategy::zero(F.resolution(), horizon);
    for (GridTime t(0, F.resolution()); t < horizon; t = t.next()) {
        const auto& space = *S.at(t).space();
        for (std::size_t i = 0; i < space.size(); ++i) {
            strat.set(t.next(), space.outcome(i), direction, -(S.at(t)[i] / b.at(t)[i]) * direction);
        }
    }

    bool trivial = true;
    for (GridTime t(0, F.resolution()); t <= horizon; t = t.next()) {
        for (double w : F.space_at(t)->weights()) {
            if (w > kMassTolerance && w < 1.0 - kMassTolerance) trivial = false;
        }
    }
    result.status = ArbitrageResult::Status::constructed;
    result.trivial_filtration = trivial;
    result.verified = is_arbitrage(strat, F, params, horizon);
    result.message = fmt::format("{} arbitrage constructed; |mu-r| = {} >= 2^(N/2) sigma = {}",
                                 direction > 0 ? "long" : "short", std::abs(excess), bound);
    if (trivial) result.message += "; warning: filtration is trivial, positivity-probability condition unverifiable";
    result.strategy = std::move(strat);
    return result;
}

bool is_arbitrage(const Strategy& strat, const Filtration& F, const MarketParams& params, const GridTime& horizon,
                  double eps) {
    const auto G = gain_process(strat, F, params, horizon);
    bool some_positive = false;
    for (const auto& g : G.slices) {
        const auto& space = *g.space();
        for (std::size_t i = 0; i < space.size(); ++i) {
            if (space.weight(i) <= kMassTolerance) continue;
            if (g[i] < -eps) return false;
            if (g[i] > eps) some_positive = true;
        }
    }
    return some_positive;
}

}  // namespace genfil
