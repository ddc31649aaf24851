#include "genfil/valuation.hpp"

#include "genfil/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace genfil {

namespace {

std::size_t idx(const Path& w) { return static_cast<std::size_t>(w.code()); }
std::size_t slot(const GridTime& t) { return static_cast<std::size_t>(t.step()); }

void require_maturity(const Claim& claim, const RiskNeutralFiltration& rn) {
    if (claim.maturity.resolution() != rn.base().resolution()) throw ResolutionError("claim maturity is at another resolution");
    if (claim.maturity > rn.horizon()) throw OrderingError("claim maturity is past the filtration's horizon");
}

Claim from_stock(const Filtration& F, const MarketParams& params, const GridTime& maturity,
                 const std::function<double(double)>& payoff) {
    const auto S = stock_process(F, params, maturity);
    const auto& ST = S.at(maturity);
    Claim c;
    c.maturity = maturity;
    c.values.resize(ST.values().size());
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] = payoff(ST[i]);
    return c;
}

std::string step_name(const GridTime& t) { return t.to_string() + "->" + t.next().to_string(); }

/// Nodes at t that lie in g_t's image (all nodes when g does not exist) and
/// carry positive Q mass; at the maturity every Q-positive node.
std::vector<std::vector<bool>> covered_nodes(const RiskNeutralFiltration& rn, const GridTime& T) {
    const auto& F = rn.filtration();
    std::vector<std::vector<bool>> covered;
    for (GridTime t(0, F.resolution()); t <= T; t = t.next()) {
        const auto& Q = *F.space_at(t);
        std::vector<bool> in_image(Q.size(), true);
        if (t < T) {
            const auto g = g_factorize(F.one_step(t));
            if (g.ok) {
                std::fill(in_image.begin(), in_image.end(), false);
                for (const auto& gamma : g.g) in_image[idx(gamma)] = true;
            }
        }
        std::vector<bool> row(Q.size());
        for (std::size_t i = 0; i < Q.size(); ++i) row[i] = in_image[i] && Q.weight(i) > kMassTolerance;
        covered.push_back(std::move(row));
    }
    return covered;
}

}  // namespace

Claim Claim::from_function(const GridTime& maturity, const std::function<double(const Path&)>& payoff) {
    if (maturity.step() > max_bits()) throw SizeError("claim maturity exceeds the enumeration cap");
    Claim c;
    c.maturity = maturity;
    const std::size_t n = std::size_t{1} << maturity.step();
    c.values.resize(n);
    for (std::size_t code = 0; code < n; ++code) c.values[code] = payoff(Path(code, static_cast<int>(maturity.step())));
    return c;
}

Claim Claim::table(const GridTime& maturity, const std::map<Path, double>& values) {
    for (const auto& [w, v] : values) {
        if (w.length() != maturity.step()) {
            throw ParameterError("payoff table path " + w.to_string() + " does not end at the maturity");
        }
    }
    return from_function(maturity, [&](const Path& w) {
        auto it = values.find(w);
        if (it == values.end()) throw ParameterError("payoff table has no value for path " + w.to_string());
        return it->second;
    });
}

Claim Claim::call(const Filtration& F, const MarketParams& params, const GridTime& maturity, double strike) {
    return from_stock(F, params, maturity, [strike](double s) { return std::max(s - strike, 0.0); });
}

Claim Claim::put(const Filtration& F, const MarketParams& params, const GridTime& maturity, double strike) {
    return from_stock(F, params, maturity, [strike](double s) { return std::max(strike - s, 0.0); });
}

Claim Claim::digital(const Filtration& F, const MarketParams& params, const GridTime& maturity, double strike) {
    return from_stock(F, params, maturity, [strike](double s) { return s > strike ? 1.0 : 0.0; });
}

double Claim::at(const Path& w) const {
    if (w.length() != maturity.step()) throw ParameterError("path " + w.to_string() + " does not end at the maturity");
    return values.at(idx(w));
}

RandomVariable price(const Claim& claim, const RiskNeutralFiltration& rn, const MarketParams& params,
                     const GridTime& t) {
    require_maturity(claim, rn);
    if (t > claim.maturity) throw OrderingError("price requested at t=" + t.to_string() + " after the maturity");
    const auto& F = rn.filtration();
    const auto b = bond_process(F, params, claim.maturity);
    const auto& bT = b.at(claim.maturity);
    std::vector<double> discounted(claim.values.size());
    for (std::size_t i = 0; i < discounted.size(); ++i) discounted[i] = claim.values[i] / bT[i];
    const RandomVariable Y(F.space_at(claim.maturity), std::move(discounted));
    return conditional_expectation(Y, F.morphism_at(arrow(t, claim.maturity)));
}

PriceLattice price_lattice(const Claim& claim, const RiskNeutralFiltration& rn, const MarketParams& params) {
    PriceLattice lattice;
    for (GridTime t(0, claim.maturity.resolution()); t <= claim.maturity; t = t.next()) {
        lattice.slices.push_back(price(claim, rn, params, t));
    }
    return lattice;
}

PriceLattice nodal_prices(const PriceLattice& lattice, const RiskNeutralFiltration& rn, const MarketParams& params) {
    const auto& F = rn.filtration();
    const auto b = bond_process(F, params, lattice.horizon(F.resolution()));
    PriceLattice out;
    for (std::size_t k = 0; k < lattice.slices.size(); ++k) {
        const auto& y = lattice.slices[k];
        std::vector<double> v(y.values().size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = b.slices[k][i] * y[i];
        out.slices.emplace_back(y.space(), std::move(v));
    }
    return out;
}

GFactorization g_factorize(const ProbMorphism& one_step) {
    const auto& src = *one_step.source();
    const auto& tgt = *one_step.target();
    GFactorization out;
    if (!src.dense() || !tgt.dense() || src.size() != 2 * tgt.size()) {
        throw ParameterError("g_factorize needs a one-step map between full path spaces");
    }
    out.g.reserve(tgt.size());
    for (std::size_t code = 0; code < tgt.size(); ++code) {
        const Path& low = one_step.image(2 * code);
        const Path& high = one_step.image(2 * code + 1);
        if (low != high) {
            out.separating = tgt.outcome(code);
            out.g.clear();
            return out;
        }
        out.g.push_back(low);
    }
    out.ok = true;
    return out;
}

Replication replicate(const Claim& claim, const RiskNeutralFiltration& rn, const MarketParams& params) {
    require_maturity(claim, rn);
    params.validate();
    const auto& F = rn.filtration();
    const int N = F.resolution();
    const GridTime T = claim.maturity;
    const auto S = stock_process(F, params, T);
    const auto b = bond_process(F, params, T);

    std::vector<GFactorization> gs;
    for (GridTime t(0, N); t < T; t = t.next()) {
        auto g = g_factorize(F.one_step(t));
        if (!g.ok) {
            throw FactorizationError("one-step map " + step_name(t) + " does not factor through full: " +
                                         g.separating->to_string() + "0 and " + g.separating->to_string() +
                                         "1 have different images",
                                     step_name(t));
        }
        gs.push_back(std::move(g));
    }

    const double bound = params.arbitrage_bound();
    const double excess = params.mu - params.r;
    const double phi_denominator = std::pow(2.0, 1.0 - 0.5 * N) * params.sigma;
    const double value_denominator = 2.0 * bound * params.growth();

    Replication rep;
    rep.strategy = Strategy::zero(N, T);
    std::vector<std::vector<double>> V(slot(T) + 1);
    V[slot(T)] = claim.values;
    for (GridTime t = T; !t.is_zero();) {
        t = t.prev();
        const auto& g = gs[slot(t)];
        const auto& space = *F.space_at(t);
        std::vector<double> vt(space.size(), 0.0);
        std::vector<bool> done(space.size(), false);
        for (std::size_t code = 0; code < space.size(); ++code) {
            const std::size_t gamma = idx(g.g[code]);
            if (done[gamma]) continue;
            // The representative is γ itself when g fixes it, else the first preimage.
            const std::size_t rep_code = idx(g.g[gamma]) == gamma ? gamma : code;
            const Path rep_path = space.outcome(rep_code);
            const double v1 = V[slot(t) + 1][idx(rep_path.append(1))];
            const double v0 = V[slot(t) + 1][idx(rep_path.append(0))];
            const double s = S.at(t)[gamma];
            if (!(s > 0.0)) {
                throw FactorizationError("stock price is not positive at " + space.outcome(gamma).to_string(), step_name(t));
            }
            const double phi = (v1 - v0) / (phi_denominator * s);
            const double value = ((bound - excess) * v1 + (bound + excess) * v0) / value_denominator;
            const double psi = (value - s * phi) / b.at(t)[gamma];
            rep.strategy.set(t.next(), space.outcome(gamma), phi, psi);
            vt[gamma] = value;
            done[gamma] = true;
        }
        for (std::size_t code = 0; code < space.size(); ++code) vt[code] = vt[idx(g.g[code])];
        V[slot(t)] = std::move(vt);
    }
    for (GridTime t(0, N); t <= T; t = t.next()) rep.value.slices.emplace_back(F.space_at(t), V[slot(t)]);
    rep.covered = covered_nodes(rn, T);
    return rep;
}

ReplicationReport replication_check(const Strategy& strat, const Claim& claim, const RiskNeutralFiltration& rn,
                                    const MarketParams& params, double eps) {
    require_maturity(claim, rn);
    const auto& F = rn.filtration();
    const int N = F.resolution();
    const GridTime T = claim.maturity;
    const auto covered = covered_nodes(rn, T);
    const auto S = stock_process(F, params, T);
    const auto b = bond_process(F, params, T);
    const auto V = portfolio_value(strat, F, params, T);
    const auto Y = nodal_prices(price_lattice(claim, rn, params), rn, params);
    ReplicationReport report;

    auto record = [&](const char* check, const GridTime& t, const Path& w, double r, double& max) {
        max = std::max(max, std::abs(r));
        if (!(std::abs(r) <= eps)) report.issues.push_back({check, t, w, r});
    };

    const auto sf = is_self_financing(strat, F, params, T, eps,
                                      [&](const GridTime& t, const Path& w) { return covered[slot(t)][idx(w)]; });
    report.self_financing_nodes = sf.nodes_checked;
    report.max_self_financing = sf.max_residual;
    for (const auto& v : sf.violations) report.issues.push_back({"self_financing", v.t, v.path, v.residual});

    const auto& Q_T = *F.space_at(T);
    for (std::size_t i = 0; i < Q_T.size(); ++i) {
        if (Q_T.weight(i) <= kMassTolerance) continue;
        ++report.terminal_nodes;
        record("terminal", T, Q_T.outcome(i), V.at(T)[i] - claim.values[i], report.max_terminal);
    }

    for (GridTime t(0, N); t < T; t = t.next()) {
        const auto& space = *F.space_at(t);
        for (std::size_t i = 0; i < space.size(); ++i) {
            if (!covered[slot(t)][i]) continue;
            ++report.price_nodes;
            record("price", t, space.outcome(i), V.at(t)[i] - Y.at(t)[i], report.max_price);
        }
        const auto g = g_factorize(F.one_step(t));
        if (!g.ok) continue;
        const double drift = params.delta() * (params.mu - params.r);
        const double vol = params.sqrt_delta() * params.sigma;
        for (std::size_t i = 0; i < space.size(); ++i) {
            const Path& gamma = g.g[i];
            const std::size_t gi = idx(gamma);
            const double held = S.at(t)[gi] * strat.phi_at(t.next(), gamma);
            const double cost = held + b.at(t)[gi] * strat.psi_at(t.next(), gamma);
            for (int d = 0; d <= 1; ++d) {
                const Path child = space.outcome(i).append(d);
                const double rhs = (drift + vol * (2.0 * d - 1.0)) * held + params.growth() * cost;
                ++report.vn_pre_nodes;
                record("vn_pre", t.next(), child, V.at(t.next())[idx(child)] - rhs, report.max_vn_pre);
            }
        }
    }
    return report;
}

}  // namespace genfil
