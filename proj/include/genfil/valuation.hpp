#pragma once

#include "genfil/binomial_filtration.hpp"
#include "genfil/market.hpp"
#include "genfil/prob_core.hpp"
#include "genfil/risk_neutral.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace genfil {

/// A payoff Y on B_T, stored by path code.
struct Claim {
    GridTime maturity;
    std::vector<double> values;

    static Claim from_function(const GridTime& maturity, const std::function<double(const Path&)>& payoff);
    /// Requires a value for every path of length maturity.step().
    static Claim table(const GridTime& maturity, const std::map<Path, double>& values);
    /// Payoffs of S_T computed along F's maps.
    static Claim call(const Filtration& F, const MarketParams& params, const GridTime& maturity, double strike);
    static Claim put(const Filtration& F, const MarketParams& params, const GridTime& maturity, double strike);
    /// Pays 1 when S_T > strike.
    static Claim digital(const Filtration& F, const MarketParams& params, const GridTime& maturity, double strike);

    double at(const Path& w) const;
};

/// Y_t for t = 0, δ, ..., T.
using PriceLattice = AdaptedProcess;

/// Y_t = E^{C(ι_{t,T})}(Y / b_T), a function on B_t. Throws OrderingError if t > T.
RandomVariable price(const Claim& claim, const RiskNeutralFiltration& rn, const MarketParams& params,
                     const GridTime& t);
PriceLattice price_lattice(const Claim& claim, const RiskNeutralFiltration& rn, const MarketParams& params);

/// b_t Y_t at every node: the price in time-t money.
PriceLattice nodal_prices(const PriceLattice& lattice, const RiskNeutralFiltration& rn, const MarketParams& params);

/// f = g ∘ full for a one-step map f: B_{t+δ} -> B_t.
struct GFactorization {
    bool ok = false;
    std::vector<Path> g;                // g(ω) by code of ω ∈ B_t, when ok
    std::optional<Path> separating;     // some ω with f(ω0) != f(ω1), when not ok
};

GFactorization g_factorize(const ProbMorphism& one_step);

struct Replication {
    Strategy strategy;
    /// Values from the backward recursion, V_T = Y.
    AdaptedProcess value;
    /// Nodes in the image of g_t with positive Q mass (t < T), or with
    /// positive Q mass (t = T). Indexed by step then path code.
    std::vector<std::vector<bool>> covered;
};

/// Backward construction of (φ, ψ) on the g-image nodes. Throws
/// FactorizationError naming the step when some one-step map does not factor
/// through full.
Replication replicate(const Claim& claim, const RiskNeutralFiltration& rn, const MarketParams& params);

struct ReplicationIssue {
    std::string check;  // "self_financing", "terminal", "vn_pre", "price"
    GridTime t;
    Path path;
    double residual = 0.0;
};

struct ReplicationReport {
    std::size_t self_financing_nodes = 0;
    std::size_t terminal_nodes = 0;
    std::size_t vn_pre_nodes = 0;
    std::size_t price_nodes = 0;
    double max_self_financing = 0.0;
    double max_terminal = 0.0;
    double max_vn_pre = 0.0;
    double max_price = 0.0;
    std::vector<ReplicationIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
};

/// Self-financing on covered nodes, V_T = Y on Q-positive paths, the one-step
/// value identity at every node, and V_t = b_t Y_t on covered nodes.
ReplicationReport replication_check(const Strategy& strat, const Claim& claim, const RiskNeutralFiltration& rn,
                                    const MarketParams& params, double eps = kEqTolerance);

}  // namespace genfil
