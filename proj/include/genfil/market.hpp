#pragma once

#include "genfil/binomial_filtration.hpp"
#include "genfil/prob_core.hpp"
#include "genfil/timegrid.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace genfil {

struct MarketParams {
    double mu = 0.0;     // drift per unit time
    double sigma = 0.0;  // volatility per sqrt(time)
    double r = 0.0;      // rate per unit time
    double s0 = 1.0;
    int N = 0;

    double delta() const;       // 2^-N
    double sqrt_delta() const;  // 2^{-N/2}
    double up_factor() const { return 1.0 + delta() * mu + sqrt_delta() * sigma; }
    double down_factor() const { return 1.0 + delta() * mu - sqrt_delta() * sigma; }
    double growth() const { return 1.0 + delta() * r; }
    /// 2^{N/2} sigma, the no-arbitrage bound on |mu - r|.
    double arbitrage_bound() const;
    /// |mu - r| < 2^{N/2} sigma, with values within a relative 1e-12 of the
    /// bound counted as on it (0.42 - 0.02 is 0.3999... in binary).
    bool strictly_inside_bound() const;

    /// Throws ParameterError unless sigma > 0, r > -1, mu > sigma - 1, s0 > 0
    /// and the down factor is strictly positive at this N.
    void validate() const;
};

/// One random variable per grid time 0, δ, ..., horizon.
struct AdaptedProcess {
    std::vector<RandomVariable> slices;

    const RandomVariable& at(const GridTime& t) const { return slices.at(static_cast<std::size_t>(t.step())); }
    GridTime horizon(int N) const { return GridTime(static_cast<std::int64_t>(slices.size()) - 1, N); }
};

/// Portfolios (φ_t, ψ_t) for t ∈ (0, horizon], each a function on B_{t-δ}
/// stored densely by path code.
struct Strategy {
    int N = 0;
    GridTime horizon;
    std::vector<std::vector<double>> phi;  // phi[k-1] is φ at time kδ
    std::vector<std::vector<double>> psi;

    static Strategy zero(int N, const GridTime& horizon);

    double phi_at(const GridTime& t, const Path& w) const;
    double psi_at(const GridTime& t, const Path& w) const;
    void set(const GridTime& t, const Path& w, double phi_value, double psi_value);
    /// Whether a portfolio is defined for time t.
    bool covers(const GridTime& t) const { return !t.is_zero() && t <= horizon; }
};

AdaptedProcess stock_process(const Filtration& F, const MarketParams& params, const GridTime& horizon);
AdaptedProcess bond_process(const Filtration& F, const MarketParams& params, const GridTime& horizon);
AdaptedProcess discounted_stock(const Filtration& F, const MarketParams& params, const GridTime& horizon);

/// V_0 = S_0 φ_δ + b_0 ψ_δ; V_t = S_t (φ_t ∘ f) + b_t (ψ_t ∘ f) for t > 0.
AdaptedProcess portfolio_value(const Strategy& strat, const Filtration& F, const MarketParams& params,
                               const GridTime& horizon);

/// G_0 = -V_0; G_t = V_t - (S_t φ_{t+δ} + b_t ψ_{t+δ}) for t > 0, with the
/// portfolio after the strategy's horizon taken as zero (liquidation).
AdaptedProcess gain_process(const Strategy& strat, const Filtration& F, const MarketParams& params,
                            const GridTime& horizon);

struct NodeResidual {
    GridTime t;
    Path path;
    double residual = 0.0;
};

using NodeFilter = std::function<bool(const GridTime&, const Path&)>;

struct SelfFinancingReport {
    std::vector<NodeResidual> violations;
    double max_residual = 0.0;
    std::size_t nodes_checked = 0;

    bool ok() const noexcept { return violations.empty(); }
};

/// S_t φ_{t+δ} + b_t ψ_{t+δ} = V_t for every 0 < t < horizon (and every node
/// accepted by `filter`, when given).
SelfFinancingReport is_self_financing(const Strategy& strat, const Filtration& F, const MarketParams& params,
                                      const GridTime& horizon, double eps = kEqTolerance,
                                      const NodeFilter& filter = {});

struct ArbitrageResult {
    enum class Status { within_bound, constructed };

    Status status = Status::within_bound;
    std::optional<Strategy> strategy;
    /// All p ∈ {0,1} up to the horizon: positivity with positive probability
    /// cannot be certified.
    bool trivial_filtration = false;
    bool verified = false;
    std::string message;
};

/// Builds the zero-cost long (μ - r >= 2^{N/2}σ) or short (r - μ >= 2^{N/2}σ)
/// strategy with φ = ±1 and ψ = -(S/b) φ; nothing when the strict bound holds.
ArbitrageResult detect_arbitrage(const Filtration& F, const MarketParams& params, const GridTime& horizon);

/// P_t(G_t >= 0) = 1 for all t and P_{t0}(G_{t0} > 0) > 0 for some t0.
bool is_arbitrage(const Strategy& strat, const Filtration& F, const MarketParams& params, const GridTime& horizon,
                  double eps = kEqTolerance);

}  // namespace genfil
