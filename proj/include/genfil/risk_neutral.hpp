#pragma once

#include "genfil/binomial_filtration.hpp"
#include "genfil/market.hpp"
#include "genfil/prob_core.hpp"
#include "genfil/timegrid.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace genfil {

struct MartingaleConstants {
    double c1 = 0.0;  // (1 + δμ + √δσ) / (1 + δr)
    double c0 = 0.0;  // (1 + δμ - √δσ) / (1 + δr)
};

MartingaleConstants martingale_constants(const MarketParams& params);

struct QPair {
    double q1 = 0.5;
    double q0 = 0.5;
};

/// The solution of c1 x + c0 (1 - x) = 1, i.e. q1 = 1/2 - (μ - r) / (2^{N/2+1} σ).
/// Throws NoArbitrageBoundError unless |μ - r| < 2^{N/2} σ.
QPair q_star(const MarketParams& params);

/// Transition probabilities q_t(ω) for t ∈ (0, horizon], one per path ending
/// at t, with q_t(ω0) + q_t(ω1) = 1 for every parent ω.
class QFunction {
public:
    /// Every pair set to (q1, 1 - q1).
    static QFunction constant(int N, const GridTime& horizon, double q1);

    int resolution() const noexcept { return N_; }
    const GridTime& horizon() const noexcept { return horizon_; }

    /// q at the path w of length t.step().
    double at(const GridTime& t, const Path& w) const;
    double at(const Path& w) const;
    /// q(parent 1) = q1 and q(parent 0) = 1 - q1. Throws unless q1 ∈ [0,1].
    void set_pair(const Path& parent, double q1);

    /// Q_t(ω) = Π_k q_k(ω|k) over all paths of length t.step().
    SpacePtr measure_at(const GridTime& t) const;

private:
    QFunction(int N, GridTime horizon);

    int N_ = 0;
    GridTime horizon_;
    std::vector<std::vector<double>> q_;  // q_[k-1][code] for paths of length k
};

/// A filtration with the base's outcome sets and maps and the product
/// measures generated by q.
class RiskNeutralFiltration {
public:
    RiskNeutralFiltration(Filtration base, QFunction q);

    const Filtration& base() const noexcept { return base_; }
    const QFunction& q() const noexcept { return q_; }
    const GridTime& horizon() const noexcept { return base_.horizon(); }
    /// Q_t as generated from q.
    const SpacePtr& measure_at(const GridTime& t) const { return filtration_.space_at(t); }
    /// The base's maps over the Q measures.
    const Filtration& filtration() const noexcept { return filtration_; }

private:
    Filtration base_;
    QFunction q_;
    Filtration filtration_;
};

/// q ≡ q_star. Requires every one-step arrow of `base` to be full.
RiskNeutralFiltration build_rn_full(const Filtration& base, const MarketParams& params);

/// Free choices on invisible nodes: path ω11 ↦ q(ω11), with q(ω10) = 1 - q(ω11).
using FreeQ = std::map<Path, double>;

/// q for a base whose one-step arrows are full or drop. At a node ω whose
/// outgoing arrow is drop, q(ω1) = 0 and q(ω0) = 1; below a Q-null node the
/// pair is taken from `free` (default q_star); everywhere else q_star.
RiskNeutralFiltration build_rn_drop(const Filtration& base, const MarketParams& params, const FreeQ& free = {});

struct MartingaleNode {
    GridTime t;
    Path path;
    double q_mass = 0.0;
    /// Q_t(ω) - c1 Q_{t+δ}(I(1,ω)) - c0 Q_{t+δ}(I(0,ω)).
    double iiff_residual = 0.0;
    /// E(S'_{t+δ})(ω) - S'_t(ω); only on nodes with positive Q mass.
    std::optional<double> direct_residual;
};

struct MartingaleReport {
    std::size_t nodes_checked = 0;
    double max_iiff_residual = 0.0;
    double max_direct_residual = 0.0;
    std::vector<MartingaleNode> failures;
    std::string note;

    bool ok() const noexcept { return failures.empty(); }
};

/// Both forms of the one-step martingale condition at every node of every
/// t < horizon.
MartingaleReport martingale_check(const RiskNeutralFiltration& rn, const MarketParams& params,
                                  const GridTime& horizon, double eps = kEqTolerance);

struct QcondWitness {
    GridTime t;
    Path path;
    double residual = 0.0;
};

struct QcondReport {
    bool sibling_sums = true;        // Q_{t+δ}({ω0, ω1}) = Q_t(ω)
    bool full_preserving = true;     // full_{t,t+δ} is measure-preserving
    bool product_form = true;        // Q is generated by some q with pair sums 1
    std::vector<QcondWitness> sibling_witnesses;
    std::vector<QcondWitness> full_witnesses;
    std::vector<QcondWitness> product_witnesses;

    bool consistent() const noexcept {
        return sibling_sums == full_preserving && full_preserving == product_form;
    }
    bool all_pass() const noexcept { return sibling_sums && full_preserving && product_form; }
};

/// The three equivalent conditions on a measure family indexed by grid step
/// (measures[k] lives on all paths of length k, i.e. at time k 2^-N).
QcondReport qcond_equivalences(const std::vector<SpacePtr>& measures, int N, double eps = kEqTolerance);
QcondReport qcond_equivalences(const RiskNeutralFiltration& rn, const GridTime& horizon, double eps = kEqTolerance);

struct NullWitness {
    GridTime s;
    GridTime t;
    Path path;
    double pulled_back_mass = 0.0;
};

struct NullPreservingReport {
    std::size_t arrows_checked = 0;
    std::vector<NullWitness> violations;

    bool ok() const noexcept { return violations.empty(); }
};

/// Null-preservation of every arrow s <= t <= horizon with respect to Q.
NullPreservingReport verify_null_preserving_under_Q(const RiskNeutralFiltration& rn, const GridTime& horizon,
                                                    double eps = kMassTolerance);

/// Nodes (t, ω) with Q_t(ω) = 0 < P_t(ω), in (t, path) order.
std::vector<std::pair<GridTime, Path>> equivalence_witnesses(const RiskNeutralFiltration& rn, const GridTime& horizon,
                                                             double eps = kMassTolerance);

}  // namespace genfil
