#pragma once

#include "genfil/binomial_filtration.hpp"
#include "genfil/market.hpp"
#include "genfil/path.hpp"
#include "genfil/timegrid.hpp"

#include <string_view>

namespace genfil::fixtures {

inline GridTime T(std::int64_t n, int N) { return GridTime(n, N); }
inline Path P(std::string_view bits) { return Path::parse(bits); }

/// N=2, μ=0.1, σ=0.2, r=0.02, s0=100.
inline MarketParams base_market() { return MarketParams{0.1, 0.2, 0.02, 100.0, 2}; }

inline Filtration full2(const GridTime& horizon, double p = 0.5) {
    return make_full_filtration(2, BernoulliParams(p), horizon);
}

/// Drop^2_{0.25,0.25}.
inline Filtration drop2(const GridTime& horizon, double p = 0.5) {
    return make_drop_filtration(2, BernoulliParams(p), GridTime(1, 2), GridTime(1, 2), horizon);
}

}  // namespace genfil::fixtures
