#include "genfil/timegrid.hpp"

#include "genfil/errors.hpp"

#include <cmath>

namespace genfil {

namespace {

constexpr int kMaxResolution = 48;

void require_same_resolution(const GridTime& a, const GridTime& b) {
    if (a.resolution() != b.resolution()) {
        throw ResolutionError("grid times " + a.to_string() + " (N=" +
                              std::to_string(a.resolution()) + ") and " + b.to_string() +
                              " (N=" + std::to_string(b.resolution()) +
                              ") have different resolutions");
    }
}

}  // namespace

GridTime::GridTime(std::int64_t n, int N) : n_(n), N_(N) {
    if (n < 0) throw ParameterError("grid step index must be non-negative");
    if (N < 0 || N > kMaxResolution) throw ParameterError("resolution out of range");
}

double GridTime::value() const noexcept {
    return std::ldexp(static_cast<double>(n_), -N_);
}

GridTime GridTime::refine(int M) const {
    if (M < N_) throw ResolutionError("cannot refine to a coarser resolution");
    return GridTime(n_ << (M - N_), M);
}

GridTime GridTime::prev() const {
    if (n_ == 0) throw OrderingError("time 0 has no predecessor");
    return GridTime(n_ - 1, N_);
}

std::string GridTime::to_string() const {
    // n / 2^N has a finite decimal expansion of at most N fractional digits:
    // n / 2^N = n * 5^N / 10^N.
    const std::int64_t whole = n_ >> N_;
    std::int64_t frac = n_ - (whole << N_);
    std::string out = std::to_string(whole);
    if (frac == 0) return out;
    out += '.';
    for (int i = 0; i < N_ && frac != 0; ++i) {
        frac *= 10;
        out += static_cast<char>('0' + (frac >> N_));
        frac &= (std::int64_t{1} << N_) - 1;
    }
    return out;
}

std::strong_ordering operator<=>(const GridTime& a, const GridTime& b) noexcept {
    const int M = a.N_ > b.N_ ? a.N_ : b.N_;
    const std::int64_t lhs = a.n_ << (M - a.N_);
    const std::int64_t rhs = b.n_ << (M - b.N_);
    return lhs <=> rhs;
}

std::vector<GridTime> grid_points(IntervalKind kind, const GridTime& s, const GridTime& t) {
    require_same_resolution(s, t);
    if (s > t) throw OrderingError("interval endpoints out of order: " + s.to_string() + " > " + t.to_string());
    std::int64_t lo = s.step();
    std::int64_t hi = t.step();
    if (kind == IntervalKind::left_open || kind == IntervalKind::open) ++lo;
    if (kind == IntervalKind::right_open || kind == IntervalKind::open) --hi;
    std::vector<GridTime> out;
    for (std::int64_t n = lo; n <= hi; ++n) out.emplace_back(n, s.resolution());
    return out;
}

TimeArrow arrow(const GridTime& s, const GridTime& t) {
    require_same_resolution(s, t);
    if (s > t) throw OrderingError("no arrow from " + t.to_string() + " to later time " + s.to_string());
    return TimeArrow{t, s};
}

TimeArrow compose(const TimeArrow& outer, const TimeArrow& inner) {
    if (!(inner.target == outer.source)) {
        throw OrderingError("arrows are not composable: inner ends at " + inner.target.to_string() +
                            ", outer starts at " + outer.source.to_string());
    }
    return arrow(outer.target, inner.source);
}

std::int64_t bits_until(const GridTime& t) { return t.step(); }

}  // namespace genfil
