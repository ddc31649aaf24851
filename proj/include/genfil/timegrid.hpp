#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace genfil {

/// A dyadic time n * 2^-N stored as the exact pair (n, N).
///
/// Comparison is by represented value, so 1/2 at N=1 equals 2/4 at N=2.
/// Arrows and intervals, on the other hand, require a shared resolution.
class GridTime {
public:
    constexpr GridTime() = default;
    GridTime(std::int64_t n, int N);

    std::int64_t step() const noexcept { return n_; }
    int resolution() const noexcept { return N_; }

    double value() const noexcept;

    /// The same instant expressed at a finer resolution M >= N.
    GridTime refine(int M) const;

    GridTime next() const { return GridTime(n_ + 1, N_); }
    GridTime prev() const;

    bool is_zero() const noexcept { return n_ == 0; }

    /// Exact decimal expansion, e.g. "0.375" for 3/8.
    std::string to_string() const;

    friend std::strong_ordering operator<=>(const GridTime& a, const GridTime& b) noexcept;
    friend bool operator==(const GridTime& a, const GridTime& b) noexcept {
        return (a <=> b) == std::strong_ordering::equal;
    }

private:
    std::int64_t n_ = 0;
    int N_ = 0;
};

/// The unique arrow t -> s of the time category (target <= source).
struct TimeArrow {
    GridTime source;  // later time t
    GridTime target;  // earlier time s

    bool is_identity() const noexcept { return source == target; }

    friend bool operator==(const TimeArrow&, const TimeArrow&) = default;
};

enum class IntervalKind { closed, left_open, right_open, open };

/// All n * 2^-N lying in the requested interval between s and t, ascending.
std::vector<GridTime> grid_points(IntervalKind kind, const GridTime& s, const GridTime& t);

/// The arrow from t back to s. Throws OrderingError if s > t.
TimeArrow arrow(const GridTime& s, const GridTime& t);

/// outer ∘ inner, i.e. arrow(s,t) ∘ arrow(t,u) = arrow(s,u).
TimeArrow compose(const TimeArrow& outer, const TimeArrow& inner);

/// Number of grid steps in (0, t] at t's own resolution.
std::int64_t bits_until(const GridTime& t);

}  // namespace genfil
