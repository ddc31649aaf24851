#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace genfil {

/// A binomial path ω ∈ {0,1}^{(0,t]^N}, i.e. one bit per grid step.
///
/// Bits are packed with the earliest step in the most significant position,
/// so for paths of equal length numeric order of `code` is lexicographic
/// order of the bit string. The empty path `*` has length 0.
class Path {
public:
    static constexpr int kMaxLength = 62;

    constexpr Path() = default;
    Path(std::uint64_t code, int length);

    static Path root() { return Path(); }
    static Path parse(std::string_view bits);

    std::uint64_t code() const noexcept { return code_; }
    int length() const noexcept { return length_; }

    /// Bit at grid step k, 1-based (k = 1 is the earliest step).
    int bit(int k) const;
    Path with_bit(int k, int value) const;

    /// ω|_{(0,m]}: the first m bits.
    Path prefix(int m) const;

    /// Concatenation ω d.
    Path append(int d) const;

    int last_bit() const { return bit(length_); }
    Path parent() const { return prefix(length_ - 1); }

    /// "*" for the root, otherwise the bit string.
    std::string to_string() const;

    /// Shorter paths first, then lexicographic.
    friend std::strong_ordering operator<=>(const Path& a, const Path& b) noexcept {
        if (auto c = a.length_ <=> b.length_; c != 0) return c;
        return a.code_ <=> b.code_;
    }
    friend bool operator==(const Path&, const Path&) = default;

private:
    std::uint64_t code_ = 0;
    int length_ = 0;
};

}  // namespace genfil
