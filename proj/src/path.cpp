#include "genfil/path.hpp"

#include "genfil/errors.hpp"

namespace genfil {

Path::Path(std::uint64_t code, int length) : code_(code), length_(length) {
    if (length < 0 || length > kMaxLength) throw SizeError("path length out of range");
    if (length < 64 && (code >> length) != 0) throw ParameterError("path code has bits beyond its length");
}

Path Path::parse(std::string_view bits) {
    if (bits == "*" || bits.empty()) return Path();
    if (bits.size() > static_cast<std::size_t>(kMaxLength)) throw SizeError("path string too long");
    std::uint64_t code = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw ParameterError("path strings may only contain 0 and 1: '" + std::string(bits) + "'");
        code = (code << 1) | static_cast<std::uint64_t>(c - '0');
    }
    return Path(code, static_cast<int>(bits.size()));
}

int Path::bit(int k) const {
    if (k < 1 || k > length_) throw ParameterError("bit index out of range");
    return static_cast<int>((code_ >> (length_ - k)) & 1U);
}

Path Path::with_bit(int k, int value) const {
    if (k < 1 || k > length_) throw ParameterError("bit index out of range");
    const std::uint64_t mask = std::uint64_t{1} << (length_ - k);
    return Path(value ? (code_ | mask) : (code_ & ~mask), length_);
}

Path Path::prefix(int m) const {
    if (m < 0 || m > length_) throw ParameterError("prefix length out of range");
    return Path(code_ >> (length_ - m), m);
}

Path Path::append(int d) const {
    return Path((code_ << 1) | static_cast<std::uint64_t>(d != 0), length_ + 1);
}

std::string Path::to_string() const {
    if (length_ == 0) return "*";
    std::string out(static_cast<std::size_t>(length_), '0');
    for (int k = 1; k <= length_; ++k) out[static_cast<std::size_t>(k - 1)] = static_cast<char>('0' + bit(k));
    return out;
}

}  // namespace genfil
